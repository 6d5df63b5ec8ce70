#ifndef NOR_CONFIG_HPP_
#define NOR_CONFIG_HPP_

#include <cstdint>
#include <string>
#include <vector>

namespace nor {

// Every knob of the pipeline, serializable as flat key=value text. The same
// keys are exposed as CLI flags; file values are overridden by flags.
struct Config {
  // encoder
  int image_size = 224;
  int conv_channels = 32;  // per conv layer; region dim is twice this
  int pool_window = 16;
  int visual_dim = 300;  // projected visual vector; final item vector is twice this
  // matcher
  int shared_dim = 256;
  // generator
  int embed_dim = 300;
  int hidden_dim = 512;
  int beam_size = 3;
  int max_len = 20;
  // data
  int min_freq = 1;
  int min_comment_tokens = 3;
  int val_items = 2;
  int test_items = 2;
  int candidates_k = 100;
  // training
  double lambda_reg = 1e-4;
  int batch_size = 64;
  int max_epochs = 20;
  std::uint64_t seed = 1;

  int region_count() const {
    int side = image_size / pool_window;
    return side * side;
  }
  int region_dim() const { return 2 * conv_channels; }
  int item_dim() const { return 2 * visual_dim; }

  void validate() const;

  // One "key=value" line per field, fixed order.
  std::string to_text() const;
  void set(const std::string& key, const std::string& value);

  static Config from_text(const std::string& text, const std::string& origin);
  static Config from_file(const std::string& path);
  void save(const std::string& path) const;
};

}  // namespace nor

#endif  // NOR_CONFIG_HPP_

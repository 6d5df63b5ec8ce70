#ifndef NOR_MODEL_HPP_
#define NOR_MODEL_HPP_

#include <map>
#include <string>
#include <unordered_map>
#include <vector>

#include "nor/config.hpp"
#include "nor/data.hpp"
#include "nor/encoder.hpp"
#include "nor/generator.hpp"
#include "nor/matcher.hpp"
#include "nor/params.hpp"
#include "nor/tensor.hpp"

namespace nor {

// The full parameter set plus the id -> factor-table-row resolution. One
// extra row per table serves ids unseen at construction time.
class Model {
 public:
  Model(const Config& cfg, Vocabulary vocab, std::vector<std::string> top_ids,
        std::vector<std::string> bottom_ids);

  const Config& config() const { return cfg_; }
  const Vocabulary& vocab() const { return vocab_; }
  ParameterStore& params() { return params_; }
  const ParameterStore& params() const { return params_; }
  const EncoderParams& encoder() const { return enc_; }
  const MatcherParams& matcher() const { return match_; }
  const GeneratorParams& generator() const { return gen_; }
  const std::vector<std::string>& top_ids() const { return top_ids_; }
  const std::vector<std::string>& bottom_ids() const { return bottom_ids_; }

  int top_row(const std::string& id) const;
  int bottom_row(const std::string& id) const;
  Tensor top_latent(const std::string& id) const;
  Tensor bottom_latent(const std::string& id) const;

 private:
  Config cfg_;
  Vocabulary vocab_;
  std::vector<std::string> top_ids_, bottom_ids_;
  std::unordered_map<std::string, int> top_row_, bottom_row_;
  ParameterStore params_;
  EncoderParams enc_;
  MatcherParams match_;
  GeneratorParams gen_;
  Tensor latent_tops_, latent_bottoms_;
};

// A model bound to a dataset: image loading, region-feature caching, pair
// encoding by item id, ranking, and generation.
class Runtime {
 public:
  Runtime(Model model, Dataset dataset);

  Model& model() { return model_; }
  const Model& model() const { return model_; }
  const Dataset& dataset() const { return dataset_; }

  // Decoded [3,S,S] image tensor, cached per item.
  Tensor image(const std::string& id, bool is_top);

  // Region features with gradient tracking (training path).
  PairEncoding encode(const std::string& top_id, const std::string& bottom_id);

  // Region features computed once per item and cached; only valid while
  // parameters are frozen. clear_feature_cache() after any update.
  PairEncoding encode_frozen(const std::string& top_id, const std::string& bottom_id);
  void clear_feature_cache();

  // Fills the image and feature caches for the given (id, is_top) items, the
  // conv passes fanned out over `threads`. Afterwards frozen encodings of
  // these items are cache-hit only, so they may run concurrently.
  void warm_features(const std::vector<std::pair<std::string, bool>>& items, int threads);

  double match_probability(const std::string& top_id, const std::string& bottom_id);

  // direction "bottom": query is a top, candidates are bottoms; "top" is the
  // mirror. Scores candidates by match probability, sorts descending.
  RankedList rank_candidates(const std::string& query, const std::string& direction,
                             const std::vector<std::string>& candidates);

  Hypothesis generate(const std::string& top_id, const std::string& bottom_id, int beam_size,
                      int max_len);

 private:
  Model model_;
  Dataset dataset_;
  std::map<std::pair<std::string, bool>, Tensor> image_cache_;
  std::map<std::pair<std::string, bool>, Tensor> feature_cache_;
  Tensor frozen_features(const std::string& id, bool is_top);
};

// Sidecar files that make a checkpoint self-describing: config.txt,
// vocab.txt, items.txt in the checkpoint's directory. Image paths are stored
// absolute so the checkpoint works from any working directory.
void save_run_files(const Model& model, const Catalog& catalog, const std::string& dir);

// Rebuilds a Model from a checkpoint plus its sidecars.
Model load_model(const std::string& checkpoint_path);

// Rebuilds model and image catalog, ready to rank and generate.
Runtime load_runtime(const std::string& checkpoint_path);

// The items.txt format: "tops N" header, N "id<TAB>image-path" lines, then
// "bottoms M" and M more. The line order fixes the factor-table row order.
struct ItemTable {
  std::vector<std::string> top_ids, bottom_ids;
  Catalog catalog;
};
void save_items(const std::vector<std::string>& top_ids,
                const std::vector<std::string>& bottom_ids, const Catalog& catalog,
                const std::string& path);
ItemTable load_items(const std::string& path);

}  // namespace nor

#endif  // NOR_MODEL_HPP_

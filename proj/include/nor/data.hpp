#ifndef NOR_DATA_HPP_
#define NOR_DATA_HPP_

#include <cstdint>
#include <map>
#include <string>
#include <unordered_map>
#include <vector>

namespace nor {

// Lowercases, splits on whitespace, and isolates the punctuation marks
// . , ! ? ~ ' as single-character tokens.
std::vector<std::string> tokenize(const std::string& text);

class Vocabulary {
 public:
  static constexpr int kPad = 0;
  static constexpr int kBos = 1;
  static constexpr int kEos = 2;
  static constexpr int kUnk = 3;

  Vocabulary();

  // Tokens with corpus frequency >= min_freq, ordered by (frequency desc,
  // token asc), ids assigned after the specials.
  static Vocabulary build(const std::vector<std::vector<std::string>>& corpus, int min_freq);

  int size() const { return static_cast<int>(id_to_token_.size()); }
  int encode(const std::string& token) const;  // UNK for out-of-vocabulary
  const std::string& decode(int id) const;
  bool contains(const std::string& token) const { return token_to_id_.count(token) != 0; }

  // [BOS, tokens..., EOS]
  std::vector<int> encode_comment(const std::vector<std::string>& tokens) const;
  // Renders ids as space-joined text, skipping PAD/BOS/EOS.
  std::string render(const std::vector<int>& ids) const;

  void save(const std::string& path) const;
  static Vocabulary load(const std::string& path);

 private:
  std::vector<std::string> id_to_token_;
  std::unordered_map<std::string, int> token_to_id_;
  void push(const std::string& token);
};

struct Catalog {
  // id -> image path; ordered maps give a stable item order everywhere.
  std::map<std::string, std::string> tops;
  std::map<std::string, std::string> bottoms;

  bool has_top(const std::string& id) const { return tops.count(id) != 0; }
  bool has_bottom(const std::string& id) const { return bottoms.count(id) != 0; }
  std::vector<std::string> top_ids() const;
  std::vector<std::string> bottom_ids() const;
};

struct OutfitRecord {
  std::string outfit_id;
  std::string top;
  std::string bottom;
  std::vector<std::string> comments;
};

struct Dataset {
  std::string root;
  Catalog catalog;
  std::vector<OutfitRecord> outfits;
};

// Reads images/tops, images/bottoms, and outfits.jsonl under root. Validates
// ids, drops comments shorter than min_comment_tokens, merges duplicate
// (top,bottom) records with a comment union.
Dataset load_dataset(const std::string& root, int min_comment_tokens);

// FNV-1a over the outfit file bytes; identifies the dataset in manifests.
std::uint64_t dataset_hash(const std::string& root);

struct QueryItem {
  std::string id;
  bool is_top = false;  // a held-out top queries for bottoms and vice versa
};

struct Splits {
  std::vector<QueryItem> val_queries;
  std::vector<QueryItem> test_queries;
  std::vector<OutfitRecord> train_outfits;  // outfits touching no held-out item
};

// Holds out val/test query items sampled from the items that appear in at
// least one outfit; any outfit touching a held-out item leaves the train set.
Splits split_dataset(const Dataset& dataset, int val_items, int test_items, std::uint64_t seed);

struct CandidateQuery {
  std::string query;
  std::string direction;  // "bottom": candidates are bottoms; "top": tops
  std::vector<std::string> positives;
  std::vector<std::string> candidates;
};
using CandidatePool = std::vector<CandidateQuery>;

// Per query: all positives plus k distinct sampled negatives, frozen by seed.
// Queries with no positive partner carry no ranking signal and are skipped.
CandidatePool build_candidates(const std::vector<QueryItem>& queries, const Dataset& dataset,
                               std::uint64_t seed, int k);

void save_candidates(const CandidatePool& pool, const std::string& path);
CandidatePool load_candidates(const std::string& path);

}  // namespace nor

#endif  // NOR_DATA_HPP_

#include "nor/model.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include "nor/common.hpp"
#include "nor/image.hpp"

namespace nor {

namespace fs = std::filesystem;

Model::Model(const Config& cfg, Vocabulary vocab, std::vector<std::string> top_ids,
             std::vector<std::string> bottom_ids)
    : cfg_(cfg),
      vocab_(std::move(vocab)),
      top_ids_(std::move(top_ids)),
      bottom_ids_(std::move(bottom_ids)),
      params_(cfg.seed) {
  cfg_.validate();
  for (std::size_t i = 0; i < top_ids_.size(); ++i)
    NOR_REQUIRE(top_row_.emplace(top_ids_[i], static_cast<int>(i)).second,
                "duplicate top id ", top_ids_[i]);
  for (std::size_t i = 0; i < bottom_ids_.size(); ++i)
    NOR_REQUIRE(bottom_row_.emplace(bottom_ids_[i], static_cast<int>(i)).second,
                "duplicate bottom id ", bottom_ids_[i]);

  const int ch = cfg_.conv_channels;
  const int d = cfg_.region_dim();
  const int mv = cfg_.visual_dim;
  const int m = cfg_.item_dim();
  const int n = cfg_.shared_dim;
  const int q = cfg_.hidden_dim;
  const int e = cfg_.embed_dim;
  const int v = vocab_.size();

  enc_.conv1_kernels = params_.xavier("encoder/conv1.kernels", {ch, 3, 3, 3});
  enc_.conv1_bias = params_.zeros("encoder/conv1.bias", {ch});
  enc_.conv2_kernels = params_.xavier("encoder/conv2.kernels", {ch, ch, 3, 3});
  enc_.conv2_bias = params_.zeros("encoder/conv2.bias", {ch});
  enc_.att_feature = params_.xavier("encoder/attention.feature", {d, d});
  enc_.att_context = params_.xavier("encoder/attention.context", {d, d});
  enc_.att_score = params_.xavier("encoder/attention.score", {d});
  enc_.projection = params_.xavier("encoder/projection", {mv, d});

  latent_tops_ = params_.xavier("latent/tops", {static_cast<int>(top_ids_.size()) + 1, mv});
  latent_bottoms_ =
      params_.xavier("latent/bottoms", {static_cast<int>(bottom_ids_.size()) + 1, mv});

  match_.top_proj = params_.xavier("matcher/top_proj", {n, m});
  match_.bottom_proj = params_.xavier("matcher/bottom_proj", {n, m});
  match_.readout = params_.xavier("matcher/readout", {2, n});

  gen_.init_top = params_.xavier("generator/init_top", {q, m});
  gen_.init_bottom = params_.xavier("generator/init_bottom", {q, m});
  gen_.embedding = params_.xavier("generator/embedding", {v, e});
  gen_.gru.Wz = params_.xavier("generator/gru.update_x", {q, e + d});
  gen_.gru.Uz = params_.xavier("generator/gru.update_s", {q, q});
  gen_.gru.bz = params_.zeros("generator/gru.update_bias", {q});
  gen_.gru.Wr = params_.xavier("generator/gru.reset_x", {q, e + d});
  gen_.gru.Ur = params_.xavier("generator/gru.reset_s", {q, q});
  gen_.gru.br = params_.zeros("generator/gru.reset_bias", {q});
  gen_.gru.Wh = params_.xavier("generator/gru.cand_x", {q, e + d});
  gen_.gru.Uh = params_.xavier("generator/gru.cand_s", {q, q});
  gen_.gru.bh = params_.zeros("generator/gru.cand_bias", {q});
  gen_.attention = params_.xavier("generator/attention", {q, d});
  gen_.out_state = params_.xavier("generator/out_state", {v, q});
  gen_.out_ctx = params_.xavier("generator/out_ctx", {v, d});
}

int Model::top_row(const std::string& id) const {
  auto it = top_row_.find(id);
  return it == top_row_.end() ? static_cast<int>(top_ids_.size()) : it->second;
}

int Model::bottom_row(const std::string& id) const {
  auto it = bottom_row_.find(id);
  return it == bottom_row_.end() ? static_cast<int>(bottom_ids_.size()) : it->second;
}

Tensor Model::top_latent(const std::string& id) const {
  return select_row(latent_tops_, top_row(id));
}

Tensor Model::bottom_latent(const std::string& id) const {
  return select_row(latent_bottoms_, bottom_row(id));
}

Runtime::Runtime(Model model, Dataset dataset)
    : model_(std::move(model)), dataset_(std::move(dataset)) {}

Tensor Runtime::image(const std::string& id, bool is_top) {
  auto key = std::make_pair(id, is_top);
  auto it = image_cache_.find(key);
  if (it != image_cache_.end()) return it->second;
  const auto& paths = is_top ? dataset_.catalog.tops : dataset_.catalog.bottoms;
  auto pit = paths.find(id);
  NOR_REQUIRE(pit != paths.end(), "unknown ", is_top ? "top" : "bottom", " id '", id, "'");
  Tensor t = load_image_tensor(pit->second, model_.config().image_size);
  image_cache_.emplace(key, t);
  return t;
}

PairEncoding Runtime::encode(const std::string& top_id, const std::string& bottom_id) {
  return encode_pair(image(top_id, true), image(bottom_id, false), model_.top_latent(top_id),
                     model_.bottom_latent(bottom_id), model_.encoder(),
                     model_.config().pool_window);
}

Tensor Runtime::frozen_features(const std::string& id, bool is_top) {
  auto key = std::make_pair(id, is_top);
  auto it = feature_cache_.find(key);
  if (it != feature_cache_.end()) return it->second;
  NoGrad guard;
  Tensor f = extract_features(image(id, is_top), model_.encoder(), model_.config().pool_window);
  feature_cache_.emplace(key, f);
  return f;
}

PairEncoding Runtime::encode_frozen(const std::string& top_id, const std::string& bottom_id) {
  NoGrad guard;
  return encode_pair_from_features(frozen_features(top_id, true),
                                   frozen_features(bottom_id, false),
                                   model_.top_latent(top_id), model_.bottom_latent(bottom_id),
                                   model_.encoder());
}

void Runtime::clear_feature_cache() { feature_cache_.clear(); }

void Runtime::warm_features(const std::vector<std::pair<std::string, bool>>& items,
                            int threads) {
  std::vector<std::pair<std::string, bool>> todo;
  std::set<std::pair<std::string, bool>> seen;
  for (const auto& key : items) {
    if (feature_cache_.count(key) || !seen.insert(key).second) continue;
    image(key.first, key.second);  // decode serially; the loop below only reads
    todo.push_back(key);
  }
  std::vector<Tensor> features(todo.size());
#pragma omp parallel for schedule(static) num_threads(threads) if (threads > 1)
  for (std::int64_t i = 0; i < static_cast<std::int64_t>(todo.size()); ++i) {
    NoGrad guard;
    const auto& [id, is_top] = todo[static_cast<std::size_t>(i)];
    features[static_cast<std::size_t>(i)] =
        extract_features(image(id, is_top), model_.encoder(), model_.config().pool_window);
  }
  for (std::size_t i = 0; i < todo.size(); ++i) feature_cache_.emplace(todo[i], features[i]);
}

double Runtime::match_probability(const std::string& top_id, const std::string& bottom_id) {
  PairEncoding pe = encode_frozen(top_id, bottom_id);
  return match_score(pe.v_top, pe.v_bottom, model_.matcher()).match;
}

RankedList Runtime::rank_candidates(const std::string& query, const std::string& direction,
                                    const std::vector<std::string>& candidates) {
  NOR_REQUIRE(direction == "top" || direction == "bottom",
              "direction must be 'top' or 'bottom', got '", direction, "'");
  NOR_REQUIRE(!candidates.empty(), "empty candidate list for query ", query);
  std::vector<RankedItem> scored;
  scored.reserve(candidates.size());
  for (const auto& c : candidates) {
    const bool query_is_top = direction == "bottom";
    const std::string& top_id = query_is_top ? query : c;
    const std::string& bottom_id = query_is_top ? c : query;
    scored.push_back({c, match_probability(top_id, bottom_id)});
  }
  return rank_by_score(std::move(scored));
}

Hypothesis Runtime::generate(const std::string& top_id, const std::string& bottom_id,
                             int beam_size, int max_len) {
  NoGrad guard;
  PairEncoding pe = encode_frozen(top_id, bottom_id);
  Tensor joint = joint_regions(pe.f_top, pe.f_bottom);
  return beam_search(pe.v_top, pe.v_bottom, joint, model_.generator(), beam_size, max_len);
}

void save_items(const std::vector<std::string>& top_ids,
                const std::vector<std::string>& bottom_ids, const Catalog& catalog,
                const std::string& path) {
  std::ofstream f(path, std::ios::trunc);
  NOR_REQUIRE(f.good(), "cannot write item list ", path);
  auto write_section = [&f](const char* label, const std::vector<std::string>& ids,
                            const std::map<std::string, std::string>& paths) {
    f << label << ' ' << ids.size() << '\n';
    for (const auto& id : ids) {
      auto it = paths.find(id);
      NOR_REQUIRE(it != paths.end(), "item ", id, " has no image in the catalog");
      f << id << '\t' << fs::absolute(it->second).string() << '\n';
    }
  };
  write_section("tops", top_ids, catalog.tops);
  write_section("bottoms", bottom_ids, catalog.bottoms);
  NOR_REQUIRE(f.good(), "short write to item list ", path);
}

ItemTable load_items(const std::string& path) {
  std::ifstream f(path);
  NOR_REQUIRE(f.good(), "cannot read item list ", path);
  ItemTable table;
  auto read_section = [&f, &path](const std::string& label, std::vector<std::string>& ids,
                                  std::map<std::string, std::string>& paths) {
    std::string header;
    NOR_REQUIRE(static_cast<bool>(std::getline(f, header)), "truncated item list ", path);
    std::istringstream hs(header);
    std::string word;
    std::size_t count = 0;
    NOR_REQUIRE(static_cast<bool>(hs >> word >> count) && word == label, "item list ", path,
                ": expected '", label, " N', got '", header, "'");
    ids.reserve(count);
    for (std::size_t i = 0; i < count; ++i) {
      std::string line;
      NOR_REQUIRE(static_cast<bool>(std::getline(f, line)), "truncated item list ", path);
      const auto tab = line.find('\t');
      NOR_REQUIRE(tab != std::string::npos, "item list ", path, ": malformed line '", line, "'");
      std::string id = line.substr(0, tab);
      paths[id] = line.substr(tab + 1);
      ids.push_back(std::move(id));
    }
  };
  read_section("tops", table.top_ids, table.catalog.tops);
  read_section("bottoms", table.bottom_ids, table.catalog.bottoms);
  return table;
}

void save_run_files(const Model& model, const Catalog& catalog, const std::string& dir) {
  fs::create_directories(dir);
  model.config().save((fs::path(dir) / "config.txt").string());
  model.vocab().save((fs::path(dir) / "vocab.txt").string());
  save_items(model.top_ids(), model.bottom_ids(), catalog,
             (fs::path(dir) / "items.txt").string());
}

Model load_model(const std::string& checkpoint_path) {
  const fs::path dir = fs::path(checkpoint_path).parent_path();
  Config cfg = Config::from_file((dir / "config.txt").string());
  Vocabulary vocab = Vocabulary::load((dir / "vocab.txt").string());
  ItemTable table = load_items((dir / "items.txt").string());
  Model model(cfg, std::move(vocab), std::move(table.top_ids), std::move(table.bottom_ids));
  load_checkpoint(model.params(), checkpoint_path);
  return model;
}

Runtime load_runtime(const std::string& checkpoint_path) {
  const fs::path dir = fs::path(checkpoint_path).parent_path();
  Model model = load_model(checkpoint_path);
  ItemTable table = load_items((dir / "items.txt").string());
  Dataset dataset;
  dataset.root = dir.string();
  dataset.catalog = std::move(table.catalog);
  return Runtime(std::move(model), std::move(dataset));
}

}  // namespace nor

#include "nor/data.hpp"

#include <algorithm>
#include <cctype>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "nor/common.hpp"
#include "nor/rng.hpp"

namespace nor {

namespace fs = std::filesystem;
using nlohmann::json;

std::vector<std::string> tokenize(const std::string& text) {
  static const std::string kPunct = ".,!?~'";
  std::vector<std::string> tokens;
  std::string cur;
  auto flush = [&] {
    if (!cur.empty()) {
      tokens.push_back(cur);
      cur.clear();
    }
  };
  for (unsigned char c : text) {
    if (std::isspace(c)) {
      flush();
    } else if (kPunct.find(static_cast<char>(c)) != std::string::npos) {
      flush();
      tokens.emplace_back(1, static_cast<char>(c));
    } else {
      cur.push_back(static_cast<char>(std::tolower(c)));
    }
  }
  flush();
  return tokens;
}

Vocabulary::Vocabulary() {
  push("<pad>");
  push("<bos>");
  push("<eos>");
  push("<unk>");
}

void Vocabulary::push(const std::string& token) {
  token_to_id_.emplace(token, static_cast<int>(id_to_token_.size()));
  id_to_token_.push_back(token);
}

Vocabulary Vocabulary::build(const std::vector<std::vector<std::string>>& corpus, int min_freq) {
  NOR_REQUIRE(min_freq >= 1, "min_freq must be at least 1");
  std::map<std::string, std::int64_t> freq;
  for (const auto& tokens : corpus)
    for (const auto& t : tokens) ++freq[t];
  std::vector<std::pair<std::string, std::int64_t>> entries(freq.begin(), freq.end());
  std::sort(entries.begin(), entries.end(), [](const auto& a, const auto& b) {
    if (a.second != b.second) return a.second > b.second;
    return a.first < b.first;
  });
  Vocabulary v;
  for (const auto& [token, count] : entries)
    if (count >= min_freq) v.push(token);
  return v;
}

int Vocabulary::encode(const std::string& token) const {
  auto it = token_to_id_.find(token);
  return it == token_to_id_.end() ? kUnk : it->second;
}

const std::string& Vocabulary::decode(int id) const {
  NOR_REQUIRE(id >= 0 && id < size(), "vocabulary id ", id, " out of range [0,", size(), ")");
  return id_to_token_[static_cast<std::size_t>(id)];
}

std::vector<int> Vocabulary::encode_comment(const std::vector<std::string>& tokens) const {
  std::vector<int> ids;
  ids.reserve(tokens.size() + 2);
  ids.push_back(kBos);
  for (const auto& t : tokens) ids.push_back(encode(t));
  ids.push_back(kEos);
  return ids;
}

std::string Vocabulary::render(const std::vector<int>& ids) const {
  std::string out;
  for (int id : ids) {
    if (id == kPad || id == kBos || id == kEos) continue;
    if (!out.empty()) out.push_back(' ');
    out += decode(id);
  }
  return out;
}

void Vocabulary::save(const std::string& path) const {
  std::ofstream f(path, std::ios::trunc);
  NOR_REQUIRE(f.good(), "cannot write vocabulary ", path);
  for (int id = 4; id < size(); ++id) f << id_to_token_[static_cast<std::size_t>(id)] << '\n';
  NOR_REQUIRE(f.good(), "short write to vocabulary ", path);
}

Vocabulary Vocabulary::load(const std::string& path) {
  std::ifstream f(path);
  NOR_REQUIRE(f.good(), "cannot read vocabulary ", path);
  Vocabulary v;
  std::string line;
  while (std::getline(f, line)) {
    if (line.empty()) continue;
    NOR_REQUIRE(!v.contains(line), "duplicate vocabulary token '", line, "' in ", path);
    v.push(line);
  }
  return v;
}

std::vector<std::string> Catalog::top_ids() const {
  std::vector<std::string> out;
  out.reserve(tops.size());
  for (const auto& [id, path] : tops) out.push_back(id);
  return out;
}

std::vector<std::string> Catalog::bottom_ids() const {
  std::vector<std::string> out;
  out.reserve(bottoms.size());
  for (const auto& [id, path] : bottoms) out.push_back(id);
  return out;
}

namespace {

std::map<std::string, std::string> scan_images(const std::string& dir) {
  NOR_REQUIRE(fs::is_directory(dir), "missing image directory ", dir);
  std::map<std::string, std::string> out;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (!entry.is_regular_file() || entry.path().extension() != ".png") continue;
    out.emplace(entry.path().stem().string(), entry.path().string());
  }
  return out;
}

}  // namespace

Dataset load_dataset(const std::string& root, int min_comment_tokens) {
  NOR_REQUIRE(fs::is_directory(root), "missing dataset root ", root);
  Dataset ds;
  ds.root = root;
  ds.catalog.tops = scan_images((fs::path(root) / "images" / "tops").string());
  ds.catalog.bottoms = scan_images((fs::path(root) / "images" / "bottoms").string());

  const std::string outfits_path = (fs::path(root) / "outfits.jsonl").string();
  std::ifstream f(outfits_path);
  NOR_REQUIRE(f.good(), "missing outfit file ", outfits_path);

  std::map<std::pair<std::string, std::string>, std::size_t> by_pair;
  std::string line;
  int line_no = 0;
  while (std::getline(f, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    json j;
    try {
      j = json::parse(line);
    } catch (const json::exception& e) {
      fail(cat(outfits_path, ":", line_no, ": malformed JSON: ", e.what()));
    }
    OutfitRecord rec;
    try {
      rec.outfit_id = j.at("outfit_id").get<std::string>();
      rec.top = j.at("top").get<std::string>();
      rec.bottom = j.at("bottom").get<std::string>();
      for (const auto& c : j.at("comments")) rec.comments.push_back(c.get<std::string>());
    } catch (const json::exception& e) {
      fail(cat(outfits_path, ":", line_no, ": bad record: ", e.what()));
    }
    NOR_REQUIRE(ds.catalog.has_top(rec.top), outfits_path, ":", line_no, ": unknown top id '",
                rec.top, "'");
    NOR_REQUIRE(ds.catalog.has_bottom(rec.bottom), outfits_path, ":", line_no,
                ": unknown bottom id '", rec.bottom, "'");

    std::vector<std::string> kept;
    for (auto& c : rec.comments)
      if (static_cast<int>(tokenize(c).size()) >= min_comment_tokens) kept.push_back(std::move(c));
    rec.comments = std::move(kept);

    auto key = std::make_pair(rec.top, rec.bottom);
    auto it = by_pair.find(key);
    if (it == by_pair.end()) {
      by_pair.emplace(key, ds.outfits.size());
      ds.outfits.push_back(std::move(rec));
    } else {
      auto& dst = ds.outfits[it->second].comments;
      for (auto& c : rec.comments)
        if (std::find(dst.begin(), dst.end(), c) == dst.end()) dst.push_back(std::move(c));
    }
  }
  return ds;
}

std::uint64_t dataset_hash(const std::string& root) {
  const std::string path = (fs::path(root) / "outfits.jsonl").string();
  std::ifstream f(path, std::ios::binary);
  NOR_REQUIRE(f.good(), "missing outfit file ", path);
  std::string bytes((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
  return fnv1a64(bytes);
}

Splits split_dataset(const Dataset& dataset, int val_items, int test_items, std::uint64_t seed) {
  // Candidates for holding out: items that appear in at least one outfit,
  // tagged by side so one shuffle covers both pools.
  std::set<std::string> used_tops, used_bottoms;
  for (const auto& o : dataset.outfits) {
    used_tops.insert(o.top);
    used_bottoms.insert(o.bottom);
  }
  std::vector<QueryItem> items;
  for (const auto& id : used_tops) items.push_back({id, true});
  for (const auto& id : used_bottoms) items.push_back({id, false});

  NOR_REQUIRE(val_items + test_items <= static_cast<int>(items.size()), "requested ",
              val_items, "+", test_items, " held-out items but only ", items.size(),
              " items appear in outfits");

  Rng rng(derive_seed(seed, "split"));
  rng.shuffle(items);

  Splits s;
  s.test_queries.assign(items.begin(), items.begin() + test_items);
  s.val_queries.assign(items.begin() + test_items, items.begin() + test_items + val_items);

  std::set<std::string> held_tops, held_bottoms;
  for (const auto& q : s.test_queries) (q.is_top ? held_tops : held_bottoms).insert(q.id);
  for (const auto& q : s.val_queries) (q.is_top ? held_tops : held_bottoms).insert(q.id);
  for (const auto& o : dataset.outfits)
    if (!held_tops.count(o.top) && !held_bottoms.count(o.bottom)) s.train_outfits.push_back(o);
  return s;
}

CandidatePool build_candidates(const std::vector<QueryItem>& queries, const Dataset& dataset,
                               std::uint64_t seed, int k) {
  std::map<std::string, std::set<std::string>> bottoms_of_top, tops_of_bottom;
  for (const auto& o : dataset.outfits) {
    bottoms_of_top[o.top].insert(o.bottom);
    tops_of_bottom[o.bottom].insert(o.top);
  }
  const std::vector<std::string> all_tops = dataset.catalog.top_ids();
  const std::vector<std::string> all_bottoms = dataset.catalog.bottom_ids();

  CandidatePool pool;
  for (const auto& q : queries) {
    CandidateQuery cq;
    cq.query = q.id;
    cq.direction = q.is_top ? "bottom" : "top";
    const auto& pos_map = q.is_top ? bottoms_of_top : tops_of_bottom;
    auto it = pos_map.find(q.id);
    if (it == pos_map.end() || it->second.empty()) continue;  // nothing to rank against
    cq.positives.assign(it->second.begin(), it->second.end());

    const auto& side = q.is_top ? all_bottoms : all_tops;
    std::vector<std::string> negatives;
    negatives.reserve(side.size());
    for (const auto& id : side)
      if (!it->second.count(id)) negatives.push_back(id);
    NOR_REQUIRE(static_cast<int>(negatives.size()) >= k, "query ", q.id, ": pool of ",
                negatives.size(), " negatives cannot fill k=", k);

    Rng rng(derive_seed(seed, cat("candidates/", cq.direction, "/", q.id)));
    rng.shuffle(negatives);
    negatives.resize(static_cast<std::size_t>(k));

    cq.candidates = cq.positives;
    cq.candidates.insert(cq.candidates.end(), negatives.begin(), negatives.end());
    pool.push_back(std::move(cq));
  }
  return pool;
}

void save_candidates(const CandidatePool& pool, const std::string& path) {
  std::ofstream f(path, std::ios::trunc);
  NOR_REQUIRE(f.good(), "cannot write candidate pool ", path);
  for (const auto& cq : pool) {
    json j;
    j["query"] = cq.query;
    j["direction"] = cq.direction;
    j["positives"] = cq.positives;
    j["candidates"] = cq.candidates;
    f << j.dump() << '\n';
  }
  NOR_REQUIRE(f.good(), "short write to candidate pool ", path);
}

CandidatePool load_candidates(const std::string& path) {
  std::ifstream f(path);
  NOR_REQUIRE(f.good(), "cannot read candidate pool ", path);
  CandidatePool pool;
  std::string line;
  int line_no = 0;
  while (std::getline(f, line)) {
    ++line_no;
    if (line.empty()) continue;
    json j;
    try {
      j = json::parse(line);
    } catch (const json::exception& e) {
      fail(cat(path, ":", line_no, ": malformed JSON: ", e.what()));
    }
    CandidateQuery cq;
    try {
      cq.query = j.at("query").get<std::string>();
      cq.direction = j.at("direction").get<std::string>();
      for (const auto& p : j.at("positives")) cq.positives.push_back(p.get<std::string>());
      for (const auto& c : j.at("candidates")) cq.candidates.push_back(c.get<std::string>());
    } catch (const json::exception& e) {
      fail(cat(path, ":", line_no, ": bad record: ", e.what()));
    }
    NOR_REQUIRE(cq.direction == "top" || cq.direction == "bottom", path, ":", line_no,
                ": direction must be 'top' or 'bottom', got '", cq.direction, "'");
    pool.push_back(std::move(cq));
  }
  return pool;
}

}  // namespace nor

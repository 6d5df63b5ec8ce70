#include "nor/evaluate.hpp"

#include <algorithm>
#include <cstdlib>
#include <set>

#ifdef _OPENMP
#include <omp.h>
#endif

#include <json.hpp>

#include "nor/common.hpp"
#include "nor/generator.hpp"

namespace nor {

using nlohmann::json;

int evaluation_threads(int queries) {
  int threads = 1;
#ifdef _OPENMP
  threads = omp_get_max_threads();
#endif
  if (const char* env = std::getenv("NOR_THREADS")) {
    try {
      threads = std::min(threads, std::max(1, std::stoi(env)));
    } catch (const std::exception&) {
      fail(cat("NOR_THREADS must be an integer, got '", env, "'"));
    }
  }
  return std::max(1, std::min(threads, queries));
}

std::vector<Ranking> rank_pool(Runtime& runtime, const CandidatePool& pool, int threads) {
  std::vector<Ranking> out(pool.size());
  if (pool.empty()) return out;
  if (threads <= 0) threads = evaluation_threads(static_cast<int>(pool.size()));

  std::vector<std::pair<std::string, bool>> touched;
  for (const auto& cq : pool) {
    const bool query_is_top = cq.direction == "bottom";
    touched.emplace_back(cq.query, query_is_top);
    for (const auto& c : cq.candidates) touched.emplace_back(c, !query_is_top);
  }
  runtime.warm_features(touched, threads);

#pragma omp parallel for schedule(static) num_threads(threads) if (threads > 1)
  for (std::int64_t i = 0; i < static_cast<std::int64_t>(pool.size()); ++i) {
    const auto& cq = pool[static_cast<std::size_t>(i)];
    Ranking r;
    r.items = runtime.rank_candidates(cq.query, cq.direction, cq.candidates);
    r.positives.insert(cq.positives.begin(), cq.positives.end());
    out[static_cast<std::size_t>(i)] = std::move(r);
  }
  return out;
}

SplitEvaluation evaluate_split(Runtime& runtime, const CandidatePool& pool,
                               const std::vector<QueryItem>& queries, int threads) {
  SplitEvaluation ev;
  std::vector<Ranking> rankings = rank_pool(runtime, pool, threads);
  std::vector<Ranking> bottom_dir, top_dir;
  for (std::size_t i = 0; i < pool.size(); ++i) {
    (pool[i].direction == "bottom" ? bottom_dir : top_dir).push_back(std::move(rankings[i]));
  }
  NOR_REQUIRE(!bottom_dir.empty() || !top_dir.empty(), "candidate pool is empty");
  if (!bottom_dir.empty()) ev.bottom_item = aggregate_rankings(bottom_dir);
  if (!top_dir.empty()) ev.top_item = aggregate_rankings(top_dir);

  // Generation set: outfits touching a held-out query item, with comments.
  std::set<std::string> held_tops, held_bottoms;
  for (const auto& q : queries) (q.is_top ? held_tops : held_bottoms).insert(q.id);
  std::vector<const OutfitRecord*> gen_outfits;
  for (const auto& o : runtime.dataset().outfits) {
    if (o.comments.empty()) continue;
    if (held_tops.count(o.top) || held_bottoms.count(o.bottom)) gen_outfits.push_back(&o);
  }
  if (gen_outfits.empty()) return ev;

  const Config& cfg = runtime.model().config();
  const Vocabulary& vocab = runtime.model().vocab();
  std::vector<TextPair> pairs(gen_outfits.size());
  if (threads <= 0) threads = evaluation_threads(static_cast<int>(gen_outfits.size()));
  threads = std::min(threads, static_cast<int>(gen_outfits.size()));
  std::vector<std::pair<std::string, bool>> touched;
  for (const OutfitRecord* o : gen_outfits) {
    touched.emplace_back(o->top, true);
    touched.emplace_back(o->bottom, false);
  }
  runtime.warm_features(touched, threads);
#pragma omp parallel for schedule(static) num_threads(threads) if (threads > 1)
  for (std::int64_t i = 0; i < static_cast<std::int64_t>(gen_outfits.size()); ++i) {
    const OutfitRecord& o = *gen_outfits[static_cast<std::size_t>(i)];
    Hypothesis hyp = runtime.generate(o.top, o.bottom, cfg.beam_size, cfg.max_len);
    TextPair tp;
    for (int id : hyp.tokens)
      if (id != Vocabulary::kEos && id != Vocabulary::kBos && id != Vocabulary::kPad)
        tp.candidate.push_back(vocab.decode(id));
    for (const auto& c : o.comments) tp.references.push_back(tokenize(c));
    pairs[static_cast<std::size_t>(i)] = std::move(tp);
  }
  ev.generation = aggregate_text(pairs);
  ev.has_generation = true;
  return ev;
}

std::string to_json(const SplitEvaluation& e) {
  json j;
  j["bottom_item"] = json::parse(to_json(e.bottom_item));
  j["top_item"] = json::parse(to_json(e.top_item));
  if (e.has_generation) j["generation"] = json::parse(to_json(e.generation));
  return j.dump(2) + "\n";
}

}  // namespace nor

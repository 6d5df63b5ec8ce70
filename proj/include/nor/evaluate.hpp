#ifndef NOR_EVALUATE_HPP_
#define NOR_EVALUATE_HPP_

#include <string>
#include <vector>

#include "nor/data.hpp"
#include "nor/metrics.hpp"
#include "nor/model.hpp"

namespace nor {

// Worker count for per-query fan-out: NOR_THREADS when set, else the OpenMP
// default, never more than the query count.
int evaluation_threads(int queries);

// Ranks every pool query against its frozen candidates. threads <= 0 picks
// the evaluation_threads default; 1 keeps the caller single-threaded.
std::vector<Ranking> rank_pool(Runtime& runtime, const CandidatePool& pool, int threads = 0);

struct SplitEvaluation {
  RecommendationMetrics bottom_item;  // top queries ranking bottoms
  RecommendationMetrics top_item;    // bottom queries ranking tops
  bool has_generation = false;
  GenerationMetrics generation;
};

// Recommendation metrics per direction plus generation metrics over the
// outfits that touch the split's query items and carry comments. threads as
// in rank_pool.
SplitEvaluation evaluate_split(Runtime& runtime, const CandidatePool& pool,
                               const std::vector<QueryItem>& queries, int threads = 0);

std::string to_json(const SplitEvaluation& e);

}  // namespace nor

#endif  // NOR_EVALUATE_HPP_

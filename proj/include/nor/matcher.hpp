#ifndef NOR_MATCHER_HPP_
#define NOR_MATCHER_HPP_

#include <string>
#include <vector>

#include "nor/tensor.hpp"

namespace nor {

struct MatcherParams {
  Tensor top_proj;     // [n,m]
  Tensor bottom_proj;  // [n,m]
  Tensor readout;      // [2,n]; row 0 scores "match", row 1 "no match"
};

// Log of the two-class match distribution: index 0 = match, 1 = no match.
// No bias terms anywhere in this head.
Tensor match_log_probs(const Tensor& v_top, const Tensor& v_bottom, const MatcherParams& p);

struct MatchProbability {
  double match = 0.0;
  double no_match = 0.0;
};

MatchProbability match_score(const Tensor& v_top, const Tensor& v_bottom,
                             const MatcherParams& p);

struct RankedItem {
  std::string item;
  double score = 0.0;
};
using RankedList = std::vector<RankedItem>;

// Sorts (id, match-probability) pairs by score descending, ids ascending on
// exact ties. The scoring itself lives with the model wiring; this is the
// shared ordering contract.
RankedList rank_by_score(std::vector<RankedItem> scored);

}  // namespace nor

#endif  // NOR_MATCHER_HPP_

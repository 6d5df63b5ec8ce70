#include "nor/matcher.hpp"

#include <algorithm>
#include <cmath>

#include "nor/common.hpp"

namespace nor {

Tensor match_log_probs(const Tensor& v_top, const Tensor& v_bottom, const MatcherParams& p) {
  Tensor hidden = relu(add(matvec(p.top_proj, v_top), matvec(p.bottom_proj, v_bottom)));
  return log_softmax(matvec(p.readout, hidden));
}

MatchProbability match_score(const Tensor& v_top, const Tensor& v_bottom,
                             const MatcherParams& p) {
  NoGrad guard;
  Tensor lp = match_log_probs(v_top, v_bottom, p);
  return {std::exp(lp.at(0)), std::exp(lp.at(1))};
}

RankedList rank_by_score(std::vector<RankedItem> scored) {
  NOR_REQUIRE(!scored.empty(), "ranking an empty candidate list");
  std::sort(scored.begin(), scored.end(), [](const RankedItem& a, const RankedItem& b) {
    if (a.score != b.score) return a.score > b.score;
    return a.item < b.item;
  });
  return scored;
}

}  // namespace nor

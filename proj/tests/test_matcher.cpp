// Matching head: two-class probabilities and the ranking contract.

#include <cmath>
#include <vector>

#include <doctest.h>

#include "nor/matcher.hpp"
#include "nor/params.hpp"
#include "nor/tensor.hpp"

using namespace nor;

namespace {

MatcherParams scalar_params(double w_top, double w_bottom, double read_match,
                            double read_no) {
  MatcherParams p;
  p.top_proj = Tensor::from({1, 1}, {w_top});
  p.bottom_proj = Tensor::from({1, 1}, {w_bottom});
  p.readout = Tensor::from({2, 1}, {read_match, read_no});
  return p;
}

}  // namespace

TEST_CASE("match_score reproduces the scalar worked example") {
  // h = ReLU(2*1 + (-1)*1) = 1, logits (1, 0).
  auto p = scalar_params(2.0, -1.0, 1.0, 0.0);
  Tensor vt = Tensor::from({1}, {1.0});
  Tensor vb = Tensor::from({1}, {1.0});
  auto s = match_score(vt, vb, p);
  CHECK(s.match == doctest::Approx(0.731059).epsilon(1e-6));
  CHECK(s.no_match == doctest::Approx(0.268941).epsilon(1e-6));
}

TEST_CASE("the two class probabilities always sum to one") {
  ParameterStore store(41);
  MatcherParams p;
  p.top_proj = store.xavier("tp", {3, 4});
  p.bottom_proj = store.xavier("bp", {3, 4});
  p.readout = store.xavier("r", {2, 3});
  ParameterStore inputs(42);
  for (int trial = 0; trial < 50; ++trial) {
    Tensor vt = inputs.xavier("vt" + std::to_string(trial), {4});
    Tensor vb = inputs.xavier("vb" + std::to_string(trial), {4});
    auto s = match_score(scale(vt, 10.0), scale(vb, 10.0), p);
    CHECK(s.match + s.no_match == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(s.match > 0.0);
    CHECK(s.no_match > 0.0);
  }
}

TEST_CASE("equal readout rows cannot separate the classes") {
  MatcherParams p;
  p.top_proj = Tensor::from({2, 3}, {0.3, -0.1, 0.4, 0.2, 0.5, -0.6});
  p.bottom_proj = Tensor::from({2, 3}, {0.1, 0.2, 0.3, -0.4, 0.5, 0.6});
  p.readout = Tensor::from({2, 2}, {0.7, -0.3, 0.7, -0.3});
  Tensor vt = Tensor::from({3}, {1.0, 2.0, 3.0});
  Tensor vb = Tensor::from({3}, {-1.0, 0.5, 2.0});
  auto s = match_score(vt, vb, p);
  CHECK(s.match == doctest::Approx(0.5).epsilon(1e-12));
}

TEST_CASE("match_log_probs agrees with match_score through exp") {
  auto p = scalar_params(1.5, 0.5, -0.7, 0.9);
  Tensor vt = Tensor::from({1}, {0.8});
  Tensor vb = Tensor::from({1}, {-0.4});
  Tensor lp = match_log_probs(vt, vb, p);
  auto s = match_score(vt, vb, p);
  CHECK(std::exp(lp.values()[0]) == doctest::Approx(s.match).epsilon(1e-12));
  CHECK(std::exp(lp.values()[1]) == doctest::Approx(s.no_match).epsilon(1e-12));
}

TEST_CASE("rank_by_score sorts descending and breaks ties by id") {
  RankedList ranked = rank_by_score({{"b", 0.25}, {"a", 0.75}, {"d", 0.25}, {"c", 0.5}});
  REQUIRE(ranked.size() == 4);
  CHECK(ranked[0].item == "a");
  CHECK(ranked[1].item == "c");
  CHECK(ranked[2].item == "b");  // tie with d resolved alphabetically
  CHECK(ranked[3].item == "d");
}

TEST_CASE("rank_by_score rejects empty lists and passes singletons through") {
  CHECK_THROWS(rank_by_score({}));
  auto one = rank_by_score({{"only", 0.1}});
  REQUIRE(one.size() == 1);
  CHECK(one[0].item == "only");
}

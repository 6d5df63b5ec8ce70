// Ranking and text-overlap metrics against worked examples and brute-force
// oracles written independently of the production code paths.

#include <algorithm>
#include <cmath>
#include <map>
#include <set>
#include <string>
#include <vector>

#include <doctest.h>

#include "nor/metrics.hpp"
#include "nor/rng.hpp"

using namespace nor;

namespace {

Ranking make_ranking(const std::vector<std::pair<std::string, double>>& scored,
                     const std::set<std::string>& positives) {
  Ranking r;
  for (const auto& [id, s] : scored) r.items.push_back({id, s});
  r.positives = positives;
  return r;
}

// Oracle AUC: literal enumeration of every (positive, negative) pair.
double auc_oracle(const Ranking& r) {
  std::vector<double> pos, neg;
  for (const auto& it : r.items)
    (r.positives.count(it.item) ? pos : neg).push_back(it.score);
  if (pos.empty() || neg.empty()) return 0.0;
  long long wins = 0;
  for (double p : pos)
    for (double n : neg)
      if (p > n) ++wins;
  return static_cast<double>(wins) / (static_cast<double>(pos.size()) * neg.size());
}

// Oracle AP: walk the list, precision at each positive hit.
double ap_oracle(const Ranking& r) {
  int hits = 0;
  double total = 0.0;
  for (std::size_t i = 0; i < r.items.size(); ++i) {
    if (r.positives.count(r.items[i].item)) {
      ++hits;
      total += static_cast<double>(hits) / static_cast<double>(i + 1);
    }
  }
  int npos = 0;
  for (const auto& it : r.items)
    if (r.positives.count(it.item)) ++npos;
  return npos == 0 ? 0.0 : total / npos;
}

using Toks = std::vector<std::string>;

std::map<Toks, int> ngram_counts(const Toks& t, int n) {
  std::map<Toks, int> m;
  if (static_cast<int>(t.size()) < n) return m;
  for (std::size_t i = 0; i + static_cast<std::size_t>(n) <= t.size(); ++i)
    ++m[Toks(t.begin() + static_cast<std::ptrdiff_t>(i),
             t.begin() + static_cast<std::ptrdiff_t>(i) + n)];
  return m;
}

// Oracle ROUGE-N against one reference: multiset intersection of n-grams.
Prf rouge_n_oracle(const Toks& cand, const Toks& ref, int n) {
  auto cm = ngram_counts(cand, n);
  auto rm = ngram_counts(ref, n);
  int overlap = 0, ctotal = 0, rtotal = 0;
  for (const auto& [g, c] : cm) ctotal += c;
  for (const auto& [g, c] : rm) rtotal += c;
  for (const auto& [g, c] : cm) {
    auto it = rm.find(g);
    if (it != rm.end()) overlap += std::min(c, it->second);
  }
  Prf out;
  out.precision = ctotal == 0 ? 0.0 : static_cast<double>(overlap) / ctotal;
  out.recall = rtotal == 0 ? 0.0 : static_cast<double>(overlap) / rtotal;
  out.f1 = (out.precision + out.recall) == 0.0
               ? 0.0
               : 2.0 * out.precision * out.recall / (out.precision + out.recall);
  return out;
}

// Oracle LCS by the classic quadratic table.
int lcs_oracle(const Toks& a, const Toks& b) {
  std::vector<std::vector<int>> t(a.size() + 1, std::vector<int>(b.size() + 1, 0));
  for (std::size_t i = 1; i <= a.size(); ++i)
    for (std::size_t j = 1; j <= b.size(); ++j)
      t[i][j] = a[i - 1] == b[j - 1] ? t[i - 1][j - 1] + 1 : std::max(t[i - 1][j], t[i][j - 1]);
  return t[a.size()][b.size()];
}

Prf prf_from_counts(int overlap, int ctotal, int rtotal) {
  Prf out;
  out.precision = ctotal == 0 ? 0.0 : static_cast<double>(overlap) / ctotal;
  out.recall = rtotal == 0 ? 0.0 : static_cast<double>(overlap) / rtotal;
  out.f1 = (out.precision + out.recall) == 0.0
               ? 0.0
               : 2.0 * out.precision * out.recall / (out.precision + out.recall);
  return out;
}

// Units for SU4: unigrams plus skip-bigrams with gap <= 4.
std::map<Toks, int> su4_units(const Toks& t) {
  std::map<Toks, int> m;
  for (const auto& w : t) ++m[{w}];
  for (std::size_t i = 0; i < t.size(); ++i)
    for (std::size_t j = i + 1; j < t.size() && j <= i + 5; ++j) ++m[{t[i], t[j]}];
  return m;
}

Prf su4_oracle(const Toks& cand, const Toks& ref) {
  auto cm = su4_units(cand);
  auto rm = su4_units(ref);
  int overlap = 0, ctotal = 0, rtotal = 0;
  for (const auto& [g, c] : cm) ctotal += c;
  for (const auto& [g, c] : rm) rtotal += c;
  for (const auto& [g, c] : cm) {
    auto it = rm.find(g);
    if (it != rm.end()) overlap += std::min(c, it->second);
  }
  return prf_from_counts(overlap, ctotal, rtotal);
}

// Oracle BLEU for a single reference.
double bleu_oracle(const Toks& cand, const Toks& ref, int max_n) {
  if (cand.empty()) return 0.0;
  double log_sum = 0.0;
  for (int n = 1; n <= max_n; ++n) {
    auto cm = ngram_counts(cand, n);
    auto rm = ngram_counts(ref, n);
    int clipped = 0, total = 0;
    for (const auto& [g, c] : cm) {
      total += c;
      auto it = rm.find(g);
      if (it != rm.end()) clipped += std::min(c, it->second);
    }
    if (total == 0 || clipped == 0) return 0.0;
    log_sum += std::log(static_cast<double>(clipped) / total) / max_n;
  }
  const double c = static_cast<double>(cand.size());
  const double r = static_cast<double>(ref.size());
  const double bp = c >= r ? 1.0 : std::exp(1.0 - r / c);
  return bp * std::exp(log_sum);
}

Toks random_text(Rng& rng, int max_len, int alphabet) {
  const int len = 1 + static_cast<int>(rng.uniform_int(static_cast<std::uint64_t>(max_len)));
  Toks out;
  for (int i = 0; i < len; ++i)
    out.push_back(std::string(1, static_cast<char>('a' + rng.uniform_int(
                                     static_cast<std::uint64_t>(alphabet)))));
  return out;
}

}  // namespace

TEST_CASE("average precision on the three-item worked example") {
  auto r = make_ranking({{"a", 0.9}, {"b", 0.5}, {"c", 0.4}}, {"a", "c"});
  // Positives at ranks 1 and 3: (1/1 + 2/3)/2 = 5/6.
  CHECK(average_precision(r) == doctest::Approx(5.0 / 6.0).epsilon(1e-12));
}

TEST_CASE("reciprocal rank averages the worked pair of queries") {
  auto r1 = make_ranking({{"x", 1.0}, {"p", 0.8}}, {"p"});
  auto r2 = make_ranking({{"x", 1.0}, {"y", 0.8}, {"z", 0.6}, {"p", 0.4}}, {"p"});
  CHECK(reciprocal_rank(r1) == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(reciprocal_rank(r2) == doctest::Approx(0.25).epsilon(1e-12));
  auto agg = aggregate_rankings({r1, r2});
  CHECK(agg.mrr == doctest::Approx(0.375).epsilon(1e-12));
}

TEST_CASE("auc scores the worked single-positive example at one half") {
  auto r = make_ranking({{"n2", 0.95}, {"p", 0.9}, {"n1", 0.5}}, {"p"});
  CHECK(auc(r) == doctest::Approx(0.5).epsilon(1e-12));
}

TEST_CASE("auc treats score ties as losses") {
  auto r = make_ranking({{"p", 0.7}, {"n", 0.7}}, {"p"});
  CHECK(auc(r) == 0.0);
}

TEST_CASE("perfect and inverted rankings bound the scores") {
  auto perfect = make_ranking({{"p1", 0.9}, {"p2", 0.8}, {"n", 0.1}}, {"p1", "p2"});
  CHECK(average_precision(perfect) == doctest::Approx(1.0));
  CHECK(reciprocal_rank(perfect) == doctest::Approx(1.0));
  CHECK(auc(perfect) == doctest::Approx(1.0));
  auto inverted = make_ranking({{"n1", 0.9}, {"n2", 0.8}, {"p", 0.1}}, {"p"});
  CHECK(auc(inverted) == 0.0);
  CHECK(reciprocal_rank(inverted) == doctest::Approx(1.0 / 3.0));
}

TEST_CASE("ranking metrics match oracles on a thousand random instances") {
  Rng rng(71);
  for (int trial = 0; trial < 1000; ++trial) {
    const int n = 2 + static_cast<int>(rng.uniform_int(10));
    std::vector<std::pair<std::string, double>> scored;
    std::set<std::string> positives;
    for (int i = 0; i < n; ++i) {
      std::string id = "i" + std::to_string(i);
      // Coarse scores so ties actually occur.
      double s = std::floor(rng.uniform(0.0, 5.0)) / 5.0;
      scored.push_back({id, s});
      if (rng.uniform(0.0, 1.0) < 0.4) positives.insert(id);
    }
    if (positives.empty()) positives.insert("i0");
    std::stable_sort(scored.begin(), scored.end(),
                     [](const auto& a, const auto& b) { return a.second > b.second; });
    auto r = make_ranking(scored, positives);
    CHECK(average_precision(r) == doctest::Approx(ap_oracle(r)).epsilon(1e-12));
    if (positives.size() < scored.size())
      CHECK(auc(r) == doctest::Approx(auc_oracle(r)).epsilon(1e-12));
  }
}

TEST_CASE("rouge-1 and rouge-2 reproduce the worked sentence pair") {
  TextPair pair{{"the", "cat", "sat"}, {{"the", "cat", "ran"}}};
  CHECK(rouge_n(pair, 1).f1 == doctest::Approx(2.0 / 3.0).epsilon(1e-12));
  CHECK(rouge_n(pair, 2).f1 == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(rouge_l(pair).f1 == doctest::Approx(2.0 / 3.0).epsilon(1e-12));
}

TEST_CASE("rouge-su4 on the worked two-token pair") {
  TextPair pair{{"a", "b"}, {{"a", "c"}}};
  // Units each side: {a},{b or c},{pair}; only {a} overlaps.
  CHECK(rouge_su4(pair).f1 == doctest::Approx(1.0 / 3.0).epsilon(1e-12));
}

TEST_CASE("identical texts score one everywhere") {
  TextPair pair{{"so", "cute", "love", "it"}, {{"so", "cute", "love", "it"}}};
  CHECK(rouge_n(pair, 1).f1 == doctest::Approx(1.0));
  CHECK(rouge_n(pair, 2).f1 == doctest::Approx(1.0));
  CHECK(rouge_l(pair).f1 == doctest::Approx(1.0));
  CHECK(rouge_su4(pair).f1 == doctest::Approx(1.0));
  CHECK(bleu(pair) == doctest::Approx(1.0));
}

TEST_CASE("disjoint texts score zero everywhere") {
  TextPair pair{{"a", "b"}, {{"c", "d"}}};
  CHECK(rouge_n(pair, 1).f1 == 0.0);
  CHECK(rouge_l(pair).f1 == 0.0);
  CHECK(rouge_su4(pair).f1 == 0.0);
  CHECK(bleu(pair) == 0.0);
}

TEST_CASE("bleu clips repeated candidate words and applies the brevity penalty") {
  // p1 for "the the" vs "the cat" clips to 1/2.
  TextPair rep{{"the", "the"}, {{"the", "cat"}}};
  CHECK(bleu(rep, 1) == doctest::Approx(0.5).epsilon(1e-12));
  // Candidate 3 tokens vs reference 6: BP = exp(1 - 6/3) = e^{-1}.
  TextPair brevity{{"a", "b", "c"}, {{"a", "b", "c", "d", "e", "f"}}};
  CHECK(bleu(brevity, 1) == doctest::Approx(std::exp(-1.0)).epsilon(1e-12));
  // Texts shorter than max_n have an empty n-gram level: unsmoothed BLEU is 0.
  TextPair tiny{{"a", "b"}, {{"a", "b"}}};
  CHECK(bleu(tiny, 4) == 0.0);
  CHECK(bleu(tiny, 2) == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("bleu picks the closest reference length, shorter on ties") {
  // Candidate length 3. References of length 2 and 4 tie on distance -> r=2 -> BP=1.
  TextPair pair{{"a", "b", "c"}, {{"a", "b"}, {"a", "b", "c", "d"}}};
  CHECK(bleu(pair, 1) == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("rouge with several references reports the best-f1 reference") {
  TextPair pair{{"the", "cat", "sat"}, {{"dog", "ran"}, {"the", "cat", "ran"}}};
  CHECK(rouge_n(pair, 1).f1 == doctest::Approx(2.0 / 3.0).epsilon(1e-12));
}

TEST_CASE("text metrics match oracles on a thousand random pairs") {
  Rng rng(73);
  for (int trial = 0; trial < 1000; ++trial) {
    Toks cand = random_text(rng, 8, 4);
    Toks ref = random_text(rng, 8, 4);
    TextPair pair{cand, {ref}};

    for (int n = 1; n <= 2; ++n) {
      auto got = rouge_n(pair, n);
      auto want = rouge_n_oracle(cand, ref, n);
      CHECK(got.precision == doctest::Approx(want.precision).epsilon(1e-12));
      CHECK(got.recall == doctest::Approx(want.recall).epsilon(1e-12));
      CHECK(got.f1 == doctest::Approx(want.f1).epsilon(1e-12));
    }

    const int lcs = lcs_oracle(cand, ref);
    auto want_l = prf_from_counts(lcs, static_cast<int>(cand.size()),
                                  static_cast<int>(ref.size()));
    auto got_l = rouge_l(pair);
    CHECK(got_l.precision == doctest::Approx(want_l.precision).epsilon(1e-12));
    CHECK(got_l.recall == doctest::Approx(want_l.recall).epsilon(1e-12));
    CHECK(got_l.f1 == doctest::Approx(want_l.f1).epsilon(1e-12));

    auto want_su = su4_oracle(cand, ref);
    auto got_su = rouge_su4(pair);
    CHECK(got_su.precision == doctest::Approx(want_su.precision).epsilon(1e-12));
    CHECK(got_su.f1 == doctest::Approx(want_su.f1).epsilon(1e-12));

    CHECK(bleu(pair, 2) == doctest::Approx(bleu_oracle(cand, ref, 2)).epsilon(1e-12));
    CHECK(bleu(pair, 4) == doctest::Approx(bleu_oracle(cand, ref, 4)).epsilon(1e-12));
  }
}

TEST_CASE("aggregates average their per-query values") {
  auto r1 = make_ranking({{"p", 0.9}, {"n", 0.1}}, {"p"});
  auto r2 = make_ranking({{"n", 0.9}, {"p", 0.1}}, {"p"});
  auto agg = aggregate_rankings({r1, r2});
  CHECK(agg.queries == 2);
  CHECK(agg.map == doctest::Approx((1.0 + 0.5) / 2.0).epsilon(1e-12));
  CHECK(agg.auc == doctest::Approx(0.5).epsilon(1e-12));

  // Four tokens so the 4-gram BLEU precision is defined for the match.
  TextPair same{{"a", "b", "c", "d"}, {{"a", "b", "c", "d"}}};
  TextPair diff{{"a", "b", "c", "d"}, {{"e", "f", "g", "h"}}};
  auto text = aggregate_text({same, diff});
  CHECK(text.items == 2);
  CHECK(text.rouge1.f1 == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(text.bleu == doctest::Approx(0.5).epsilon(1e-12));
}

TEST_CASE("metric json serialization is fixed-width and stable") {
  RecommendationMetrics m;
  m.map = 1.0 / 3.0;
  m.mrr = 0.25;
  m.auc = 0.5;
  m.queries = 7;
  const std::string a = to_json(m);
  const std::string b = to_json(m);
  CHECK(a == b);
  CHECK(a.find("\"map\"") != std::string::npos);
  CHECK(a.find("\"queries\"") != std::string::npos);
}

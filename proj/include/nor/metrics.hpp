#ifndef NOR_METRICS_HPP_
#define NOR_METRICS_HPP_

#include <set>
#include <string>
#include <vector>

#include "nor/matcher.hpp"

namespace nor {

// A scored ranking (descending) with the ground-truth positive ids.
struct Ranking {
  RankedList items;
  std::set<std::string> positives;
};

// Mean precision at every positive's cutoff, divided by the positive count.
double average_precision(const Ranking& r);
// 1 / (1-based rank of the first positive).
double reciprocal_rank(const Ranking& r);
// Fraction of (positive, negative) pairs where the positive scores strictly
// higher; ties count as misses.
double auc(const Ranking& r);

struct Prf {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
};

struct TextPair {
  std::vector<std::string> candidate;
  std::vector<std::vector<std::string>> references;  // at least one
};

// N-gram overlap with multiset-minimum clipping. Multiple references: the
// best-F1 reference's triple is reported.
Prf rouge_n(const TextPair& pair, int n);
// Longest common subsequence ratio.
Prf rouge_l(const TextPair& pair);
// Counting units are unigrams plus skip-bigrams with at most 4 tokens
// between the two members.
Prf rouge_su4(const TextPair& pair);
// Geometric mean of clipped 1..max_n-gram precisions with uniform weights
// times the brevity penalty; 0 when any precision is 0. Reference length r
// is the closest to the candidate length (shorter on ties).
double bleu(const TextPair& pair, int max_n = 4);

struct RecommendationMetrics {
  double map = 0.0;
  double mrr = 0.0;
  double auc = 0.0;
  int queries = 0;
};

RecommendationMetrics aggregate_rankings(const std::vector<Ranking>& rankings);

struct GenerationMetrics {
  Prf rouge1, rouge2, rouge_l, rouge_su4;
  double bleu = 0.0;
  int items = 0;
};

GenerationMetrics aggregate_text(const std::vector<TextPair>& pairs);

// {"map","mrr","auc"} / {"rouge":{"1":{"p","r","f"},...},"bleu"} fragments,
// serialized with fixed precision so reports are byte-reproducible.
std::string to_json(const RecommendationMetrics& m);
std::string to_json(const GenerationMetrics& m);

}  // namespace nor

#endif  // NOR_METRICS_HPP_

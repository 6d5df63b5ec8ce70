#include "nor/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <map>

#include <json.hpp>

#include "nor/common.hpp"

namespace nor {

using nlohmann::json;

double average_precision(const Ranking& r) {
  NOR_REQUIRE(!r.positives.empty(), "average precision needs at least one positive");
  int hits = 0;
  double sum = 0.0;
  for (std::size_t j = 0; j < r.items.size(); ++j) {
    if (r.positives.count(r.items[j].item)) {
      ++hits;
      sum += static_cast<double>(hits) / static_cast<double>(j + 1);
    }
  }
  NOR_REQUIRE(hits == static_cast<int>(r.positives.size()),
              "ranking does not contain every positive");
  return sum / static_cast<double>(r.positives.size());
}

double reciprocal_rank(const Ranking& r) {
  NOR_REQUIRE(!r.positives.empty(), "reciprocal rank needs at least one positive");
  for (std::size_t j = 0; j < r.items.size(); ++j)
    if (r.positives.count(r.items[j].item)) return 1.0 / static_cast<double>(j + 1);
  fail("ranking does not contain any positive");
}

double auc(const Ranking& r) {
  std::vector<double> pos, neg;
  for (const auto& it : r.items)
    (r.positives.count(it.item) ? pos : neg).push_back(it.score);
  NOR_REQUIRE(!pos.empty() && !neg.empty(),
              "one positive and one negative at least are needed for a pairwise ranking score");
  std::sort(neg.begin(), neg.end());
  std::int64_t wins = 0;
  for (double s : pos)
    wins += std::lower_bound(neg.begin(), neg.end(), s) - neg.begin();
  return static_cast<double>(wins) / (static_cast<double>(pos.size()) * neg.size());
}

namespace {

constexpr char kSep = '\x1f';

using Counts = std::map<std::string, std::int64_t>;

Counts ngram_counts(const std::vector<std::string>& tokens, int n) {
  Counts out;
  if (static_cast<int>(tokens.size()) < n) return out;
  for (std::size_t i = 0; i + static_cast<std::size_t>(n) <= tokens.size(); ++i) {
    std::string key = tokens[i];
    for (int k = 1; k < n; ++k) {
      key.push_back(kSep);
      key += tokens[i + static_cast<std::size_t>(k)];
    }
    ++out[key];
  }
  return out;
}

Counts su4_counts(const std::vector<std::string>& tokens) {
  Counts out;
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    ++out[tokens[i]];
    for (std::size_t j = i + 1; j < tokens.size() && j <= i + 5; ++j)
      ++out[tokens[i] + kSep + tokens[j]];
  }
  return out;
}

std::int64_t total(const Counts& c) {
  std::int64_t t = 0;
  for (const auto& [key, count] : c) t += count;
  return t;
}

std::int64_t clipped_overlap(const Counts& cand, const Counts& ref) {
  std::int64_t o = 0;
  for (const auto& [key, count] : cand) {
    auto it = ref.find(key);
    if (it != ref.end()) o += std::min(count, it->second);
  }
  return o;
}

Prf make_prf(std::int64_t overlap, std::int64_t cand_total, std::int64_t ref_total) {
  Prf out;
  out.precision = cand_total > 0 ? static_cast<double>(overlap) / cand_total : 0.0;
  out.recall = ref_total > 0 ? static_cast<double>(overlap) / ref_total : 0.0;
  const double pr = out.precision + out.recall;
  out.f1 = pr > 0.0 ? 2.0 * out.precision * out.recall / pr : 0.0;
  return out;
}

// Best-F1 reference wins; earlier reference on ties.
template <typename PerRef>
Prf best_reference(const TextPair& pair, PerRef&& per_ref) {
  NOR_REQUIRE(!pair.references.empty(), "text pair without references");
  Prf best;
  bool first = true;
  for (const auto& ref : pair.references) {
    NOR_REQUIRE(!ref.empty(), "empty reference token sequence");
    Prf cur = per_ref(ref);
    if (first || cur.f1 > best.f1) {
      best = cur;
      first = false;
    }
  }
  return best;
}

std::size_t lcs_length(const std::vector<std::string>& a, const std::vector<std::string>& b) {
  // One-row DP over the shorter side.
  const auto& rows = a.size() >= b.size() ? a : b;
  const auto& cols = a.size() >= b.size() ? b : a;
  std::vector<std::size_t> dp(cols.size() + 1, 0);
  for (std::size_t i = 1; i <= rows.size(); ++i) {
    std::size_t diag = 0;  // dp[i-1][j-1]
    for (std::size_t j = 1; j <= cols.size(); ++j) {
      const std::size_t up = dp[j];
      dp[j] = rows[i - 1] == cols[j - 1] ? diag + 1 : std::max(dp[j], dp[j - 1]);
      diag = up;
    }
  }
  return dp[cols.size()];
}

}  // namespace

Prf rouge_n(const TextPair& pair, int n) {
  NOR_REQUIRE(n >= 1, "rouge_n needs n >= 1");
  const Counts cand = ngram_counts(pair.candidate, n);
  const std::int64_t cand_total = total(cand);
  return best_reference(pair, [&](const std::vector<std::string>& ref) {
    const Counts rc = ngram_counts(ref, n);
    return make_prf(clipped_overlap(cand, rc), cand_total, total(rc));
  });
}

Prf rouge_l(const TextPair& pair) {
  return best_reference(pair, [&](const std::vector<std::string>& ref) {
    const std::size_t l = lcs_length(pair.candidate, ref);
    return make_prf(static_cast<std::int64_t>(l),
                    static_cast<std::int64_t>(pair.candidate.size()),
                    static_cast<std::int64_t>(ref.size()));
  });
}

Prf rouge_su4(const TextPair& pair) {
  const Counts cand = su4_counts(pair.candidate);
  const std::int64_t cand_total = total(cand);
  return best_reference(pair, [&](const std::vector<std::string>& ref) {
    const Counts rc = su4_counts(ref);
    return make_prf(clipped_overlap(cand, rc), cand_total, total(rc));
  });
}

double bleu(const TextPair& pair, int max_n) {
  NOR_REQUIRE(max_n >= 1, "bleu needs max_n >= 1");
  NOR_REQUIRE(!pair.references.empty(), "text pair without references");
  const std::int64_t c = static_cast<std::int64_t>(pair.candidate.size());
  if (c == 0) return 0.0;

  double log_sum = 0.0;
  for (int n = 1; n <= max_n; ++n) {
    const Counts cand = ngram_counts(pair.candidate, n);
    const std::int64_t cand_total = total(cand);
    if (cand_total == 0) return 0.0;
    // Clip against the per-n-gram maximum across references.
    Counts best_ref;
    for (const auto& ref : pair.references)
      for (const auto& [key, count] : ngram_counts(ref, n)) {
        auto& slot = best_ref[key];
        slot = std::max(slot, count);
      }
    const std::int64_t overlap = clipped_overlap(cand, best_ref);
    if (overlap == 0) return 0.0;
    log_sum += std::log(static_cast<double>(overlap) / cand_total) / max_n;
  }

  std::int64_t r = static_cast<std::int64_t>(pair.references[0].size());
  for (const auto& ref : pair.references) {
    const std::int64_t len = static_cast<std::int64_t>(ref.size());
    if (std::llabs(len - c) < std::llabs(r - c) || (std::llabs(len - c) == std::llabs(r - c) && len < r))
      r = len;
  }
  const double bp = c > r ? 1.0 : std::exp(1.0 - static_cast<double>(r) / c);
  return bp * std::exp(log_sum);
}

RecommendationMetrics aggregate_rankings(const std::vector<Ranking>& rankings) {
  NOR_REQUIRE(!rankings.empty(), "no rankings to aggregate");
  RecommendationMetrics m;
  for (const auto& r : rankings) {
    m.map += average_precision(r);
    m.mrr += reciprocal_rank(r);
    m.auc += auc(r);
  }
  m.queries = static_cast<int>(rankings.size());
  m.map /= m.queries;
  m.mrr /= m.queries;
  m.auc /= m.queries;
  return m;
}

GenerationMetrics aggregate_text(const std::vector<TextPair>& pairs) {
  NOR_REQUIRE(!pairs.empty(), "no text pairs to aggregate");
  GenerationMetrics m;
  auto acc = [](Prf& dst, const Prf& src) {
    dst.precision += src.precision;
    dst.recall += src.recall;
    dst.f1 += src.f1;
  };
  for (const auto& p : pairs) {
    acc(m.rouge1, rouge_n(p, 1));
    acc(m.rouge2, rouge_n(p, 2));
    acc(m.rouge_l, rouge_l(p));
    acc(m.rouge_su4, rouge_su4(p));
    m.bleu += bleu(p);
  }
  m.items = static_cast<int>(pairs.size());
  auto norm = [&m](Prf& x) {
    x.precision /= m.items;
    x.recall /= m.items;
    x.f1 /= m.items;
  };
  norm(m.rouge1);
  norm(m.rouge2);
  norm(m.rouge_l);
  norm(m.rouge_su4);
  m.bleu /= m.items;
  return m;
}

std::string to_json(const RecommendationMetrics& m) {
  json j;
  j["map"] = m.map;
  j["mrr"] = m.mrr;
  j["auc"] = m.auc;
  j["queries"] = m.queries;
  return j.dump();
}

std::string to_json(const GenerationMetrics& m) {
  auto prf = [](const Prf& x) {
    json j;
    j["p"] = x.precision;
    j["r"] = x.recall;
    j["f"] = x.f1;
    return j;
  };
  json j;
  j["rouge"]["1"] = prf(m.rouge1);
  j["rouge"]["2"] = prf(m.rouge2);
  j["rouge"]["l"] = prf(m.rouge_l);
  j["rouge"]["su4"] = prf(m.rouge_su4);
  j["bleu"] = m.bleu;
  j["items"] = m.items;
  return j.dump();
}

}  // namespace nor

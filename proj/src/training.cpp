#include "nor/training.hpp"

#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>

#include <json.hpp>

#include "nor/common.hpp"
#include "nor/evaluate.hpp"
#include "nor/generator.hpp"

namespace nor {

namespace fs = std::filesystem;
using nlohmann::json;

PairSet positive_pairs(const std::vector<OutfitRecord>& outfits) {
  PairSet out;
  for (const auto& o : outfits) out.emplace(o.top, o.bottom);
  return out;
}

ItemPair sample_negative(const ItemPair& positive, const std::vector<std::string>& top_pool,
                         const std::vector<std::string>& bottom_pool,
                         const PairSet& known_positives, Rng& rng) {
  NOR_REQUIRE(!top_pool.empty() && !bottom_pool.empty(), "empty item pool");
  constexpr int kMaxRetries = 1000;
  for (int attempt = 0; attempt < kMaxRetries; ++attempt) {
    ItemPair candidate = positive;
    if (rng.coin()) {
      candidate.first = top_pool[rng.uniform_int(top_pool.size())];
    } else {
      candidate.second = bottom_pool[rng.uniform_int(bottom_pool.size())];
    }
    if (!known_positives.count(candidate)) return candidate;
  }
  fail(cat("could not sample a negative for (", positive.first, ", ", positive.second, ") in ",
           kMaxRetries, " attempts; the positive set covers nearly every pair"));
}

Tensor matching_loss(const std::vector<std::pair<Tensor, bool>>& log_probs_and_labels) {
  NOR_REQUIRE(!log_probs_and_labels.empty(), "matching loss over an empty batch");
  std::vector<Tensor> terms;
  terms.reserve(log_probs_and_labels.size());
  for (const auto& [lp, is_match] : log_probs_and_labels)
    terms.push_back(pick(lp, is_match ? 0 : 1));
  return scale(add_n(terms), -1.0);
}

Tensor regularization_term(ParameterStore& params) {
  std::vector<Tensor> terms;
  params.for_each([&terms](Parameter& p) {
    if (p.regularized) terms.push_back(sum_squares(p.tensor));
  });
  if (terms.empty()) return Tensor::scalar(0.0);
  return add_n(terms);
}

std::string to_json(const EpochLog& log) {
  json j;
  j["epoch"] = log.epoch;
  j["L_mat"] = log.match_loss;
  j["L_gen"] = log.gen_loss;
  j["L_reg"] = log.reg_loss;
  j["val_map"] = log.val_map;
  j["val_mrr"] = log.val_mrr;
  j["val_auc"] = log.val_auc;
  j["seconds"] = log.seconds;
  return j.dump();
}

namespace {

struct TrainItem {
  ItemPair positive;
  std::vector<std::string> comments;  // raw text; a gold one is drawn per epoch
};

}  // namespace

TrainResult train(Runtime& runtime, const Splits& splits, const CandidatePool& val_pool,
                  const std::string& out_dir) {
  Model& model = runtime.model();
  const Config& cfg = model.config();
  fs::create_directories(out_dir);

  NOR_REQUIRE(!splits.train_outfits.empty(), "no training outfits after the split");
  const PairSet known_positives = positive_pairs(runtime.dataset().outfits);

  // Negative pools hold only items visible to training, so no held-out item
  // ever receives gradient.
  std::set<std::string> top_set, bottom_set;
  for (const auto& o : splits.train_outfits) {
    top_set.insert(o.top);
    bottom_set.insert(o.bottom);
  }
  const std::vector<std::string> top_pool(top_set.begin(), top_set.end());
  const std::vector<std::string> bottom_pool(bottom_set.begin(), bottom_set.end());

  std::vector<TrainItem> items;
  items.reserve(splits.train_outfits.size());
  for (const auto& o : splits.train_outfits) items.push_back({{o.top, o.bottom}, o.comments});

  save_run_files(model, runtime.dataset().catalog, out_dir);
  const std::string ckpt_path = (fs::path(out_dir) / "model.ckpt").string();
  const std::string log_path = (fs::path(out_dir) / "train_log.jsonl").string();
  std::ofstream log_file(log_path, std::ios::trunc);
  NOR_REQUIRE(log_file.good(), "cannot write training log ", log_path);

  AdamState adam;
  Rng rng(derive_seed(cfg.seed, "train"));
  TrainResult result;
  result.checkpoint_path = ckpt_path;
  result.log_path = log_path;
  bool have_best = false;
  double best_key = 0.0;  // val AUC, or -epoch_loss when no validation pool

  std::vector<std::size_t> order(items.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;

  for (int epoch = 1; epoch <= cfg.max_epochs; ++epoch) {
    const auto t0 = std::chrono::steady_clock::now();
    rng.shuffle(order);

    // Fresh negatives and gold comments each pass.
    std::vector<ItemPair> negatives(items.size());
    std::vector<int> comment_idx(items.size(), -1);
    for (std::size_t i : order) {
      negatives[i] = sample_negative(items[i].positive, top_pool, bottom_pool, known_positives,
                                     rng);
      if (!items[i].comments.empty())
        comment_idx[i] = static_cast<int>(rng.uniform_int(items[i].comments.size()));
    }

    EpochLog log;
    log.epoch = epoch;
    double epoch_loss = 0.0;
    const std::size_t batch_count =
        (items.size() + static_cast<std::size_t>(cfg.batch_size) - 1) /
        static_cast<std::size_t>(cfg.batch_size);

    for (std::size_t b = 0; b < batch_count; ++b) {
      const std::size_t lo = b * static_cast<std::size_t>(cfg.batch_size);
      const std::size_t hi = std::min(items.size(), lo + static_cast<std::size_t>(cfg.batch_size));

      std::vector<std::pair<Tensor, bool>> match_terms;
      std::vector<Tensor> gen_terms;
      for (std::size_t k = lo; k < hi; ++k) {
        const std::size_t i = order[k];
        PairEncoding pos = runtime.encode(items[i].positive.first, items[i].positive.second);
        match_terms.emplace_back(match_log_probs(pos.v_top, pos.v_bottom, model.matcher()),
                                 true);
        if (comment_idx[i] >= 0) {
          const std::vector<int> ids = model.vocab().encode_comment(
              tokenize(items[i].comments[static_cast<std::size_t>(comment_idx[i])]));
          gen_terms.push_back(teacher_forced_nll(pos.v_top, pos.v_bottom,
                                                 joint_regions(pos.f_top, pos.f_bottom), ids,
                                                 model.generator()));
        }
        PairEncoding neg = runtime.encode(negatives[i].first, negatives[i].second);
        match_terms.emplace_back(match_log_probs(neg.v_top, neg.v_bottom, model.matcher()),
                                 false);
      }

      Tensor l_mat = matching_loss(match_terms);
      Tensor l_gen = gen_terms.empty() ? Tensor::scalar(0.0) : add_n(gen_terms);
      Tensor l_reg = regularization_term(model.params());
      Tensor loss = add(add(l_mat, l_gen), scale(l_reg, cfg.lambda_reg));
      NOR_REQUIRE(std::isfinite(loss.item()), "non-finite loss at epoch ", epoch, ", batch ",
                  b + 1, " of ", batch_count);

      backward(loss);
      clip_gradients(model.params());
      adam_step(model.params(), adam);

      log.match_loss += l_mat.item();
      log.gen_loss += l_gen.item();
      log.reg_loss += l_reg.item();
      epoch_loss += loss.item();
    }
    log.reg_loss /= static_cast<double>(batch_count);

    runtime.clear_feature_cache();
    double key;
    if (!val_pool.empty()) {
      std::vector<Ranking> rankings = rank_pool(runtime, val_pool, 1);
      RecommendationMetrics vm = aggregate_rankings(rankings);
      log.val_map = vm.map;
      log.val_mrr = vm.mrr;
      log.val_auc = vm.auc;
      key = vm.auc;
      runtime.clear_feature_cache();
    } else {
      key = -epoch_loss;
    }

    if (!have_best || key > best_key) {
      have_best = true;
      best_key = key;
      result.best_epoch = epoch;
      result.best_val_auc = log.val_auc;
      save_checkpoint(model.params(), ckpt_path);
    }

    log.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    log_file << to_json(log) << '\n';
    log_file.flush();
    result.epochs.push_back(log);
  }

  NOR_REQUIRE(log_file.good(), "short write to training log ", log_path);
  return result;
}

double matching_accuracy(Runtime& runtime, const std::vector<ItemPair>& positives,
                         const std::vector<ItemPair>& negatives) {
  NOR_REQUIRE(!positives.empty() || !negatives.empty(), "no pairs to score");
  std::int64_t correct = 0;
  for (const auto& p : positives)
    if (runtime.match_probability(p.first, p.second) > 0.5) ++correct;
  for (const auto& p : negatives)
    if (runtime.match_probability(p.first, p.second) < 0.5) ++correct;
  return static_cast<double>(correct) / static_cast<double>(positives.size() + negatives.size());
}

}  // namespace nor

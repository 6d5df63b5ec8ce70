#ifndef NOR_TRAINING_HPP_
#define NOR_TRAINING_HPP_

#include <set>
#include <string>
#include <utility>
#include <vector>

#include "nor/data.hpp"
#include "nor/model.hpp"
#include "nor/params.hpp"
#include "nor/rng.hpp"
#include "nor/tensor.hpp"

namespace nor {

using ItemPair = std::pair<std::string, std::string>;  // (top, bottom)
using PairSet = std::set<ItemPair>;

PairSet positive_pairs(const std::vector<OutfitRecord>& outfits);

// Replaces one side of the pair (coin flip picks which) with a uniform draw
// from that side's pool, rejecting known positives. Bounded retries guard
// against pathologically dense positive sets.
ItemPair sample_negative(const ItemPair& positive, const std::vector<std::string>& top_pool,
                         const std::vector<std::string>& bottom_pool,
                         const PairSet& known_positives, Rng& rng);

// Sum of -log p(label) over the batch; index 0 of each log-prob pair is
// "match", so positives contribute -lp[0] and negatives -lp[1].
Tensor matching_loss(const std::vector<std::pair<Tensor, bool>>& log_probs_and_labels);

// Squared L2 norm over the regularized parameters only.
Tensor regularization_term(ParameterStore& params);

struct EpochLog {
  int epoch = 0;
  double match_loss = 0.0;
  double gen_loss = 0.0;
  double reg_loss = 0.0;
  double val_map = 0.0;
  double val_mrr = 0.0;
  double val_auc = 0.0;
  double seconds = 0.0;
};

std::string to_json(const EpochLog& log);

struct TrainResult {
  std::string checkpoint_path;
  std::string log_path;
  int best_epoch = 0;
  double best_val_auc = 0.0;
  std::vector<EpochLog> epochs;
};

// Epoch loop: reshuffle positives, resample one negative and one gold
// comment per positive, then per batch forward -> loss -> backward -> clip ->
// Adam. Validates on the pool every epoch and keeps the checkpoint with the
// best validation AUC (falling back to lowest epoch loss when the pool is
// empty). Writes model.ckpt, sidecar files, and train_log.jsonl under out_dir.
TrainResult train(Runtime& runtime, const Splits& splits, const CandidatePool& val_pool,
                  const std::string& out_dir);

// Fraction of pairs the matcher classifies correctly: match probability
// above one half for positives, below for the paired negatives.
double matching_accuracy(Runtime& runtime, const std::vector<ItemPair>& positives,
                         const std::vector<ItemPair>& negatives);

}  // namespace nor

#endif  // NOR_TRAINING_HPP_

#ifndef NOR_PARAMS_HPP_
#define NOR_PARAMS_HPP_

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "nor/tensor.hpp"

namespace nor {

struct Parameter {
  std::string name;
  Tensor tensor;
  bool regularized = true;  // false for biases: they stay out of the L2 penalty
};

// Named model parameters, iterated in lexicographic name order everywhere
// (updates, serialization) so runs with equal seeds are reproducible.
class ParameterStore {
 public:
  explicit ParameterStore(std::uint64_t master_seed = 0) : master_seed_(master_seed) {}

  // Xavier-initialized weight; the per-name seed is derived from the master
  // seed, so adding a parameter never perturbs another's initial values.
  Tensor xavier(const std::string& name, const Shape& shape, bool regularized = true);
  // Zero-initialized parameter (biases).
  Tensor zeros(const std::string& name, const Shape& shape, bool regularized = false);

  bool has(const std::string& name) const { return params_.count(name) != 0; }
  Tensor get(const std::string& name) const;
  const Parameter& param(const std::string& name) const;

  std::size_t size() const { return params_.size(); }
  std::int64_t total_values() const;
  std::vector<std::string> names() const;

  template <typename Fn>
  void for_each(Fn&& fn) {  // name order
    for (auto& [name, p] : params_) fn(p);
  }
  template <typename Fn>
  void for_each(Fn&& fn) const {
    for (const auto& [name, p] : params_) fn(p);
  }

  void zero_grads();

 private:
  std::uint64_t master_seed_;
  std::map<std::string, Parameter> params_;
  Tensor insert(const std::string& name, Tensor t, bool regularized);
};

struct AdamState {
  double alpha = 0.001;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  std::int64_t step_count = 0;
  std::map<std::string, std::pair<std::vector<double>, std::vector<double>>> moments;
};

// Element-wise clamp of every gradient entry to [lo, hi].
void clip_gradients(ParameterStore& params, double lo = -5.0, double hi = 5.0);

// Bias-corrected Adam update over all parameters; zeroes gradients afterwards.
void adam_step(ParameterStore& params, AdamState& state);

// Flat binary snapshot: magic "NORCKPT1", then per parameter (lexicographic
// name order): u32 LE name length, name bytes, u32 LE rank, u32 LE dims,
// little-endian f64 payload.
void save_checkpoint(const ParameterStore& params, const std::string& path);

// Raw read of a checkpoint into (name, tensor) pairs in file order.
std::vector<std::pair<std::string, Tensor>> read_checkpoint(const std::string& path);

// Loads a checkpoint into an existing store; the name sets and shapes must
// match exactly.
void load_checkpoint(ParameterStore& params, const std::string& path);

}  // namespace nor

#endif  // NOR_PARAMS_HPP_

#ifndef NOR_RNG_HPP_
#define NOR_RNG_HPP_

#include <cstdint>
#include <random>
#include <string_view>
#include <vector>

#include "nor/common.hpp"

namespace nor {

// Deterministic RNG. All draws are derived from raw mt19937_64 output with
// fixed arithmetic, never from std distribution objects, so streams are
// bit-identical across standard library implementations.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : gen_(seed) {}

  std::uint64_t next_u64() { return gen_(); }

  // Uniform in [0, 1) with 53-bit resolution.
  double uniform() {
    return static_cast<double>(gen_() >> 11) * 0x1.0p-53;
  }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // Uniform integer in [0, n), rejection-sampled to avoid modulo bias.
  std::uint64_t uniform_int(std::uint64_t n) {
    NOR_REQUIRE(n > 0, "uniform_int: empty range");
    std::uint64_t limit = std::uint64_t(-1) - std::uint64_t(-1) % n;
    std::uint64_t x;
    do {
      x = gen_();
    } while (x >= limit);
    return x % n;
  }

  bool coin() { return (gen_() & 1u) != 0; }

  // Fisher-Yates; std::shuffle is implementation-defined, this is not.
  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (std::size_t i = v.size(); i > 1; --i) {
      std::size_t j = static_cast<std::size_t>(uniform_int(i));
      std::swap(v[i - 1], v[j]);
    }
  }

 private:
  std::mt19937_64 gen_;
};

// Stable per-name sub-seed so adding a parameter never shifts another's init.
inline std::uint64_t derive_seed(std::uint64_t master, std::string_view tag) {
  std::uint64_t h = fnv1a64(tag);
  return master ^ (h + 0x9e3779b97f4a7c15ull + (master << 6) + (master >> 2));
}

}  // namespace nor

#endif  // NOR_RNG_HPP_

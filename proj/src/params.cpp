#include "nor/params.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>

#include "nor/common.hpp"
#include "nor/rng.hpp"

namespace nor {

Tensor ParameterStore::insert(const std::string& name, Tensor t, bool regularized) {
  NOR_REQUIRE(!name.empty(), "parameter with empty name");
  NOR_REQUIRE(!has(name), "duplicate parameter name ", name);
  t.set_requires_grad(true);
  params_.emplace(name, Parameter{name, t, regularized});
  return t;
}

Tensor ParameterStore::xavier(const std::string& name, const Shape& shape, bool regularized) {
  return insert(name, xavier_init(shape, derive_seed(master_seed_, name)), regularized);
}

Tensor ParameterStore::zeros(const std::string& name, const Shape& shape, bool regularized) {
  return insert(name, Tensor::zeros(shape), regularized);
}

Tensor ParameterStore::get(const std::string& name) const {
  auto it = params_.find(name);
  NOR_REQUIRE(it != params_.end(), "unknown parameter ", name);
  return it->second.tensor;
}

const Parameter& ParameterStore::param(const std::string& name) const {
  auto it = params_.find(name);
  NOR_REQUIRE(it != params_.end(), "unknown parameter ", name);
  return it->second;
}

std::int64_t ParameterStore::total_values() const {
  std::int64_t n = 0;
  for (const auto& [name, p] : params_) n += p.tensor.numel();
  return n;
}

std::vector<std::string> ParameterStore::names() const {
  std::vector<std::string> out;
  out.reserve(params_.size());
  for (const auto& [name, p] : params_) out.push_back(name);
  return out;
}

void ParameterStore::zero_grads() {
  for (auto& [name, p] : params_) p.tensor.zero_grad();
}

void clip_gradients(ParameterStore& params, double lo, double hi) {
  params.for_each([lo, hi](Parameter& p) {
    for (double& g : p.tensor.grad()) g = std::clamp(g, lo, hi);
  });
}

void adam_step(ParameterStore& params, AdamState& state) {
  state.step_count += 1;
  const double bc1 = 1.0 - std::pow(state.beta1, static_cast<double>(state.step_count));
  const double bc2 = 1.0 - std::pow(state.beta2, static_cast<double>(state.step_count));
  params.for_each([&](Parameter& p) {
    auto& [m, v] = state.moments[p.name];
    const std::size_t n = static_cast<std::size_t>(p.tensor.numel());
    if (m.size() != n) {
      m.assign(n, 0.0);
      v.assign(n, 0.0);
    }
    auto grad = p.tensor.grad();
    double* value = p.tensor.data();
    for (std::size_t i = 0; i < n; ++i) {
      const double g = grad[i];
      m[i] = state.beta1 * m[i] + (1.0 - state.beta1) * g;
      v[i] = state.beta2 * v[i] + (1.0 - state.beta2) * g * g;
      const double mhat = m[i] / bc1;
      const double vhat = v[i] / bc2;
      value[i] -= state.alpha * mhat / (std::sqrt(vhat) + state.epsilon);
    }
  });
  params.zero_grads();
}

namespace {

void put_u32(std::string& out, std::uint32_t v) {
  out.push_back(static_cast<char>(v & 0xff));
  out.push_back(static_cast<char>((v >> 8) & 0xff));
  out.push_back(static_cast<char>((v >> 16) & 0xff));
  out.push_back(static_cast<char>((v >> 24) & 0xff));
}

void put_f64(std::string& out, double d) {
  std::uint64_t bits;
  std::memcpy(&bits, &d, sizeof(bits));
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((bits >> (8 * i)) & 0xff));
}

class ByteReader {
 public:
  ByteReader(const std::string& bytes, const std::string& path) : b_(bytes), path_(path) {}

  std::uint32_t u32() {
    need(4);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i)
      v |= static_cast<std::uint32_t>(static_cast<unsigned char>(b_[at_ + i])) << (8 * i);
    at_ += 4;
    return v;
  }

  double f64() {
    need(8);
    std::uint64_t bits = 0;
    for (int i = 0; i < 8; ++i)
      bits |= static_cast<std::uint64_t>(static_cast<unsigned char>(b_[at_ + i])) << (8 * i);
    at_ += 8;
    double d;
    std::memcpy(&d, &bits, sizeof(d));
    return d;
  }

  std::string bytes(std::size_t n) {
    need(n);
    std::string s = b_.substr(at_, n);
    at_ += n;
    return s;
  }

  bool done() const { return at_ == b_.size(); }

 private:
  void need(std::size_t n) {
    NOR_REQUIRE(at_ + n <= b_.size(), "truncated checkpoint ", path_);
  }
  const std::string& b_;
  std::string path_;
  std::size_t at_ = 0;
};

constexpr char kMagic[] = "NORCKPT1";

}  // namespace

void save_checkpoint(const ParameterStore& params, const std::string& path) {
  std::string out;
  out.append(kMagic, 8);
  params.for_each([&out](const Parameter& p) {
    put_u32(out, static_cast<std::uint32_t>(p.name.size()));
    out.append(p.name);
    put_u32(out, static_cast<std::uint32_t>(p.tensor.rank()));
    for (int d = 0; d < p.tensor.rank(); ++d)
      put_u32(out, static_cast<std::uint32_t>(p.tensor.dim(d)));
    for (double v : p.tensor.values()) put_f64(out, v);
  });
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  NOR_REQUIRE(f.good(), "cannot write checkpoint ", path);
  f.write(out.data(), static_cast<std::streamsize>(out.size()));
  NOR_REQUIRE(f.good(), "short write to checkpoint ", path);
}

std::vector<std::pair<std::string, Tensor>> read_checkpoint(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  NOR_REQUIRE(f.good(), "cannot read checkpoint ", path);
  std::string bytes((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
  ByteReader r(bytes, path);
  NOR_REQUIRE(r.bytes(8) == std::string(kMagic, 8), "bad checkpoint magic in ", path);
  std::vector<std::pair<std::string, Tensor>> entries;
  while (!r.done()) {
    std::string name = r.bytes(r.u32());
    const std::uint32_t rank = r.u32();
    NOR_REQUIRE(rank <= 8, "implausible parameter rank in ", path);
    Shape shape(rank);
    for (std::uint32_t d = 0; d < rank; ++d) shape[d] = static_cast<int>(r.u32());
    std::vector<double> data(static_cast<std::size_t>(shape_numel(shape)));
    for (double& v : data) v = r.f64();
    entries.emplace_back(std::move(name), Tensor::from(shape, std::move(data)));
  }
  return entries;
}

void load_checkpoint(ParameterStore& params, const std::string& path) {
  auto entries = read_checkpoint(path);
  NOR_REQUIRE(entries.size() == params.size(), "checkpoint ", path, " holds ", entries.size(),
              " parameters, model expects ", params.size());
  for (auto& [name, t] : entries) {
    NOR_REQUIRE(params.has(name), "checkpoint parameter ", name, " not in model");
    Tensor dst = params.get(name);
    NOR_SHAPE_CHECK(dst.shape() == t.shape(), "checkpoint parameter ", name, " has shape ",
                    shape_str(t.shape()), ", model expects ", shape_str(dst.shape()));
    std::copy(t.values().begin(), t.values().end(), dst.values().begin());
  }
}

}  // namespace nor

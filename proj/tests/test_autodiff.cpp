// Central finite differences against every primitive's backward pass.

#include <cmath>
#include <functional>
#include <vector>

#include <doctest.h>

#include "fd_check.hpp"
#include "nor/rng.hpp"
#include "nor/tensor.hpp"

using namespace nor;
using nor::testing::fd_compare;

namespace {

// Values bounded away from ReLU's kink and from pooling ties.
Tensor rand_leaf(const Shape& shape, Rng& rng, double lo = 0.15, double hi = 1.5) {
  std::vector<double> v(static_cast<std::size_t>(shape_numel(shape)));
  for (auto& x : v) {
    x = rng.uniform(lo, hi);
    if (rng.uniform(0.0, 1.0) < 0.5) x = -x;
  }
  return Tensor::from(shape, std::move(v), /*requires_grad=*/true);
}

Tensor rand_const(const Shape& shape, Rng& rng) {
  std::vector<double> v(static_cast<std::size_t>(shape_numel(shape)));
  for (auto& x : v) x = rng.uniform(-1.0, 1.0);
  return Tensor::from(shape, std::move(v));
}

// Random fixed projection makes the scalar loss sensitive to every output.
Tensor project(const Tensor& out, const Tensor& weights) { return sum(mul(out, weights)); }

}  // namespace

TEST_CASE("elementwise ops match finite differences") {
  Rng rng(21);
  Tensor a = rand_leaf({3, 4}, rng);
  Tensor b = rand_leaf({3, 4}, rng);
  Tensor w = rand_const({3, 4}, rng);

  auto check = [&](const char* name, std::function<Tensor()> loss) {
    auto res = fd_compare({a, b}, loss);
    INFO(name, ": ", res.worst_at);
    CHECK(res.ok());
  };
  check("add", [&] { return project(add(a, b), w); });
  check("sub", [&] { return project(sub(a, b), w); });
  check("mul", [&] { return project(mul(a, b), w); });
  check("scale", [&] { return project(scale(a, -2.5), w); });
  check("one_minus", [&] { return project(one_minus(a), w); });
  check("relu", [&] { return project(relu(a), w); });
  check("tanh", [&] { return project(tanh_op(a), w); });
  check("sigmoid", [&] { return project(sigmoid(a), w); });
  check("sum", [&] { return sum(mul(a, b)); });
  check("sum_squares", [&] { return sum_squares(add(a, b)); });
}

TEST_CASE("linear-algebra ops match finite differences") {
  Rng rng(22);
  Tensor W = rand_leaf({4, 6}, rng);
  Tensor x = rand_leaf({6}, rng);
  Tensor y = rand_leaf({4}, rng);
  Tensor wy = rand_const({4}, rng);
  Tensor wx = rand_const({6}, rng);

  auto r1 = fd_compare({W, x}, [&] { return project(matvec(W, x), wy); });
  INFO("matvec: ", r1.worst_at);
  CHECK(r1.ok());

  auto r2 = fd_compare({W, y}, [&] { return project(matvec_t(W, y), wx); });
  INFO("matvec_t: ", r2.worst_at);
  CHECK(r2.ok());

  Tensor A = rand_leaf({3, 5}, rng);
  Tensor B = rand_leaf({4, 5}, rng);
  Tensor wc = rand_const({3, 4}, rng);
  auto r3 = fd_compare({A, B}, [&] { return project(matmul_abt(A, B), wc); });
  INFO("matmul_abt: ", r3.worst_at);
  CHECK(r3.ok());

  Tensor M = rand_leaf({3, 4}, rng);
  Tensor v = rand_leaf({4}, rng);
  Tensor wm = rand_const({3, 4}, rng);
  auto r4 = fd_compare({M, v}, [&] { return project(add_rowvec(M, v), wm); });
  INFO("add_rowvec: ", r4.worst_at);
  CHECK(r4.ok());

  Tensor wmean = rand_const({4}, rng);
  auto r5 = fd_compare({M}, [&] { return project(mean_rows(M), wmean); });
  INFO("mean_rows: ", r5.worst_at);
  CHECK(r5.ok());
}

TEST_CASE("softmax and log_softmax match finite differences") {
  Rng rng(23);
  Tensor logits = rand_leaf({7}, rng, 0.05, 2.0);
  Tensor w = rand_const({7}, rng);
  auto r1 = fd_compare({logits}, [&] { return project(softmax(logits), w); });
  INFO("softmax: ", r1.worst_at);
  CHECK(r1.ok());
  auto r2 = fd_compare({logits}, [&] { return project(log_softmax(logits), w); });
  INFO("log_softmax: ", r2.worst_at);
  CHECK(r2.ok());
  auto r3 = fd_compare({logits}, [&] { return pick(log_softmax(logits), 3); });
  INFO("pick(log_softmax): ", r3.worst_at);
  CHECK(r3.ok());
}

TEST_CASE("shape ops match finite differences") {
  Rng rng(24);
  Tensor a = rand_leaf({2, 3}, rng);
  Tensor b = rand_leaf({4, 3}, rng);
  Tensor w = rand_const({6, 3}, rng);
  auto r1 = fd_compare({a, b}, [&] { return project(concat({a, b}), w); });
  INFO("concat: ", r1.worst_at);
  CHECK(r1.ok());

  Tensor wrow = rand_const({3}, rng);
  auto r2 = fd_compare({b}, [&] { return project(select_row(b, 2), wrow); });
  INFO("select_row: ", r2.worst_at);
  CHECK(r2.ok());

  Tensor c = rand_leaf({2, 3}, rng);
  Tensor wn = rand_const({2, 3}, rng);
  auto r3 = fd_compare({a, c}, [&] { return project(add_n({a, c, a}), wn); });
  INFO("add_n: ", r3.worst_at);
  CHECK(r3.ok());

  Tensor img = rand_leaf({3, 2, 2}, rng);
  Tensor wr = rand_const({4, 3}, rng);
  auto r4 = fd_compare({img}, [&] { return project(chw_to_regions(img), wr); });
  INFO("chw_to_regions: ", r4.worst_at);
  CHECK(r4.ok());
}

TEST_CASE("conv2d matches finite differences in all arguments") {
  Rng rng(25);
  Tensor in = rand_leaf({2, 5, 4}, rng);
  Tensor k = rand_leaf({3, 2, 3, 3}, rng);
  Tensor bias = rand_leaf({3}, rng);
  Tensor w = rand_const({3, 5, 4}, rng);
  auto res = fd_compare({in, k, bias}, [&] { return project(conv2d(in, k, bias), w); },
                        {"input", "kernels", "bias"});
  INFO(res.worst_at);
  CHECK(res.ok());
}

TEST_CASE("max_pool2d matches finite differences away from ties") {
  Rng rng(26);
  // Distinct well-separated values so the argmax is stable under h=1e-4.
  std::vector<double> v(2 * 4 * 4);
  std::vector<std::size_t> order(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) order[i] = i;
  rng.shuffle(order);
  for (std::size_t i = 0; i < v.size(); ++i) v[order[i]] = static_cast<double>(i) * 0.01;
  Tensor in = Tensor::from({2, 4, 4}, v, true);
  Tensor w = rand_const({2, 2, 2}, rng);
  auto res = fd_compare({in}, [&] { return project(max_pool2d(in, 2), w); });
  INFO(res.worst_at);
  CHECK(res.ok());
}

TEST_CASE("gru_cell matches finite differences in every weight") {
  Rng rng(27);
  const int in_dim = 3, hidden = 4;
  GruWeights g;
  g.Wz = rand_leaf({hidden, in_dim}, rng);
  g.Uz = rand_leaf({hidden, hidden}, rng);
  g.bz = rand_leaf({hidden}, rng);
  g.Wr = rand_leaf({hidden, in_dim}, rng);
  g.Ur = rand_leaf({hidden, hidden}, rng);
  g.br = rand_leaf({hidden}, rng);
  g.Wh = rand_leaf({hidden, in_dim}, rng);
  g.Uh = rand_leaf({hidden, hidden}, rng);
  g.bh = rand_leaf({hidden}, rng);
  Tensor x = rand_leaf({in_dim}, rng);
  Tensor s = rand_leaf({hidden}, rng);
  Tensor w = rand_const({hidden}, rng);

  auto res = fd_compare(
      {g.Wz, g.Uz, g.bz, g.Wr, g.Ur, g.br, g.Wh, g.Uh, g.bh, x, s},
      [&] { return project(gru_cell(x, s, g), w); },
      {"Wz", "Uz", "bz", "Wr", "Ur", "br", "Wh", "Uh", "bh", "x", "s"});
  INFO(res.worst_at);
  CHECK(res.ok());
}

TEST_CASE("gradients accumulate across reuse of one tensor") {
  Tensor p = Tensor::from({2}, {0.4, -0.3}, true);
  // loss = sum(p) + sum(p*p): d/dp_i = 1 + 2 p_i
  backward(add(sum(p), sum_squares(p)));
  CHECK(p.grad()[0] == doctest::Approx(1.0 + 0.8).epsilon(1e-12));
  CHECK(p.grad()[1] == doctest::Approx(1.0 - 0.6).epsilon(1e-12));
}

TEST_CASE("NoGrad suppresses tape building but not leaf flags") {
  Tensor p = Tensor::from({2}, {1.0, 2.0}, true);
  {
    NoGrad guard;
    Tensor q = mul(p, p);
    CHECK_FALSE(q.requires_grad());
    Tensor leaf = Tensor::from({1}, {3.0}, true);
    CHECK(leaf.requires_grad());  // leaves keep their flag regardless of mode
  }
  Tensor r = mul(p, p);
  CHECK(r.requires_grad());
}

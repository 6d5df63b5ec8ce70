#include <algorithm>
#include <cmath>
#include <memory>
#include <vector>

#include "nor/common.hpp"
#include "nor/kernels.hpp"
#include "nor/rng.hpp"
#include "nor/tensor.hpp"

namespace nor {

namespace {

bool same_shape(const Tensor& a, const Tensor& b) { return a.shape() == b.shape(); }

void check_same(const Tensor& a, const Tensor& b, const char* op) {
  NOR_SHAPE_CHECK(same_shape(a, b), op, ": shape mismatch ", shape_str(a.shape()), " vs ",
                  shape_str(b.shape()));
}

double* pgrad(Node& out, std::size_t i) { return out.parents[i]->grad.data(); }
const double* pval(const Node& out, std::size_t i) { return out.parents[i]->value.data(); }
bool pneeds(const Node& out, std::size_t i) { return out.parents[i]->requires_grad; }

}  // namespace

Tensor add(const Tensor& a, const Tensor& b) {
  check_same(a, b, "add");
  Tensor out = make_op(a.shape(), {a, b}, [](Node& o) {
    const std::size_t n = o.value.size();
    if (pneeds(o, 0)) {
      double* g = pgrad(o, 0);
      for (std::size_t i = 0; i < n; ++i) g[i] += o.grad[i];
    }
    if (pneeds(o, 1)) {
      double* g = pgrad(o, 1);
      for (std::size_t i = 0; i < n; ++i) g[i] += o.grad[i];
    }
  });
  const double* pa = a.data();
  const double* pb = b.data();
  double* po = out.data();
  for (std::int64_t i = 0; i < out.numel(); ++i) po[i] = pa[i] + pb[i];
  return out;
}

Tensor sub(const Tensor& a, const Tensor& b) {
  check_same(a, b, "sub");
  Tensor out = make_op(a.shape(), {a, b}, [](Node& o) {
    const std::size_t n = o.value.size();
    if (pneeds(o, 0)) {
      double* g = pgrad(o, 0);
      for (std::size_t i = 0; i < n; ++i) g[i] += o.grad[i];
    }
    if (pneeds(o, 1)) {
      double* g = pgrad(o, 1);
      for (std::size_t i = 0; i < n; ++i) g[i] -= o.grad[i];
    }
  });
  const double* pa = a.data();
  const double* pb = b.data();
  double* po = out.data();
  for (std::int64_t i = 0; i < out.numel(); ++i) po[i] = pa[i] - pb[i];
  return out;
}

Tensor mul(const Tensor& a, const Tensor& b) {
  check_same(a, b, "mul");
  Tensor out = make_op(a.shape(), {a, b}, [](Node& o) {
    const std::size_t n = o.value.size();
    if (pneeds(o, 0)) {
      double* g = pgrad(o, 0);
      const double* vb = pval(o, 1);
      for (std::size_t i = 0; i < n; ++i) g[i] += o.grad[i] * vb[i];
    }
    if (pneeds(o, 1)) {
      double* g = pgrad(o, 1);
      const double* va = pval(o, 0);
      for (std::size_t i = 0; i < n; ++i) g[i] += o.grad[i] * va[i];
    }
  });
  const double* pa = a.data();
  const double* pb = b.data();
  double* po = out.data();
  for (std::int64_t i = 0; i < out.numel(); ++i) po[i] = pa[i] * pb[i];
  return out;
}

Tensor scale(const Tensor& a, double c) {
  Tensor out = make_op(a.shape(), {a}, [c](Node& o) {
    if (!pneeds(o, 0)) return;
    double* g = pgrad(o, 0);
    for (std::size_t i = 0; i < o.value.size(); ++i) g[i] += c * o.grad[i];
  });
  const double* pa = a.data();
  double* po = out.data();
  for (std::int64_t i = 0; i < out.numel(); ++i) po[i] = c * pa[i];
  return out;
}

Tensor one_minus(const Tensor& a) {
  Tensor out = make_op(a.shape(), {a}, [](Node& o) {
    if (!pneeds(o, 0)) return;
    double* g = pgrad(o, 0);
    for (std::size_t i = 0; i < o.value.size(); ++i) g[i] -= o.grad[i];
  });
  const double* pa = a.data();
  double* po = out.data();
  for (std::int64_t i = 0; i < out.numel(); ++i) po[i] = 1.0 - pa[i];
  return out;
}

Tensor relu(const Tensor& a) {
  Tensor out = make_op(a.shape(), {a}, [](Node& o) {
    if (!pneeds(o, 0)) return;
    double* g = pgrad(o, 0);
    const double* va = pval(o, 0);
    for (std::size_t i = 0; i < o.value.size(); ++i)
      if (va[i] > 0.0) g[i] += o.grad[i];
  });
  const double* pa = a.data();
  double* po = out.data();
  for (std::int64_t i = 0; i < out.numel(); ++i) po[i] = pa[i] > 0.0 ? pa[i] : 0.0;
  return out;
}

Tensor tanh_op(const Tensor& a) {
  Tensor out = make_op(a.shape(), {a}, [](Node& o) {
    if (!pneeds(o, 0)) return;
    double* g = pgrad(o, 0);
    for (std::size_t i = 0; i < o.value.size(); ++i)
      g[i] += o.grad[i] * (1.0 - o.value[i] * o.value[i]);
  });
  const double* pa = a.data();
  double* po = out.data();
  for (std::int64_t i = 0; i < out.numel(); ++i) po[i] = std::tanh(pa[i]);
  return out;
}

Tensor sigmoid(const Tensor& a) {
  Tensor out = make_op(a.shape(), {a}, [](Node& o) {
    if (!pneeds(o, 0)) return;
    double* g = pgrad(o, 0);
    for (std::size_t i = 0; i < o.value.size(); ++i)
      g[i] += o.grad[i] * o.value[i] * (1.0 - o.value[i]);
  });
  const double* pa = a.data();
  double* po = out.data();
  for (std::int64_t i = 0; i < out.numel(); ++i) po[i] = 1.0 / (1.0 + std::exp(-pa[i]));
  return out;
}

Tensor matvec(const Tensor& W, const Tensor& x) {
  NOR_SHAPE_CHECK(W.rank() == 2 && x.rank() == 1 && W.dim(1) == x.dim(0),
                  "matvec: W ", shape_str(W.shape()), " x ", shape_str(x.shape()));
  const int rows = W.dim(0), cols = W.dim(1);
  Tensor out = make_op({rows}, {W, x}, [rows, cols](Node& o) {
    if (pneeds(o, 0)) kernels::ger_acc(pgrad(o, 0), o.grad.data(), pval(o, 1), rows, cols);
    if (pneeds(o, 1)) {
      std::vector<double> tmp(static_cast<std::size_t>(cols));
      kernels::matvec_t(pval(o, 0), o.grad.data(), tmp.data(), rows, cols);
      double* g = pgrad(o, 1);
      for (int c = 0; c < cols; ++c) g[c] += tmp[static_cast<std::size_t>(c)];
    }
  });
  kernels::matvec(W.data(), x.data(), out.data(), rows, cols);
  return out;
}

Tensor matvec_t(const Tensor& W, const Tensor& x) {
  NOR_SHAPE_CHECK(W.rank() == 2 && x.rank() == 1 && W.dim(0) == x.dim(0),
                  "matvec_t: W ", shape_str(W.shape()), " x ", shape_str(x.shape()));
  const int rows = W.dim(0), cols = W.dim(1);
  Tensor out = make_op({cols}, {W, x}, [rows, cols](Node& o) {
    if (pneeds(o, 0)) kernels::ger_acc(pgrad(o, 0), pval(o, 1), o.grad.data(), rows, cols);
    if (pneeds(o, 1)) {
      std::vector<double> tmp(static_cast<std::size_t>(rows));
      kernels::matvec(pval(o, 0), o.grad.data(), tmp.data(), rows, cols);
      double* g = pgrad(o, 1);
      for (int r = 0; r < rows; ++r) g[r] += tmp[static_cast<std::size_t>(r)];
    }
  });
  kernels::matvec_t(W.data(), x.data(), out.data(), rows, cols);
  return out;
}

Tensor matmul_abt(const Tensor& A, const Tensor& B) {
  NOR_SHAPE_CHECK(A.rank() == 2 && B.rank() == 2 && A.dim(1) == B.dim(1),
                  "matmul_abt: A ", shape_str(A.shape()), " B ", shape_str(B.shape()));
  const int M = A.dim(0), N = B.dim(0), K = A.dim(1);
  Tensor out = make_op({M, N}, {A, B}, [M, N, K](Node& o) {
    const double* G = o.grad.data();
    if (pneeds(o, 0)) {
      // gA[m,k] += sum_n G[m,n] B[n,k]
      double* gA = pgrad(o, 0);
      const double* vB = pval(o, 1);
      for (int m = 0; m < M; ++m)
        for (int n = 0; n < N; ++n) {
          const double g = G[static_cast<std::int64_t>(m) * N + n];
          const double* bn = vB + static_cast<std::int64_t>(n) * K;
          double* ga = gA + static_cast<std::int64_t>(m) * K;
          for (int k = 0; k < K; ++k) ga[k] += g * bn[k];
        }
    }
    if (pneeds(o, 1)) {
      // gB[n,k] += sum_m G[m,n] A[m,k]
      double* gB = pgrad(o, 1);
      const double* vA = pval(o, 0);
      for (int m = 0; m < M; ++m)
        for (int n = 0; n < N; ++n) {
          const double g = G[static_cast<std::int64_t>(m) * N + n];
          const double* am = vA + static_cast<std::int64_t>(m) * K;
          double* gb = gB + static_cast<std::int64_t>(n) * K;
          for (int k = 0; k < K; ++k) gb[k] += g * am[k];
        }
    }
  });
  kernels::matmul_abt(A.data(), B.data(), out.data(), M, N, K);
  return out;
}

Tensor add_rowvec(const Tensor& M, const Tensor& v) {
  NOR_SHAPE_CHECK(M.rank() == 2 && v.rank() == 1 && M.dim(1) == v.dim(0),
                  "add_rowvec: M ", shape_str(M.shape()), " v ", shape_str(v.shape()));
  const int r = M.dim(0), c = M.dim(1);
  Tensor out = make_op({r, c}, {M, v}, [r, c](Node& o) {
    if (pneeds(o, 0)) {
      double* g = pgrad(o, 0);
      for (std::size_t i = 0; i < o.value.size(); ++i) g[i] += o.grad[i];
    }
    if (pneeds(o, 1)) {
      double* g = pgrad(o, 1);
      for (int i = 0; i < r; ++i)
        for (int j = 0; j < c; ++j) g[j] += o.grad[static_cast<std::size_t>(i * c + j)];
    }
  });
  const double* pm = M.data();
  const double* pv = v.data();
  double* po = out.data();
  for (int i = 0; i < r; ++i)
    for (int j = 0; j < c; ++j) po[i * c + j] = pm[i * c + j] + pv[j];
  return out;
}

Tensor mean_rows(const Tensor& M) {
  NOR_SHAPE_CHECK(M.rank() == 2, "mean_rows: M ", shape_str(M.shape()));
  const int r = M.dim(0), c = M.dim(1);
  Tensor out = make_op({c}, {M}, [r, c](Node& o) {
    if (!pneeds(o, 0)) return;
    double* g = pgrad(o, 0);
    const double inv = 1.0 / r;
    for (int i = 0; i < r; ++i)
      for (int j = 0; j < c; ++j) g[i * c + j] += inv * o.grad[static_cast<std::size_t>(j)];
  });
  const double* pm = M.data();
  double* po = out.data();
  for (int j = 0; j < c; ++j) {
    double acc = 0.0;
    for (int i = 0; i < r; ++i) acc += pm[i * c + j];
    po[j] = acc / r;
  }
  return out;
}

Tensor softmax(const Tensor& logits) {
  NOR_SHAPE_CHECK(logits.rank() == 1, "softmax: logits ", shape_str(logits.shape()));
  const int n = logits.dim(0);
  Tensor out = make_op({n}, {logits}, [n](Node& o) {
    if (!pneeds(o, 0)) return;
    double dot = 0.0;
    for (int i = 0; i < n; ++i) dot += o.grad[static_cast<std::size_t>(i)] * o.value[static_cast<std::size_t>(i)];
    double* g = pgrad(o, 0);
    for (int i = 0; i < n; ++i) {
      const std::size_t k = static_cast<std::size_t>(i);
      g[i] += o.value[k] * (o.grad[k] - dot);
    }
  });
  const double* pl = logits.data();
  double* po = out.data();
  double mx = pl[0];
  for (int i = 1; i < n; ++i) mx = std::max(mx, pl[i]);
  double z = 0.0;
  for (int i = 0; i < n; ++i) {
    po[i] = std::exp(pl[i] - mx);
    z += po[i];
  }
  for (int i = 0; i < n; ++i) po[i] /= z;
  return out;
}

Tensor log_softmax(const Tensor& logits) {
  NOR_SHAPE_CHECK(logits.rank() == 1, "log_softmax: logits ", shape_str(logits.shape()));
  const int n = logits.dim(0);
  Tensor out = make_op({n}, {logits}, [n](Node& o) {
    if (!pneeds(o, 0)) return;
    double gsum = 0.0;
    for (int i = 0; i < n; ++i) gsum += o.grad[static_cast<std::size_t>(i)];
    double* g = pgrad(o, 0);
    for (int i = 0; i < n; ++i) {
      const std::size_t k = static_cast<std::size_t>(i);
      g[i] += o.grad[k] - std::exp(o.value[k]) * gsum;
    }
  });
  const double* pl = logits.data();
  double* po = out.data();
  double mx = pl[0];
  for (int i = 1; i < n; ++i) mx = std::max(mx, pl[i]);
  double z = 0.0;
  for (int i = 0; i < n; ++i) z += std::exp(pl[i] - mx);
  const double lse = mx + std::log(z);
  for (int i = 0; i < n; ++i) po[i] = pl[i] - lse;
  return out;
}

Tensor concat(const std::vector<Tensor>& parts) {
  NOR_REQUIRE(!parts.empty(), "concat: no inputs");
  const Shape& first = parts[0].shape();
  int dim0 = 0;
  std::int64_t inner = 1;
  for (std::size_t i = 1; i < first.size(); ++i) inner *= first[i];
  for (const Tensor& p : parts) {
    NOR_SHAPE_CHECK(p.rank() == static_cast<int>(first.size()), "concat: rank mismatch");
    for (std::size_t d = 1; d < first.size(); ++d)
      NOR_SHAPE_CHECK(p.shape()[d] == first[d], "concat: trailing dim mismatch at axis ", d);
    dim0 += p.dim(0);
  }
  Shape out_shape = first;
  out_shape[0] = dim0;
  std::vector<std::int64_t> sizes;
  sizes.reserve(parts.size());
  for (const Tensor& p : parts) sizes.push_back(p.dim(0) * inner);
  Tensor out = make_op(out_shape, parts, [sizes](Node& o) {
    std::int64_t at = 0;
    for (std::size_t i = 0; i < sizes.size(); ++i) {
      if (pneeds(o, i)) {
        double* g = pgrad(o, i);
        for (std::int64_t j = 0; j < sizes[i]; ++j) g[j] += o.grad[static_cast<std::size_t>(at + j)];
      }
      at += sizes[i];
    }
  });
  double* po = out.data();
  for (std::size_t i = 0; i < parts.size(); ++i) {
    const double* pp = parts[i].data();
    std::copy(pp, pp + sizes[i], po);
    po += sizes[i];
  }
  return out;
}

Tensor select_row(const Tensor& M, int row) {
  NOR_SHAPE_CHECK(M.rank() == 2, "select_row: M ", shape_str(M.shape()));
  NOR_SHAPE_CHECK(row >= 0 && row < M.dim(0), "select_row: row ", row, " of ", M.dim(0));
  const int c = M.dim(1);
  Tensor out = make_op({c}, {M}, [row, c](Node& o) {
    if (!pneeds(o, 0)) return;
    double* g = pgrad(o, 0) + static_cast<std::int64_t>(row) * c;
    for (int j = 0; j < c; ++j) g[j] += o.grad[static_cast<std::size_t>(j)];
  });
  const double* pm = M.data() + static_cast<std::int64_t>(row) * c;
  std::copy(pm, pm + c, out.data());
  return out;
}

Tensor pick(const Tensor& v, int i) {
  NOR_SHAPE_CHECK(v.rank() == 1, "pick: v ", shape_str(v.shape()));
  NOR_SHAPE_CHECK(i >= 0 && i < v.dim(0), "pick: index ", i, " of ", v.dim(0));
  Tensor out = make_op({1}, {v}, [i](Node& o) {
    if (pneeds(o, 0)) pgrad(o, 0)[i] += o.grad[0];
  });
  out.data()[0] = v.at(i);
  return out;
}

Tensor sum(const Tensor& a) {
  Tensor out = make_op({1}, {a}, [](Node& o) {
    if (!pneeds(o, 0)) return;
    double* g = pgrad(o, 0);
    const std::size_t n = o.parents[0]->value.size();
    for (std::size_t i = 0; i < n; ++i) g[i] += o.grad[0];
  });
  const double* pa = a.data();
  double acc = 0.0;
  for (std::int64_t i = 0; i < a.numel(); ++i) acc += pa[i];
  out.data()[0] = acc;
  return out;
}

Tensor sum_squares(const Tensor& a) {
  Tensor out = make_op({1}, {a}, [](Node& o) {
    if (!pneeds(o, 0)) return;
    double* g = pgrad(o, 0);
    const double* va = pval(o, 0);
    const std::size_t n = o.parents[0]->value.size();
    for (std::size_t i = 0; i < n; ++i) g[i] += 2.0 * va[i] * o.grad[0];
  });
  const double* pa = a.data();
  double acc = 0.0;
  for (std::int64_t i = 0; i < a.numel(); ++i) acc += pa[i] * pa[i];
  out.data()[0] = acc;
  return out;
}

Tensor add_n(const std::vector<Tensor>& parts) {
  NOR_REQUIRE(!parts.empty(), "add_n: no inputs");
  for (const Tensor& p : parts) check_same(parts[0], p, "add_n");
  const std::size_t k = parts.size();
  Tensor out = make_op(parts[0].shape(), parts, [k](Node& o) {
    for (std::size_t i = 0; i < k; ++i) {
      if (!pneeds(o, i)) continue;
      double* g = pgrad(o, i);
      for (std::size_t j = 0; j < o.value.size(); ++j) g[j] += o.grad[j];
    }
  });
  double* po = out.data();
  std::fill(po, po + out.numel(), 0.0);
  for (const Tensor& p : parts) {
    const double* pp = p.data();
    for (std::int64_t j = 0; j < out.numel(); ++j) po[j] += pp[j];
  }
  return out;
}

Tensor conv2d(const Tensor& input, const Tensor& kernels_t, const Tensor& bias) {
  NOR_SHAPE_CHECK(input.rank() == 3, "conv2d: input ", shape_str(input.shape()));
  NOR_SHAPE_CHECK(kernels_t.rank() == 4 && kernels_t.dim(2) == 3 && kernels_t.dim(3) == 3,
                  "conv2d: kernels ", shape_str(kernels_t.shape()));
  NOR_SHAPE_CHECK(bias.rank() == 1 && bias.dim(0) == kernels_t.dim(0), "conv2d: bias ",
                  shape_str(bias.shape()));
  NOR_SHAPE_CHECK(input.dim(0) == kernels_t.dim(1), "conv2d: input channels ", input.dim(0),
                  " vs kernel channels ", kernels_t.dim(1));
  const int cin = input.dim(0), h = input.dim(1), w = input.dim(2);
  const int cout = kernels_t.dim(0);
  Tensor out = make_op({cout, h, w}, {input, kernels_t, bias}, [cin, cout, h, w](Node& o) {
    if (pneeds(o, 0))
      kernels::conv2d_backward_input(o.grad.data(), pval(o, 1), pgrad(o, 0), cin, cout, h, w);
    if (pneeds(o, 1))
      kernels::conv2d_backward_kernel(o.grad.data(), pval(o, 0), pgrad(o, 1), cin, cout, h, w);
    if (pneeds(o, 2)) kernels::conv2d_backward_bias(o.grad.data(), pgrad(o, 2), cout, h, w);
  });
  kernels::conv2d_forward(input.data(), kernels_t.data(), bias.data(), out.data(), cin, cout, h, w);
  return out;
}

Tensor max_pool2d(const Tensor& input, int window) {
  NOR_SHAPE_CHECK(input.rank() == 3, "max_pool2d: input ", shape_str(input.shape()));
  NOR_REQUIRE(window > 0, "max_pool2d: window ", window);
  const int c = input.dim(0), h = input.dim(1), w = input.dim(2);
  NOR_SHAPE_CHECK(h % window == 0 && w % window == 0, "max_pool2d: ", h, "x", w,
                  " not divisible by window ", window);
  const int oh = h / window, ow = w / window;
  const std::int64_t n_out = static_cast<std::int64_t>(c) * oh * ow;
  auto argmax = std::make_shared<std::vector<std::int64_t>>(static_cast<std::size_t>(n_out));
  Tensor out = make_op({c, oh, ow}, {input}, [argmax, n_out](Node& o) {
    if (!pneeds(o, 0)) return;
    kernels::maxpool_backward(o.grad.data(), argmax->data(), pgrad(o, 0), n_out);
  });
  kernels::maxpool_forward(input.data(), out.data(), argmax->data(), c, h, w, window);
  return out;
}

Tensor chw_to_regions(const Tensor& input) {
  NOR_SHAPE_CHECK(input.rank() == 3, "chw_to_regions: input ", shape_str(input.shape()));
  const int c = input.dim(0), h = input.dim(1), w = input.dim(2);
  const std::int64_t plane = static_cast<std::int64_t>(h) * w;
  Tensor out = make_op({h * w, c}, {input}, [c, plane](Node& o) {
    if (!pneeds(o, 0)) return;
    double* g = pgrad(o, 0);
    for (int ch = 0; ch < c; ++ch)
      for (std::int64_t r = 0; r < plane; ++r)
        g[ch * plane + r] += o.grad[static_cast<std::size_t>(r * c + ch)];
  });
  const double* pi = input.data();
  double* po = out.data();
  for (int ch = 0; ch < c; ++ch)
    for (std::int64_t r = 0; r < plane; ++r) po[r * c + ch] = pi[ch * plane + r];
  return out;
}

Tensor gru_cell(const Tensor& x, const Tensor& s_prev, const GruWeights& w) {
  Tensor z = sigmoid(add(add(matvec(w.Wz, x), matvec(w.Uz, s_prev)), w.bz));
  Tensor r = sigmoid(add(add(matvec(w.Wr, x), matvec(w.Ur, s_prev)), w.br));
  Tensor hcand = tanh_op(add(add(matvec(w.Wh, x), matvec(w.Uh, mul(r, s_prev))), w.bh));
  return add(mul(one_minus(z), s_prev), mul(z, hcand));
}

Tensor xavier_init(const Shape& shape, std::uint64_t seed) {
  std::int64_t fan_in = 0, fan_out = 0;
  if (shape.size() == 2) {
    fan_in = shape[1];
    fan_out = shape[0];
  } else if (shape.size() == 4) {
    fan_in = static_cast<std::int64_t>(shape[1]) * shape[2] * shape[3];
    fan_out = static_cast<std::int64_t>(shape[0]) * shape[2] * shape[3];
  } else if (shape.size() == 1) {
    fan_in = shape[0];
    fan_out = 1;
  } else {
    fail_shape(cat("xavier_init: unsupported shape ", shape_str(shape)));
  }
  const double bound = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
  Rng rng(seed);
  std::vector<double> data(static_cast<std::size_t>(shape_numel(shape)));
  for (double& v : data) v = rng.uniform(-bound, bound);
  return Tensor::from(shape, std::move(data));
}

}  // namespace nor

#include "nor/kernels.hpp"

#include <algorithm>
#include <atomic>
#include <cstring>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace nor::kernels {

namespace {
std::atomic<Mode> g_mode{Mode::kAuto};

// Work below this many fused multiply-adds is not worth a parallel region.
constexpr std::int64_t kParallelThreshold = 1 << 15;

bool use_parallel(std::int64_t work) {
#ifdef _OPENMP
  Mode m = g_mode.load(std::memory_order_relaxed);
  if (m == Mode::kSerial) return false;
  if (m == Mode::kParallel) return true;
  return work >= kParallelThreshold && omp_get_max_threads() > 1;
#else
  (void)work;
  return false;
#endif
}
}  // namespace

void set_mode(Mode m) { g_mode.store(m, std::memory_order_relaxed); }
Mode mode() { return g_mode.load(std::memory_order_relaxed); }

namespace ref {

void matvec(const double* W, const double* x, double* y, int rows, int cols) {
  for (int r = 0; r < rows; ++r) {
    const double* wr = W + static_cast<std::int64_t>(r) * cols;
    double acc = 0.0;
    for (int c = 0; c < cols; ++c) acc += wr[c] * x[c];
    y[r] = acc;
  }
}

void matvec_t(const double* W, const double* y, double* x, int rows, int cols) {
  for (int c = 0; c < cols; ++c) {
    double acc = 0.0;
    for (int r = 0; r < rows; ++r) acc += W[static_cast<std::int64_t>(r) * cols + c] * y[r];
    x[c] = acc;
  }
}

void matmul_abt(const double* A, const double* B, double* C, int M, int N, int K) {
  for (int m = 0; m < M; ++m) {
    const double* am = A + static_cast<std::int64_t>(m) * K;
    for (int n = 0; n < N; ++n) {
      const double* bn = B + static_cast<std::int64_t>(n) * K;
      double acc = 0.0;
      for (int k = 0; k < K; ++k) acc += am[k] * bn[k];
      C[static_cast<std::int64_t>(m) * N + n] = acc;
    }
  }
}

void ger_acc(double* W, const double* g, const double* x, int rows, int cols) {
  for (int r = 0; r < rows; ++r) {
    double gr = g[r];
    double* wr = W + static_cast<std::int64_t>(r) * cols;
    for (int c = 0; c < cols; ++c) wr[c] += gr * x[c];
  }
}

void conv2d_forward(const double* in, const double* k, const double* bias,
                    double* out, int cin, int cout, int h, int w) {
  const std::int64_t plane = static_cast<std::int64_t>(h) * w;
  for (int co = 0; co < cout; ++co) {
    const double* kc = k + static_cast<std::int64_t>(co) * cin * 9;
    double* oc = out + co * plane;
    for (int y = 0; y < h; ++y) {
      for (int x = 0; x < w; ++x) {
        double acc = bias[co];
        for (int ci = 0; ci < cin; ++ci) {
          const double* ip = in + ci * plane;
          const double* kp = kc + ci * 9;
          for (int dy = 0; dy < 3; ++dy) {
            int yy = y + dy - 1;
            if (yy < 0 || yy >= h) continue;
            for (int dx = 0; dx < 3; ++dx) {
              int xx = x + dx - 1;
              if (xx < 0 || xx >= w) continue;
              acc += kp[dy * 3 + dx] * ip[static_cast<std::int64_t>(yy) * w + xx];
            }
          }
        }
        oc[static_cast<std::int64_t>(y) * w + x] = acc;
      }
    }
  }
}

void conv2d_backward_input(const double* gout, const double* k, double* gin,
                           int cin, int cout, int h, int w) {
  // Gather form: gin[ci,y,x] = sum_{co,dy,dx} gout[co,y-dy+1,x-dx+1] k[co,ci,dy,dx].
  const std::int64_t plane = static_cast<std::int64_t>(h) * w;
  for (int ci = 0; ci < cin; ++ci) {
    double* gp = gin + ci * plane;
    for (int y = 0; y < h; ++y) {
      for (int x = 0; x < w; ++x) {
        double acc = 0.0;
        for (int co = 0; co < cout; ++co) {
          const double* gop = gout + co * plane;
          const double* kp = k + (static_cast<std::int64_t>(co) * cin + ci) * 9;
          for (int dy = 0; dy < 3; ++dy) {
            int oy = y - dy + 1;
            if (oy < 0 || oy >= h) continue;
            for (int dx = 0; dx < 3; ++dx) {
              int ox = x - dx + 1;
              if (ox < 0 || ox >= w) continue;
              acc += gop[static_cast<std::int64_t>(oy) * w + ox] * kp[dy * 3 + dx];
            }
          }
        }
        gp[static_cast<std::int64_t>(y) * w + x] += acc;
      }
    }
  }
}

void conv2d_backward_kernel(const double* gout, const double* in, double* gk,
                            int cin, int cout, int h, int w) {
  const std::int64_t plane = static_cast<std::int64_t>(h) * w;
  for (int co = 0; co < cout; ++co) {
    for (int ci = 0; ci < cin; ++ci) {
      double* kp = gk + (static_cast<std::int64_t>(co) * cin + ci) * 9;
      const double* gop = gout + co * plane;
      const double* ip = in + ci * plane;
      for (int dy = 0; dy < 3; ++dy) {
        for (int dx = 0; dx < 3; ++dx) {
          double acc = 0.0;
          for (int y = 0; y < h; ++y) {
            int yy = y + dy - 1;
            if (yy < 0 || yy >= h) continue;
            for (int x = 0; x < w; ++x) {
              int xx = x + dx - 1;
              if (xx < 0 || xx >= w) continue;
              acc += gop[static_cast<std::int64_t>(y) * w + x] *
                     ip[static_cast<std::int64_t>(yy) * w + xx];
            }
          }
          kp[dy * 3 + dx] += acc;
        }
      }
    }
  }
}

void conv2d_backward_bias(const double* gout, double* gbias, int cout, int h, int w) {
  const std::int64_t plane = static_cast<std::int64_t>(h) * w;
  for (int co = 0; co < cout; ++co) {
    const double* gop = gout + co * plane;
    double acc = 0.0;
    for (std::int64_t i = 0; i < plane; ++i) acc += gop[i];
    gbias[co] += acc;
  }
}

void maxpool_forward(const double* in, double* out, std::int64_t* argmax,
                     int c, int h, int w, int window) {
  const int oh = h / window, ow = w / window;
  const std::int64_t plane = static_cast<std::int64_t>(h) * w;
  for (int ch = 0; ch < c; ++ch) {
    const double* ip = in + ch * plane;
    for (int oy = 0; oy < oh; ++oy) {
      for (int ox = 0; ox < ow; ++ox) {
        double best = -1.0 / 0.0;
        std::int64_t best_at = -1;
        for (int dy = 0; dy < window; ++dy) {
          const std::int64_t row = static_cast<std::int64_t>(oy * window + dy) * w;
          for (int dx = 0; dx < window; ++dx) {
            std::int64_t at = row + ox * window + dx;
            if (ip[at] > best) {  // strict: first in scan order wins ties
              best = ip[at];
              best_at = at;
            }
          }
        }
        std::int64_t o = (static_cast<std::int64_t>(ch) * oh + oy) * ow + ox;
        out[o] = best;
        argmax[o] = ch * plane + best_at;
      }
    }
  }
}

void maxpool_backward(const double* gout, const std::int64_t* argmax,
                      double* gin, std::int64_t n_out) {
  for (std::int64_t i = 0; i < n_out; ++i) gin[argmax[i]] += gout[i];
}

}  // namespace ref

// --- OpenMP variants -------------------------------------------------------
// Parallel loops cover disjoint output slices; the per-element accumulation
// order matches ref:: exactly.

void matvec(const double* W, const double* x, double* y, int rows, int cols) {
  if (!use_parallel(static_cast<std::int64_t>(rows) * cols)) {
    ref::matvec(W, x, y, rows, cols);
    return;
  }
#pragma omp parallel for schedule(static)
  for (int r = 0; r < rows; ++r) {
    const double* wr = W + static_cast<std::int64_t>(r) * cols;
    double acc = 0.0;
    for (int c = 0; c < cols; ++c) acc += wr[c] * x[c];
    y[r] = acc;
  }
}

void matvec_t(const double* W, const double* y, double* x, int rows, int cols) {
  if (!use_parallel(static_cast<std::int64_t>(rows) * cols)) {
    ref::matvec_t(W, y, x, rows, cols);
    return;
  }
#pragma omp parallel for schedule(static)
  for (int c = 0; c < cols; ++c) {
    double acc = 0.0;
    for (int r = 0; r < rows; ++r) acc += W[static_cast<std::int64_t>(r) * cols + c] * y[r];
    x[c] = acc;
  }
}

void matmul_abt(const double* A, const double* B, double* C, int M, int N, int K) {
  if (!use_parallel(static_cast<std::int64_t>(M) * N * K)) {
    ref::matmul_abt(A, B, C, M, N, K);
    return;
  }
#pragma omp parallel for schedule(static)
  for (int m = 0; m < M; ++m) {
    const double* am = A + static_cast<std::int64_t>(m) * K;
    for (int n = 0; n < N; ++n) {
      const double* bn = B + static_cast<std::int64_t>(n) * K;
      double acc = 0.0;
      for (int k = 0; k < K; ++k) acc += am[k] * bn[k];
      C[static_cast<std::int64_t>(m) * N + n] = acc;
    }
  }
}

void ger_acc(double* W, const double* g, const double* x, int rows, int cols) {
  if (!use_parallel(static_cast<std::int64_t>(rows) * cols)) {
    ref::ger_acc(W, g, x, rows, cols);
    return;
  }
#pragma omp parallel for schedule(static)
  for (int r = 0; r < rows; ++r) {
    double gr = g[r];
    double* wr = W + static_cast<std::int64_t>(r) * cols;
    for (int c = 0; c < cols; ++c) wr[c] += gr * x[c];
  }
}

void conv2d_forward(const double* in, const double* k, const double* bias,
                    double* out, int cin, int cout, int h, int w) {
  const std::int64_t work = static_cast<std::int64_t>(cout) * cin * 9 * h * w;
  if (!use_parallel(work)) {
    ref::conv2d_forward(in, k, bias, out, cin, cout, h, w);
    return;
  }
  const std::int64_t plane = static_cast<std::int64_t>(h) * w;
#pragma omp parallel for schedule(static) collapse(2)
  for (int co = 0; co < cout; ++co) {
    for (int y = 0; y < h; ++y) {
      const double* kc = k + static_cast<std::int64_t>(co) * cin * 9;
      double* orow = out + co * plane + static_cast<std::int64_t>(y) * w;
      for (int x = 0; x < w; ++x) {
        double acc = bias[co];
        for (int ci = 0; ci < cin; ++ci) {
          const double* ip = in + ci * plane;
          const double* kp = kc + ci * 9;
          for (int dy = 0; dy < 3; ++dy) {
            int yy = y + dy - 1;
            if (yy < 0 || yy >= h) continue;
            for (int dx = 0; dx < 3; ++dx) {
              int xx = x + dx - 1;
              if (xx < 0 || xx >= w) continue;
              acc += kp[dy * 3 + dx] * ip[static_cast<std::int64_t>(yy) * w + xx];
            }
          }
        }
        orow[x] = acc;
      }
    }
  }
}

void conv2d_backward_input(const double* gout, const double* k, double* gin,
                           int cin, int cout, int h, int w) {
  const std::int64_t work = static_cast<std::int64_t>(cout) * cin * 9 * h * w;
  if (!use_parallel(work)) {
    ref::conv2d_backward_input(gout, k, gin, cin, cout, h, w);
    return;
  }
  const std::int64_t plane = static_cast<std::int64_t>(h) * w;
#pragma omp parallel for schedule(static) collapse(2)
  for (int ci = 0; ci < cin; ++ci) {
    for (int y = 0; y < h; ++y) {
      double* grow = gin + ci * plane + static_cast<std::int64_t>(y) * w;
      for (int x = 0; x < w; ++x) {
        double acc = 0.0;
        for (int co = 0; co < cout; ++co) {
          const double* gop = gout + co * plane;
          const double* kp = k + (static_cast<std::int64_t>(co) * cin + ci) * 9;
          for (int dy = 0; dy < 3; ++dy) {
            int oy = y - dy + 1;
            if (oy < 0 || oy >= h) continue;
            for (int dx = 0; dx < 3; ++dx) {
              int ox = x - dx + 1;
              if (ox < 0 || ox >= w) continue;
              acc += gop[static_cast<std::int64_t>(oy) * w + ox] * kp[dy * 3 + dx];
            }
          }
        }
        grow[x] += acc;
      }
    }
  }
}

void conv2d_backward_kernel(const double* gout, const double* in, double* gk,
                            int cin, int cout, int h, int w) {
  const std::int64_t work = static_cast<std::int64_t>(cout) * cin * 9 * h * w;
  if (!use_parallel(work)) {
    ref::conv2d_backward_kernel(gout, in, gk, cin, cout, h, w);
    return;
  }
  const std::int64_t plane = static_cast<std::int64_t>(h) * w;
#pragma omp parallel for schedule(static) collapse(2)
  for (int co = 0; co < cout; ++co) {
    for (int ci = 0; ci < cin; ++ci) {
      double* kp = gk + (static_cast<std::int64_t>(co) * cin + ci) * 9;
      const double* gop = gout + co * plane;
      const double* ip = in + ci * plane;
      for (int dy = 0; dy < 3; ++dy) {
        for (int dx = 0; dx < 3; ++dx) {
          double acc = 0.0;
          for (int y = 0; y < h; ++y) {
            int yy = y + dy - 1;
            if (yy < 0 || yy >= h) continue;
            for (int x = 0; x < w; ++x) {
              int xx = x + dx - 1;
              if (xx < 0 || xx >= w) continue;
              acc += gop[static_cast<std::int64_t>(y) * w + x] *
                     ip[static_cast<std::int64_t>(yy) * w + xx];
            }
          }
          kp[dy * 3 + dx] += acc;
        }
      }
    }
  }
}

void conv2d_backward_bias(const double* gout, double* gbias, int cout, int h, int w) {
  // Tiny output; a parallel region never pays off here.
  ref::conv2d_backward_bias(gout, gbias, cout, h, w);
}

void maxpool_forward(const double* in, double* out, std::int64_t* argmax,
                     int c, int h, int w, int window) {
  const std::int64_t work = static_cast<std::int64_t>(c) * h * w;
  if (!use_parallel(work)) {
    ref::maxpool_forward(in, out, argmax, c, h, w, window);
    return;
  }
  const int oh = h / window, ow = w / window;
  const std::int64_t plane = static_cast<std::int64_t>(h) * w;
#pragma omp parallel for schedule(static)
  for (int ch = 0; ch < c; ++ch) {
    const double* ip = in + ch * plane;
    for (int oy = 0; oy < oh; ++oy) {
      for (int ox = 0; ox < ow; ++ox) {
        double best = -1.0 / 0.0;
        std::int64_t best_at = -1;
        for (int dy = 0; dy < window; ++dy) {
          const std::int64_t row = static_cast<std::int64_t>(oy * window + dy) * w;
          for (int dx = 0; dx < window; ++dx) {
            std::int64_t at = row + ox * window + dx;
            if (ip[at] > best) {
              best = ip[at];
              best_at = at;
            }
          }
        }
        std::int64_t o = (static_cast<std::int64_t>(ch) * oh + oy) * ow + ox;
        out[o] = best;
        argmax[o] = ch * plane + best_at;
      }
    }
  }
}

void maxpool_backward(const double* gout, const std::int64_t* argmax,
                      double* gin, std::int64_t n_out) {
  // Scatter; serial keeps the accumulation order fixed.
  ref::maxpool_backward(gout, argmax, gin, n_out);
}

}  // namespace nor::kernels

#ifndef NOR_KERNELS_HPP_
#define NOR_KERNELS_HPP_

#include <cstdint>

namespace nor::kernels {

// Every kernel exists twice: a plain-loop serial reference under ref::, and
// an OpenMP version that splits work over *independent output elements* only.
// Each output element is accumulated by exactly one thread in the same order
// as the reference, so the parallel results are bit-identical to serial for
// any thread count. Tests compare the two; the top-level entry points
// dispatch by mode and problem size.

enum class Mode { kAuto, kSerial, kParallel };

void set_mode(Mode m);
Mode mode();

namespace ref {

// y[r] = sum_c W[r,c] x[c]
void matvec(const double* W, const double* x, double* y, int rows, int cols);
// x[c] = sum_r W[r,c] y[r]   (W^T y; also the weighted row sum of W)
void matvec_t(const double* W, const double* y, double* x, int rows, int cols);
// C[m,n] = sum_k A[m,k] B[n,k]
void matmul_abt(const double* A, const double* B, double* C, int M, int N, int K);
// W[r,c] += g[r] x[c]
void ger_acc(double* W, const double* g, const double* x, int rows, int cols);

// 3x3 convolution, stride 1, zero padding 1; spatial dims preserved.
void conv2d_forward(const double* in, const double* k, const double* bias,
                    double* out, int cin, int cout, int h, int w);
void conv2d_backward_input(const double* gout, const double* k, double* gin,
                           int cin, int cout, int h, int w);
void conv2d_backward_kernel(const double* gout, const double* in, double* gk,
                            int cin, int cout, int h, int w);
void conv2d_backward_bias(const double* gout, double* gbias, int cout, int h, int w);

// Non-overlapping max pooling; argmax records the flat input offset per
// output cell, first-in-scan-order on ties.
void maxpool_forward(const double* in, double* out, std::int64_t* argmax,
                     int c, int h, int w, int window);
void maxpool_backward(const double* gout, const std::int64_t* argmax,
                      double* gin, std::int64_t n_out);

}  // namespace ref

// Dispatching entry points (same signatures as ref::).
void matvec(const double* W, const double* x, double* y, int rows, int cols);
void matvec_t(const double* W, const double* y, double* x, int rows, int cols);
void matmul_abt(const double* A, const double* B, double* C, int M, int N, int K);
void ger_acc(double* W, const double* g, const double* x, int rows, int cols);
void conv2d_forward(const double* in, const double* k, const double* bias,
                    double* out, int cin, int cout, int h, int w);
void conv2d_backward_input(const double* gout, const double* k, double* gin,
                           int cin, int cout, int h, int w);
void conv2d_backward_kernel(const double* gout, const double* in, double* gk,
                            int cin, int cout, int h, int w);
void conv2d_backward_bias(const double* gout, double* gbias, int cout, int h, int w);
void maxpool_forward(const double* in, double* out, std::int64_t* argmax,
                     int c, int h, int w, int window);
void maxpool_backward(const double* gout, const std::int64_t* argmax,
                      double* gin, std::int64_t n_out);

}  // namespace nor::kernels

#endif  // NOR_KERNELS_HPP_

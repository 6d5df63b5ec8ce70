// Times the serial reference kernels against the OpenMP versions and checks
// they agree bit for bit on the benchmark inputs.

#include <chrono>
#include <cstring>
#include <functional>
#include <iomanip>
#include <iostream>
#include <string>
#include <vector>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "nor/kernels.hpp"
#include "nor/rng.hpp"

namespace {

using Clock = std::chrono::steady_clock;

std::vector<double> random_vec(std::size_t n, nor::Rng& rng) {
  std::vector<double> v(n);
  for (auto& x : v) x = rng.uniform(-1.0, 1.0);
  return v;
}

double time_ms(int reps, const std::function<void()>& fn) {
  fn();  // warm up
  const auto t0 = Clock::now();
  for (int i = 0; i < reps; ++i) fn();
  const auto t1 = Clock::now();
  return std::chrono::duration<double, std::milli>(t1 - t0).count() / reps;
}

struct Row {
  std::string name;
  double serial_ms = 0.0;
  double parallel_ms = 0.0;
  bool identical = false;
};

void print(const Row& r) {
  std::cout << std::left << std::setw(26) << r.name << std::right << std::fixed
            << std::setprecision(3) << std::setw(12) << r.serial_ms << std::setw(12)
            << r.parallel_ms << std::setw(10) << std::setprecision(2)
            << r.serial_ms / r.parallel_ms << std::setw(12) << (r.identical ? "yes" : "NO")
            << '\n';
}

bool same_bits(const std::vector<double>& a, const std::vector<double>& b) {
  return a.size() == b.size() &&
         std::memcmp(a.data(), b.data(), a.size() * sizeof(double)) == 0;
}

}  // namespace

int main() {
  nor::Rng rng(7);
#ifdef _OPENMP
  std::cout << "threads: " << omp_get_max_threads() << "\n\n";
#else
  std::cout << "threads: 1 (compiled without OpenMP)\n\n";
#endif
  std::cout << std::left << std::setw(26) << "kernel" << std::right << std::setw(12)
            << "serial ms" << std::setw(12) << "parallel ms" << std::setw(10) << "speedup"
            << std::setw(12) << "identical" << '\n';

  {
    const int rows = 1024, cols = 1024;
    auto W = random_vec(static_cast<std::size_t>(rows) * cols, rng);
    auto x = random_vec(cols, rng);
    std::vector<double> ys(rows), yp(rows);
    Row r{"matvec 1024x1024"};
    r.serial_ms = time_ms(20, [&] { nor::kernels::ref::matvec(W.data(), x.data(), ys.data(), rows, cols); });
    nor::kernels::set_mode(nor::kernels::Mode::kParallel);
    r.parallel_ms = time_ms(20, [&] { nor::kernels::matvec(W.data(), x.data(), yp.data(), rows, cols); });
    nor::kernels::set_mode(nor::kernels::Mode::kAuto);
    r.identical = same_bits(ys, yp);
    print(r);
  }
  {
    const int M = 256, N = 256, K = 256;
    auto A = random_vec(static_cast<std::size_t>(M) * K, rng);
    auto B = random_vec(static_cast<std::size_t>(N) * K, rng);
    std::vector<double> Cs(static_cast<std::size_t>(M) * N), Cp(Cs.size());
    Row r{"matmul_abt 256^3"};
    r.serial_ms = time_ms(10, [&] { nor::kernels::ref::matmul_abt(A.data(), B.data(), Cs.data(), M, N, K); });
    nor::kernels::set_mode(nor::kernels::Mode::kParallel);
    r.parallel_ms = time_ms(10, [&] { nor::kernels::matmul_abt(A.data(), B.data(), Cp.data(), M, N, K); });
    nor::kernels::set_mode(nor::kernels::Mode::kAuto);
    r.identical = same_bits(Cs, Cp);
    print(r);
  }
  {
    const int cin = 3, cout_ = 32, h = 224, w = 224;
    auto in = random_vec(static_cast<std::size_t>(cin) * h * w, rng);
    auto k = random_vec(static_cast<std::size_t>(cout_) * cin * 9, rng);
    auto bias = random_vec(cout_, rng);
    std::vector<double> outs(static_cast<std::size_t>(cout_) * h * w), outp(outs.size());
    Row r{"conv2d fwd 3->32 224^2"};
    r.serial_ms = time_ms(3, [&] {
      nor::kernels::ref::conv2d_forward(in.data(), k.data(), bias.data(), outs.data(), cin, cout_, h, w);
    });
    nor::kernels::set_mode(nor::kernels::Mode::kParallel);
    r.parallel_ms = time_ms(3, [&] {
      nor::kernels::conv2d_forward(in.data(), k.data(), bias.data(), outp.data(), cin, cout_, h, w);
    });
    nor::kernels::set_mode(nor::kernels::Mode::kAuto);
    r.identical = same_bits(outs, outp);
    print(r);
  }
  {
    const int cin = 32, cout_ = 32, h = 224, w = 224;
    auto gout = random_vec(static_cast<std::size_t>(cout_) * h * w, rng);
    auto k = random_vec(static_cast<std::size_t>(cout_) * cin * 9, rng);
    std::vector<double> gins(static_cast<std::size_t>(cin) * h * w, 0.0), ginp(gins.size(), 0.0);
    Row r{"conv2d bwd-in 32<-32"};
    r.serial_ms = time_ms(3, [&] {
      std::fill(gins.begin(), gins.end(), 0.0);
      nor::kernels::ref::conv2d_backward_input(gout.data(), k.data(), gins.data(), cin, cout_, h, w);
    });
    nor::kernels::set_mode(nor::kernels::Mode::kParallel);
    r.parallel_ms = time_ms(3, [&] {
      std::fill(ginp.begin(), ginp.end(), 0.0);
      nor::kernels::conv2d_backward_input(gout.data(), k.data(), ginp.data(), cin, cout_, h, w);
    });
    nor::kernels::set_mode(nor::kernels::Mode::kAuto);
    r.identical = same_bits(gins, ginp);
    print(r);
  }
  {
    const int c = 64, h = 224, w = 224, window = 16;
    auto in = random_vec(static_cast<std::size_t>(c) * h * w, rng);
    const std::size_t n_out = static_cast<std::size_t>(c) * (h / window) * (w / window);
    std::vector<double> outs(n_out), outp(n_out);
    std::vector<std::int64_t> args(n_out), argp(n_out);
    Row r{"maxpool 64x224^2 /16"};
    r.serial_ms = time_ms(10, [&] {
      nor::kernels::ref::maxpool_forward(in.data(), outs.data(), args.data(), c, h, w, window);
    });
    nor::kernels::set_mode(nor::kernels::Mode::kParallel);
    r.parallel_ms = time_ms(10, [&] {
      nor::kernels::maxpool_forward(in.data(), outp.data(), argp.data(), c, h, w, window);
    });
    nor::kernels::set_mode(nor::kernels::Mode::kAuto);
    r.identical = same_bits(outs, outp) && args == argp;
    print(r);
  }
  return 0;
}

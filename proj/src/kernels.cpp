#include "dualre/kernels.hpp"

#include <algorithm>
#include <string>

#include "dualre/error.hpp"

#ifdef _OPENMP
#include <omp.h>
#endif

namespace dualre::kernels {

namespace {

// Below this many multiply-adds a thread team costs more than it saves.
constexpr std::size_t kParallelWork = 1 << 15;

int g_threads = 0;

void check_sizes(std::size_t m, std::size_t n, std::size_t k, std::size_t a, std::size_t b, std::size_t c) {
  if (a != m * k || b != k * n || c != m * n)
    throw DimensionError("gemm " + std::to_string(m) + "x" + std::to_string(n) + "x" + std::to_string(k) +
                         ": operand sizes " + std::to_string(a) + ", " + std::to_string(b) + ", " +
                         std::to_string(c));
}

}  // namespace

void set_num_threads(int n) {
  g_threads = std::max(1, n);
#ifdef _OPENMP
  omp_set_num_threads(g_threads);
#endif
}

int num_threads() {
#ifdef _OPENMP
  return g_threads > 0 ? g_threads : omp_get_max_threads();
#else
  return 1;
#endif
}

void gemm(Trans ta, Trans tb, std::size_t m, std::size_t n, std::size_t k, std::span<const double> a,
          std::span<const double> b, std::span<double> c) {
  check_sizes(m, n, k, a.size(), b.size(), c.size());
  const double* A = a.data();
  const double* B = b.data();
  double* C = c.data();
  const bool par = m * n * k >= kParallelWork && m > 1;
  const long mm = static_cast<long>(m);

  if (tb == Trans::No) {
    // Row i of C accumulates scaled rows of B.
#pragma omp parallel for schedule(static) if (par)
    for (long ii = 0; ii < mm; ++ii) {
      const auto i = static_cast<std::size_t>(ii);
      double* crow = C + i * n;
      std::fill(crow, crow + n, 0.0);
      for (std::size_t p = 0; p < k; ++p) {
        const double av = ta == Trans::No ? A[i * k + p] : A[p * m + i];
        const double* brow = B + p * n;
        for (std::size_t j = 0; j < n; ++j) crow[j] += av * brow[j];
      }
    }
    return;
  }

  // B stored n x k: each output is a dot product over contiguous rows.
#pragma omp parallel for schedule(static) if (par)
  for (long ii = 0; ii < mm; ++ii) {
    const auto i = static_cast<std::size_t>(ii);
    for (std::size_t j = 0; j < n; ++j) {
      const double* brow = B + j * k;
      double s = 0.0;
      if (ta == Trans::No) {
        const double* arow = A + i * k;
        for (std::size_t p = 0; p < k; ++p) s += arow[p] * brow[p];
      } else {
        for (std::size_t p = 0; p < k; ++p) s += A[p * m + i] * brow[p];
      }
      C[i * n + j] = s;
    }
  }
}

void axpy(double alpha, std::span<const double> x, std::span<double> out) {
  const std::size_t n = x.size();
  if (out.size() != n) throw DimensionError("axpy: length mismatch");
  for (std::size_t i = 0; i < n; ++i) out[i] += alpha * x[i];
}

namespace reference {

void gemm(Trans ta, Trans tb, std::size_t m, std::size_t n, std::size_t k, std::span<const double> a,
          std::span<const double> b, std::span<double> c) {
  check_sizes(m, n, k, a.size(), b.size(), c.size());
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      double s = 0.0;
      for (std::size_t p = 0; p < k; ++p) {
        const double av = ta == Trans::No ? a[i * k + p] : a[p * m + i];
        const double bv = tb == Trans::No ? b[p * n + j] : b[j * k + p];
        s += av * bv;
      }
      c[i * n + j] = s;
    }
  }
}

}  // namespace reference

}  // namespace dualre::kernels

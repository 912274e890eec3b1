#pragma once

#include <cstddef>
#include <span>

namespace dualre::kernels {

enum class Trans { No, Yes };

// C[m x n] = op(A) * op(B), overwriting C. op(A) is m x k; A is stored
// row-major as m x k (Trans::No) or k x m (Trans::Yes), likewise B.
// Every output element is summed over k in ascending order starting from
// 0.0, so the parallel and serial kernels agree bit-for-bit.
void gemm(Trans ta, Trans tb, std::size_t m, std::size_t n, std::size_t k, std::span<const double> a,
          std::span<const double> b, std::span<double> c);

// out[i] += alpha * x[i]
void axpy(double alpha, std::span<const double> x, std::span<double> out);

// Number of threads used by the parallel kernels and the pair-level loops.
void set_num_threads(int n);
int num_threads();

namespace reference {

// Plain triple loop, single-threaded. Kept as the oracle for gemm.
void gemm(Trans ta, Trans tb, std::size_t m, std::size_t n, std::size_t k, std::span<const double> a,
          std::span<const double> b, std::span<double> c);

}  // namespace reference

}  // namespace dualre::kernels

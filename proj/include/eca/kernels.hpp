#pragma once

#include <cstddef>
#include <cstdint>

namespace eca::kernels {

// Runtime switch for the OpenMP paths. Results are bitwise identical either
// way: every parallel loop assigns each output element to exactly one thread
// and keeps the per-element accumulation order fixed.
bool parallel_enabled();
void set_parallel(bool on);

// Work sizes below this stay serial; threading tiny tensors just adds overhead.
inline constexpr std::int64_t kParallelGrain = 1 << 17;

// Serial reference implementations. These are the ground truth the parallel
// kernels are tested against and what the benchmark tool compares.
namespace serial {

// out[m x n] = a[m x k] * b[k x n], row-major
void matmul(const double* a, const double* b, double* out, int m, int k, int n);
// out[m x n] = a^T * b with a stored [k x m]
void matmul_tn(const double* a, const double* b, double* out, int m, int k, int n);
// out[m x n] = a * b^T with b stored [n x k]
void matmul_nt(const double* a, const double* b, double* out, int m, int k, int n);
// out[n x k]: squared Euclidean distance from each of n points to each of k centers
void pairwise_sqdist(const double* x, int n, const double* c, int k, int d, double* out);

template <typename F>
void map(const double* in, double* out, std::size_t n, F f) {
    for (std::size_t i = 0; i < n; ++i) out[i] = f(in[i]);
}

}  // namespace serial

// Parallel counterparts (OpenMP when compiled in, serial fallback otherwise).
void matmul(const double* a, const double* b, double* out, int m, int k, int n);
void matmul_tn(const double* a, const double* b, double* out, int m, int k, int n);
void matmul_nt(const double* a, const double* b, double* out, int m, int k, int n);
void pairwise_sqdist(const double* x, int n, const double* c, int k, int d, double* out);

template <typename F>
void map(const double* in, double* out, std::size_t n, F f) {
    const auto sn = static_cast<std::int64_t>(n);
#pragma omp parallel for if (parallel_enabled() && sn >= kParallelGrain)
    for (std::int64_t i = 0; i < sn; ++i) out[i] = f(in[i]);
}

}  // namespace eca::kernels

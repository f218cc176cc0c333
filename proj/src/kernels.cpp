#include "eca/kernels.hpp"

#include <atomic>

namespace eca::kernels {

namespace {
std::atomic<bool> g_parallel{true};
}

bool parallel_enabled() { return g_parallel.load(std::memory_order_relaxed); }
void set_parallel(bool on) { g_parallel.store(on, std::memory_order_relaxed); }

namespace serial {

void matmul(const double* a, const double* b, double* out, int m, int k, int n) {
    for (int i = 0; i < m; ++i) {
        const double* ai = a + static_cast<std::size_t>(i) * k;
        double* oi = out + static_cast<std::size_t>(i) * n;
        for (int j = 0; j < n; ++j) oi[j] = 0.0;
        for (int p = 0; p < k; ++p) {
            const double av = ai[p];
            const double* bp = b + static_cast<std::size_t>(p) * n;
            for (int j = 0; j < n; ++j) oi[j] += av * bp[j];
        }
    }
}

void matmul_tn(const double* a, const double* b, double* out, int m, int k, int n) {
    for (int i = 0; i < m; ++i) {
        double* oi = out + static_cast<std::size_t>(i) * n;
        for (int j = 0; j < n; ++j) oi[j] = 0.0;
        for (int p = 0; p < k; ++p) {
            const double av = a[static_cast<std::size_t>(p) * m + i];
            const double* bp = b + static_cast<std::size_t>(p) * n;
            for (int j = 0; j < n; ++j) oi[j] += av * bp[j];
        }
    }
}

void matmul_nt(const double* a, const double* b, double* out, int m, int k, int n) {
    for (int i = 0; i < m; ++i) {
        const double* ai = a + static_cast<std::size_t>(i) * k;
        double* oi = out + static_cast<std::size_t>(i) * n;
        for (int j = 0; j < n; ++j) {
            const double* bj = b + static_cast<std::size_t>(j) * k;
            double acc = 0.0;
            for (int p = 0; p < k; ++p) acc += ai[p] * bj[p];
            oi[j] = acc;
        }
    }
}

void pairwise_sqdist(const double* x, int n, const double* c, int k, int d, double* out) {
    for (int i = 0; i < n; ++i) {
        const double* xi = x + static_cast<std::size_t>(i) * d;
        double* oi = out + static_cast<std::size_t>(i) * k;
        for (int j = 0; j < k; ++j) {
            const double* cj = c + static_cast<std::size_t>(j) * d;
            double acc = 0.0;
            for (int p = 0; p < d; ++p) {
                const double diff = xi[p] - cj[p];
                acc += diff * diff;
            }
            oi[j] = acc;
        }
    }
}

}  // namespace serial

// Each parallel kernel splits work by output row; the per-element accumulation
// order matches the serial loop exactly, so results are bitwise identical.

void matmul(const double* a, const double* b, double* out, int m, int k, int n) {
    const std::int64_t work = static_cast<std::int64_t>(m) * k * n;
#pragma omp parallel for if (parallel_enabled() && work >= kParallelGrain)
    for (int i = 0; i < m; ++i) {
        serial::matmul(a + static_cast<std::size_t>(i) * k, b,
                       out + static_cast<std::size_t>(i) * n, 1, k, n);
    }
}

void matmul_tn(const double* a, const double* b, double* out, int m, int k, int n) {
    const std::int64_t work = static_cast<std::int64_t>(m) * k * n;
#pragma omp parallel for if (parallel_enabled() && work >= kParallelGrain)
    for (int i = 0; i < m; ++i) {
        double* oi = out + static_cast<std::size_t>(i) * n;
        for (int j = 0; j < n; ++j) oi[j] = 0.0;
        for (int p = 0; p < k; ++p) {
            const double av = a[static_cast<std::size_t>(p) * m + i];
            const double* bp = b + static_cast<std::size_t>(p) * n;
            for (int j = 0; j < n; ++j) oi[j] += av * bp[j];
        }
    }
}

void matmul_nt(const double* a, const double* b, double* out, int m, int k, int n) {
    const std::int64_t work = static_cast<std::int64_t>(m) * k * n;
#pragma omp parallel for if (parallel_enabled() && work >= kParallelGrain)
    for (int i = 0; i < m; ++i) {
        serial::matmul_nt(a + static_cast<std::size_t>(i) * k, b,
                          out + static_cast<std::size_t>(i) * n, 1, k, n);
    }
}

void pairwise_sqdist(const double* x, int n, const double* c, int k, int d, double* out) {
    const std::int64_t work = static_cast<std::int64_t>(n) * k * d;
#pragma omp parallel for if (parallel_enabled() && work >= kParallelGrain)
    for (int i = 0; i < n; ++i) {
        serial::pairwise_sqdist(x + static_cast<std::size_t>(i) * d, 1, c, k, d,
                                out + static_cast<std::size_t>(i) * k);
    }
}

}  // namespace eca::kernels

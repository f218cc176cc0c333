// Times the serial reference kernels against the OpenMP versions on the
// shapes the trainer actually produces, plus a few larger ones.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <vector>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "eca/kernels.hpp"
#include "eca/rng.hpp"

namespace {

using Clock = std::chrono::steady_clock;

double time_ms(int repeats, const std::function<void()>& fn) {
    fn();  // warm up
    const auto start = Clock::now();
    for (int r = 0; r < repeats; ++r) fn();
    const auto stop = Clock::now();
    return std::chrono::duration<double, std::milli>(stop - start).count() / repeats;
}

std::vector<double> random_vec(std::size_t n, eca::Rng& rng) {
    std::vector<double> v(n);
    for (double& x : v) x = rng.normal();
    return v;
}

void bench_matmul(int m, int k, int n, int repeats, eca::Rng& rng) {
    const auto a = random_vec(static_cast<std::size_t>(m) * k, rng);
    const auto b = random_vec(static_cast<std::size_t>(k) * n, rng);
    std::vector<double> out(static_cast<std::size_t>(m) * n);
    const double serial_ms = time_ms(
        repeats, [&] { eca::kernels::serial::matmul(a.data(), b.data(), out.data(), m, k, n); });
    const double par_ms =
        time_ms(repeats, [&] { eca::kernels::matmul(a.data(), b.data(), out.data(), m, k, n); });
    std::printf("matmul %5dx%-4dx%-5d  serial %8.3f ms  parallel %8.3f ms  speedup %.2fx\n", m, k,
                n, serial_ms, par_ms, serial_ms / par_ms);
}

void bench_sqdist(int n, int k, int d, int repeats, eca::Rng& rng) {
    const auto x = random_vec(static_cast<std::size_t>(n) * d, rng);
    const auto c = random_vec(static_cast<std::size_t>(k) * d, rng);
    std::vector<double> out(static_cast<std::size_t>(n) * k);
    const double serial_ms = time_ms(repeats, [&] {
        eca::kernels::serial::pairwise_sqdist(x.data(), n, c.data(), k, d, out.data());
    });
    const double par_ms = time_ms(
        repeats, [&] { eca::kernels::pairwise_sqdist(x.data(), n, c.data(), k, d, out.data()); });
    std::printf("sqdist %5dx%-4dx%-5d  serial %8.3f ms  parallel %8.3f ms  speedup %.2fx\n", n, k,
                d, serial_ms, par_ms, serial_ms / par_ms);
}

void bench_softplus(std::size_t n, int repeats, eca::Rng& rng) {
    const auto in = random_vec(n, rng);
    std::vector<double> out(n);
    const auto f = [](double x) {
        return x > 0.0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x));
    };
    const double serial_ms =
        time_ms(repeats, [&] { eca::kernels::serial::map(in.data(), out.data(), n, f); });
    const double par_ms =
        time_ms(repeats, [&] { eca::kernels::map(in.data(), out.data(), n, f); });
    std::printf("softplus %10zu        serial %8.3f ms  parallel %8.3f ms  speedup %.2fx\n", n,
                serial_ms, par_ms, serial_ms / par_ms);
}

}  // namespace

int main() {
#ifdef _OPENMP
    std::printf("OpenMP enabled, max threads %d\n", omp_get_max_threads());
#else
    std::printf("built without OpenMP; parallel kernels fall back to serial\n");
#endif
    eca::Rng rng(42);
    bench_matmul(128, 32, 32, 200, rng);    // adaptation batch shapes
    bench_matmul(512, 64, 64, 100, rng);
    bench_matmul(1024, 128, 128, 20, rng);
    bench_sqdist(1800, 3, 37, 200, rng);    // per-epoch clustering shape
    bench_sqdist(8192, 16, 64, 20, rng);
    bench_softplus(1 << 20, 50, rng);
    return 0;
}

#include <doctest.h>

#include <cmath>
#include <cstring>
#include <tuple>
#include <vector>

#include "eca/kernels.hpp"
#include "eca/rng.hpp"

using namespace eca;

namespace {

std::vector<double> random_vec(std::size_t n, Rng& rng) {
    std::vector<double> v(n);
    for (double& x : v) x = rng.normal();
    return v;
}

bool bitwise_equal(const std::vector<double>& a, const std::vector<double>& b) {
    return a.size() == b.size() &&
           std::memcmp(a.data(), b.data(), a.size() * sizeof(double)) == 0;
}

}  // namespace

TEST_SUITE_BEGIN("kernels");

TEST_CASE("parallel matmul matches serial bitwise") {
    Rng rng(11);
    kernels::set_parallel(true);
    for (const auto& [m, k, n] :
         {std::tuple<int, int, int>{3, 4, 5}, {64, 32, 32}, {130, 70, 90}}) {
        const auto a = random_vec(static_cast<std::size_t>(m) * k, rng);
        const auto b = random_vec(static_cast<std::size_t>(k) * n, rng);
        std::vector<double> ref(static_cast<std::size_t>(m) * n), par(ref.size());
        kernels::serial::matmul(a.data(), b.data(), ref.data(), m, k, n);
        kernels::matmul(a.data(), b.data(), par.data(), m, k, n);
        CHECK(bitwise_equal(ref, par));
    }
}

TEST_CASE("parallel transposed matmuls match serial bitwise") {
    Rng rng(12);
    const int m = 48, k = 56, n = 40;
    const auto at = random_vec(static_cast<std::size_t>(k) * m, rng);
    const auto b = random_vec(static_cast<std::size_t>(k) * n, rng);
    std::vector<double> ref(static_cast<std::size_t>(m) * n), par(ref.size());
    kernels::serial::matmul_tn(at.data(), b.data(), ref.data(), m, k, n);
    kernels::matmul_tn(at.data(), b.data(), par.data(), m, k, n);
    CHECK(bitwise_equal(ref, par));

    const auto a = random_vec(static_cast<std::size_t>(m) * k, rng);
    const auto bt = random_vec(static_cast<std::size_t>(n) * k, rng);
    kernels::serial::matmul_nt(a.data(), bt.data(), ref.data(), m, k, n);
    kernels::matmul_nt(a.data(), bt.data(), par.data(), m, k, n);
    CHECK(bitwise_equal(ref, par));
}

TEST_CASE("transposed variants agree with explicit transposition") {
    Rng rng(13);
    const int m = 7, k = 9, n = 6;
    const auto a = random_vec(static_cast<std::size_t>(m) * k, rng);
    const auto b = random_vec(static_cast<std::size_t>(k) * n, rng);
    std::vector<double> expect(static_cast<std::size_t>(m) * n);
    kernels::serial::matmul(a.data(), b.data(), expect.data(), m, k, n);

    std::vector<double> at(static_cast<std::size_t>(k) * m);
    for (int i = 0; i < m; ++i)
        for (int p = 0; p < k; ++p)
            at[static_cast<std::size_t>(p) * m + i] = a[static_cast<std::size_t>(i) * k + p];
    std::vector<double> got(expect.size());
    kernels::serial::matmul_tn(at.data(), b.data(), got.data(), m, k, n);
    for (std::size_t i = 0; i < got.size(); ++i)
        CHECK(got[i] == doctest::Approx(expect[i]).epsilon(1e-12));

    std::vector<double> bt(static_cast<std::size_t>(n) * k);
    for (int p = 0; p < k; ++p)
        for (int j = 0; j < n; ++j)
            bt[static_cast<std::size_t>(j) * k + p] = b[static_cast<std::size_t>(p) * n + j];
    kernels::serial::matmul_nt(a.data(), bt.data(), got.data(), m, k, n);
    for (std::size_t i = 0; i < got.size(); ++i)
        CHECK(got[i] == doctest::Approx(expect[i]).epsilon(1e-12));
}

TEST_CASE("parallel pairwise sqdist matches serial bitwise") {
    Rng rng(14);
    const int n = 500, k = 7, d = 23;
    const auto x = random_vec(static_cast<std::size_t>(n) * d, rng);
    const auto c = random_vec(static_cast<std::size_t>(k) * d, rng);
    std::vector<double> ref(static_cast<std::size_t>(n) * k), par(ref.size());
    kernels::serial::pairwise_sqdist(x.data(), n, c.data(), k, d, ref.data());
    kernels::pairwise_sqdist(x.data(), n, c.data(), k, d, par.data());
    CHECK(bitwise_equal(ref, par));

    double acc = 0.0;
    for (int p = 0; p < d; ++p) {
        const double diff = x[p] - c[p];
        acc += diff * diff;
    }
    CHECK(ref[0] == doctest::Approx(acc).epsilon(1e-12));
}

TEST_CASE("parallel map matches serial bitwise above the grain") {
    Rng rng(15);
    const std::size_t n = 1 << 16;
    const auto in = random_vec(n, rng);
    std::vector<double> ref(n), par(n);
    const auto f = [](double x) {
        return x > 0.0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x));
    };
    kernels::serial::map(in.data(), ref.data(), n, f);
    kernels::map(in.data(), par.data(), n, f);
    CHECK(bitwise_equal(ref, par));
}

TEST_CASE("parallel toggle leaves results unchanged") {
    Rng rng(16);
    const int m = 90, k = 64, n = 64;
    const auto a = random_vec(static_cast<std::size_t>(m) * k, rng);
    const auto b = random_vec(static_cast<std::size_t>(k) * n, rng);
    std::vector<double> on(static_cast<std::size_t>(m) * n), off(on.size());
    kernels::set_parallel(true);
    kernels::matmul(a.data(), b.data(), on.data(), m, k, n);
    kernels::set_parallel(false);
    kernels::matmul(a.data(), b.data(), off.data(), m, k, n);
    kernels::set_parallel(true);
    CHECK(bitwise_equal(on, off));
}

TEST_SUITE_END();

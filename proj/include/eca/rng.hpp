#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

namespace eca {

// Deterministic random source. mt19937_64 has a fully specified sequence, and
// all distributions here are implemented by hand so that a (seed, call order)
// pair produces the same stream on every platform and build.
class Rng {
  public:
    explicit Rng(std::uint64_t seed) : gen_(seed) {}

    // Uniform in [0, 1) with 53 bits of mantissa.
    double uniform() { return static_cast<double>(gen_() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    // Box-Muller with a cached spare.
    double normal() {
        if (has_spare_) {
            has_spare_ = false;
            return spare_;
        }
        double u1 = uniform();
        while (u1 <= 0.0) u1 = uniform();
        const double u2 = uniform();
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double a = 2.0 * M_PI * u2;
        spare_ = r * std::sin(a);
        has_spare_ = true;
        return r * std::cos(a);
    }

    // Uniform integer in [0, n). n must be positive.
    int below(int n) {
        const auto i = static_cast<int>(uniform() * static_cast<double>(n));
        return i < n ? i : n - 1;
    }

    // Fisher-Yates.
    template <typename T>
    void shuffle(std::vector<T>& v) {
        for (std::size_t i = v.size(); i > 1; --i) {
            std::swap(v[i - 1], v[static_cast<std::size_t>(below(static_cast<int>(i)))]);
        }
    }

    std::vector<int> permutation(int n) {
        std::vector<int> p(static_cast<std::size_t>(n));
        for (int i = 0; i < n; ++i) p[static_cast<std::size_t>(i)] = i;
        shuffle(p);
        return p;
    }

  private:
    std::mt19937_64 gen_;
    double spare_ = 0.0;
    bool has_spare_ = false;
};

// Every component draws from its own stream derived from the one master seed,
// so components stay reproducible in isolation. Offsets are part of the file
// format contract (a config echo plus these constants reproduces a run).
namespace seeds {
inline constexpr std::uint64_t kData = 101;
inline constexpr std::uint64_t kInit = 202;
inline constexpr std::uint64_t kPretrainShuffle = 303;
inline constexpr std::uint64_t kAdaptShuffle = 404;
inline constexpr std::uint64_t kViews = 505;
inline constexpr std::uint64_t kClusters = 606;
inline constexpr std::uint64_t kPriors = 707;

inline std::uint64_t sub_seed(std::uint64_t master, std::uint64_t offset) {
    return master * 0x9E3779B97F4A7C15ull + offset;
}
}  // namespace seeds

}  // namespace eca

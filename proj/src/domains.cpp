#include "eca/domains.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <json.hpp>

#include "eca/kernels.hpp"
#include "eca/rng.hpp"

namespace eca::domains {

namespace {

constexpr int kMaxLloydSweeps = 100;
constexpr double kShiftTolerance = 1e-8;
constexpr int kSeedingRestarts = 4;

struct Standardized {
    int n = 0;
    int dim = 0;
    std::vector<double> x;  // [n x dim]
    std::vector<double> mean;
    std::vector<double> scale;
};

Standardized standardize(const Tensor& raw, const Tensor& shallow) {
    if (raw.shape().size() != 2 || shallow.shape().size() != 2) {
        throw DimensionError("cluster_domains: raw and shallow must be 2-D");
    }
    if (raw.shape()[0] != shallow.shape()[0]) {
        throw DimensionError("cluster_domains: raw and shallow row counts differ");
    }
    Standardized s;
    s.n = raw.shape()[0];
    const int dr = raw.shape()[1], ds = shallow.shape()[1];
    s.dim = dr + ds;
    s.x.resize(static_cast<std::size_t>(s.n) * s.dim);
    for (int i = 0; i < s.n; ++i) {
        double* row = s.x.data() + static_cast<std::size_t>(i) * s.dim;
        for (int j = 0; j < dr; ++j) row[j] = raw.at(static_cast<std::size_t>(i) * dr + j);
        for (int j = 0; j < ds; ++j) row[dr + j] = shallow.at(static_cast<std::size_t>(i) * ds + j);
    }
    s.mean.assign(static_cast<std::size_t>(s.dim), 0.0);
    s.scale.assign(static_cast<std::size_t>(s.dim), 1.0);
    for (int j = 0; j < s.dim; ++j) {
        double m = 0.0;
        for (int i = 0; i < s.n; ++i) m += s.x[static_cast<std::size_t>(i) * s.dim + j];
        m /= s.n;
        double var = 0.0;
        for (int i = 0; i < s.n; ++i) {
            const double d = s.x[static_cast<std::size_t>(i) * s.dim + j] - m;
            var += d * d;
        }
        var /= s.n;
        s.mean[static_cast<std::size_t>(j)] = m;
        s.scale[static_cast<std::size_t>(j)] = std::sqrt(var) + kEps;
    }
    for (int i = 0; i < s.n; ++i)
        for (int j = 0; j < s.dim; ++j) {
            auto& v = s.x[static_cast<std::size_t>(i) * s.dim + j];
            v = (v - s.mean[static_cast<std::size_t>(j)]) / s.scale[static_cast<std::size_t>(j)];
        }
    return s;
}

double sqdist(const double* a, const double* b, int d) {
    double acc = 0.0;
    for (int j = 0; j < d; ++j) {
        const double diff = a[j] - b[j];
        acc += diff * diff;
    }
    return acc;
}

// k-means++: first center uniform, then proportional to squared distance.
std::vector<double> seed_centroids(const Standardized& s, int k, Rng& rng) {
    std::vector<double> centroids(static_cast<std::size_t>(k) * s.dim);
    std::vector<double> min_d2(static_cast<std::size_t>(s.n),
                               std::numeric_limits<double>::infinity());
    const int first = rng.below(s.n);
    std::copy_n(s.x.data() + static_cast<std::size_t>(first) * s.dim, s.dim, centroids.data());
    for (int c = 1; c < k; ++c) {
        const double* prev = centroids.data() + static_cast<std::size_t>(c - 1) * s.dim;
        double total = 0.0;
        for (int i = 0; i < s.n; ++i) {
            const double d2 = sqdist(s.x.data() + static_cast<std::size_t>(i) * s.dim, prev, s.dim);
            auto& cur = min_d2[static_cast<std::size_t>(i)];
            cur = std::min(cur, d2);
            total += cur;
        }
        int pick;
        if (total <= 0.0) {
            pick = rng.below(s.n);  // all points coincide with chosen centers
        } else {
            const double target = rng.uniform() * total;
            double run = 0.0;
            pick = s.n - 1;
            for (int i = 0; i < s.n; ++i) {
                run += min_d2[static_cast<std::size_t>(i)];
                if (run >= target) {
                    pick = i;
                    break;
                }
            }
        }
        std::copy_n(s.x.data() + static_cast<std::size_t>(pick) * s.dim, s.dim,
                    centroids.data() + static_cast<std::size_t>(c) * s.dim);
    }
    return centroids;
}

struct LloydResult {
    std::vector<double> centroids;
    std::vector<int> assignment;
    std::vector<double> inertia;
};

LloydResult lloyd(const Standardized& s, std::vector<double> centroids, int k) {
    LloydResult r;
    r.centroids = std::move(centroids);
    r.assignment.assign(static_cast<std::size_t>(s.n), 0);
    std::vector<double> d2(static_cast<std::size_t>(s.n) * k);
    std::vector<double> next(static_cast<std::size_t>(k) * s.dim);
    std::vector<int> counts(static_cast<std::size_t>(k));

    for (int sweep = 0; sweep < kMaxLloydSweeps; ++sweep) {
        kernels::pairwise_sqdist(s.x.data(), s.n, r.centroids.data(), k, s.dim, d2.data());
        double inertia = 0.0;
        for (int i = 0; i < s.n; ++i) {
            const double* row = d2.data() + static_cast<std::size_t>(i) * k;
            int best = 0;
            for (int c = 1; c < k; ++c)
                if (row[c] < row[best]) best = c;
            r.assignment[static_cast<std::size_t>(i)] = best;
            inertia += row[best];
        }
        r.inertia.push_back(inertia);

        std::fill(next.begin(), next.end(), 0.0);
        std::fill(counts.begin(), counts.end(), 0);
        for (int i = 0; i < s.n; ++i) {
            const int c = r.assignment[static_cast<std::size_t>(i)];
            ++counts[static_cast<std::size_t>(c)];
            const double* xi = s.x.data() + static_cast<std::size_t>(i) * s.dim;
            double* nc = next.data() + static_cast<std::size_t>(c) * s.dim;
            for (int j = 0; j < s.dim; ++j) nc[j] += xi[j];
        }
        // Empty cluster: re-seed at the point farthest from its assigned
        // centroid (lowest index on ties), then recompute that point's cluster.
        for (int c = 0; c < k; ++c) {
            if (counts[static_cast<std::size_t>(c)] > 0) continue;
            int far = 0;
            double far_d = -1.0;
            for (int i = 0; i < s.n; ++i) {
                const double d = d2[static_cast<std::size_t>(i) * k +
                                    r.assignment[static_cast<std::size_t>(i)]];
                if (d > far_d) {
                    far_d = d;
                    far = i;
                }
            }
            const double* xi = s.x.data() + static_cast<std::size_t>(far) * s.dim;
            std::copy_n(xi, s.dim, next.data() + static_cast<std::size_t>(c) * s.dim);
            counts[static_cast<std::size_t>(c)] = 1;
            // Remove the stolen point's mass from its old cluster.
            const int old = r.assignment[static_cast<std::size_t>(far)];
            if (old != c && counts[static_cast<std::size_t>(old)] > 1) {
                double* oc = next.data() + static_cast<std::size_t>(old) * s.dim;
                for (int j = 0; j < s.dim; ++j) oc[j] -= xi[j];
                --counts[static_cast<std::size_t>(old)];
            }
            r.assignment[static_cast<std::size_t>(far)] = c;
        }

        double shift = 0.0;
        for (int c = 0; c < k; ++c) {
            double* nc = next.data() + static_cast<std::size_t>(c) * s.dim;
            const double inv = 1.0 / counts[static_cast<std::size_t>(c)];
            for (int j = 0; j < s.dim; ++j) nc[j] *= inv;
            shift = std::max(shift, std::sqrt(sqdist(
                                        nc, r.centroids.data() + static_cast<std::size_t>(c) * s.dim,
                                        s.dim)));
        }
        r.centroids.swap(next);
        if (shift < kShiftTolerance) break;
    }

    // Final assignment against the converged centroids.
    kernels::pairwise_sqdist(s.x.data(), s.n, r.centroids.data(), k, s.dim, d2.data());
    double inertia = 0.0;
    for (int i = 0; i < s.n; ++i) {
        const double* row = d2.data() + static_cast<std::size_t>(i) * k;
        int best = 0;
        for (int c = 1; c < k; ++c)
            if (row[c] < row[best]) best = c;
        r.assignment[static_cast<std::size_t>(i)] = best;
        inertia += row[best];
    }
    r.inertia.push_back(inertia);
    return r;
}

DomainModel finish_model(const Standardized& s, LloydResult lr, int k) {
    DomainModel m;
    m.k = k;
    m.dim = s.dim;
    m.centroids = std::move(lr.centroids);
    m.assignment = std::move(lr.assignment);
    m.lloyd_inertia = std::move(lr.inertia);
    m.mean = s.mean;
    m.scale = s.scale;
    m.distance = distance_matrix(m.centroids, k, s.dim, &m.max_distance);
    return m;
}

}  // namespace

std::vector<double> distance_matrix(const std::vector<double>& centroids, int k, int dim,
                                    double* max_distance_out) {
    std::vector<double> dist(static_cast<std::size_t>(k) * k, 0.0);
    double max_d = 0.0;
    for (int a = 0; a < k; ++a) {
        for (int b = a + 1; b < k; ++b) {
            const double d = std::sqrt(sqdist(centroids.data() + static_cast<std::size_t>(a) * dim,
                                              centroids.data() + static_cast<std::size_t>(b) * dim,
                                              dim));
            dist[static_cast<std::size_t>(a) * k + b] = d;
            dist[static_cast<std::size_t>(b) * k + a] = d;
            max_d = std::max(max_d, d);
        }
    }
    std::vector<double> out(static_cast<std::size_t>(k) * k, 1.0);
    for (int a = 0; a < k; ++a) {
        for (int b = 0; b < k; ++b) {
            if (a == b) continue;
            out[static_cast<std::size_t>(a) * k + b] =
                max_d > 0.0 ? 1.0 + dist[static_cast<std::size_t>(a) * k + b] / max_d : 1.0;
        }
    }
    if (max_distance_out) *max_distance_out = max_d;
    return out;
}

DomainModel cluster_domains(const Tensor& raw, const Tensor& shallow, int k, std::uint64_t seed) {
    if (k < 2) throw ConfigError("cluster_domains: k must be at least 2");
    Standardized s = standardize(raw, shallow);
    if (k > s.n) throw ConfigError("cluster_domains: k exceeds sample count");
    Rng rng(seeds::sub_seed(seed, seeds::kClusters));
    // Several seedings, keep the lowest final inertia (first wins ties).
    LloydResult best;
    for (int restart = 0; restart < kSeedingRestarts; ++restart) {
        LloydResult r = lloyd(s, seed_centroids(s, k, rng), k);
        if (best.inertia.empty() || r.inertia.back() < best.inertia.back()) best = std::move(r);
    }
    return finish_model(s, std::move(best), k);
}

double domain_distance(const DomainModel& model, int i_domain, int j_domain) {
    if (i_domain < 0 || i_domain >= model.k || j_domain < 0 || j_domain >= model.k) {
        throw ContractError("domain_distance: domain index out of range");
    }
    return model.distance[static_cast<std::size_t>(i_domain) * model.k + j_domain];
}

DomainModel refresh(const DomainModel& prev, const Tensor& raw, const Tensor& shallow,
                    std::uint64_t seed) {
    Standardized s = standardize(raw, shallow);
    if (prev.k > s.n) throw ConfigError("refresh: k exceeds sample count");
    if (static_cast<int>(prev.assignment.size()) != s.n) {
        throw DimensionError("refresh: sample count changed since previous model");
    }
    // Warm start: previous memberships, averaged in the fresh standardized
    // space. Equals the previous centroids whenever the features are stable.
    std::vector<double> centroids(static_cast<std::size_t>(prev.k) * s.dim, 0.0);
    std::vector<int> counts(static_cast<std::size_t>(prev.k), 0);
    for (int i = 0; i < s.n; ++i) {
        const int c = prev.assignment[static_cast<std::size_t>(i)];
        ++counts[static_cast<std::size_t>(c)];
        const double* xi = s.x.data() + static_cast<std::size_t>(i) * s.dim;
        double* cc = centroids.data() + static_cast<std::size_t>(c) * s.dim;
        for (int j = 0; j < s.dim; ++j) cc[j] += xi[j];
    }
    Rng rng(seeds::sub_seed(seed, seeds::kClusters));
    for (int c = 0; c < prev.k; ++c) {
        if (counts[static_cast<std::size_t>(c)] == 0) {
            // Dead cluster carried over: drop it on a random point.
            const int pick = rng.below(s.n);
            std::copy_n(s.x.data() + static_cast<std::size_t>(pick) * s.dim, s.dim,
                        centroids.data() + static_cast<std::size_t>(c) * s.dim);
            continue;
        }
        double* cc = centroids.data() + static_cast<std::size_t>(c) * s.dim;
        const double inv = 1.0 / counts[static_cast<std::size_t>(c)];
        for (int j = 0; j < s.dim; ++j) cc[j] *= inv;
    }
    return finish_model(s, lloyd(s, std::move(centroids), prev.k), prev.k);
}

std::string to_json(const DomainModel& model) {
    nlohmann::json doc;
    doc["k"] = model.k;
    nlohmann::json cents = nlohmann::json::array();
    for (int c = 0; c < model.k; ++c) {
        nlohmann::json row = nlohmann::json::array();
        for (int j = 0; j < model.dim; ++j)
            row.push_back(model.centroids[static_cast<std::size_t>(c) * model.dim + j]);
        cents.push_back(std::move(row));
    }
    doc["centroids"] = std::move(cents);
    doc["assignment"] = model.assignment;
    nlohmann::json dmat = nlohmann::json::array();
    for (int a = 0; a < model.k; ++a) {
        nlohmann::json row = nlohmann::json::array();
        for (int b = 0; b < model.k; ++b)
            row.push_back(model.distance[static_cast<std::size_t>(a) * model.k + b]);
        dmat.push_back(std::move(row));
    }
    doc["D"] = std::move(dmat);
    return doc.dump(2);
}

}  // namespace eca::domains

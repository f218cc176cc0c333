#include "eca/contrast.hpp"

#include <algorithm>
#include <cmath>

#include "eca/rng.hpp"

namespace eca::contrast {

namespace {

std::vector<double> feature_std(const Tensor& x) {
    const int n = x.shape()[0], d = x.shape()[1];
    std::vector<double> out(static_cast<std::size_t>(d), 0.0);
    for (int j = 0; j < d; ++j) {
        double m = 0.0;
        for (int i = 0; i < n; ++i) m += x.at(static_cast<std::size_t>(i) * d + j);
        m /= n;
        double var = 0.0;
        for (int i = 0; i < n; ++i) {
            const double diff = x.at(static_cast<std::size_t>(i) * d + j) - m;
            var += diff * diff;
        }
        out[static_cast<std::size_t>(j)] = std::sqrt(var / n);
    }
    return out;
}

void augment_into(const Tensor& x, const std::vector<double>& stds, const AugmentConfig& cfg,
                  Rng& rng, std::vector<double>& out) {
    const int n = x.shape()[0], d = x.shape()[1];
    const double max_angle = cfg.max_angle_deg * M_PI / 180.0;
    for (int i = 0; i < n; ++i) {
        const double* row = x.values().data() + static_cast<std::size_t>(i) * d;
        double* orow = out.data() + static_cast<std::size_t>(i) * d;
        std::copy_n(row, d, orow);
        if (d >= 2) {
            const double angle = rng.uniform(-max_angle, max_angle);
            const double c = std::cos(angle), s = std::sin(angle);
            const double gx = orow[0], gy = orow[1];
            orow[0] = c * gx - s * gy;
            orow[1] = s * gx + c * gy;
        }
        for (int j = 0; j < d; ++j) {
            orow[j] += rng.normal() * cfg.noise_scale * stds[static_cast<std::size_t>(j)];
        }
    }
}

}  // namespace

ViewPair make_views(const Tensor& x, std::uint64_t seed, const AugmentConfig& config) {
    if (x.shape().size() != 2) throw DimensionError("make_views: input must be [batch x dim]");
    const std::vector<double> stds = feature_std(x);
    Rng rng(seeds::sub_seed(seed, seeds::kViews));
    std::vector<double> a(x.size()), b(x.size());
    augment_into(x, stds, config, rng, a);
    augment_into(x, stds, config, rng, b);
    return {Tensor::from_values(x.shape(), std::move(a)),
            Tensor::from_values(x.shape(), std::move(b))};
}

PairGraph build_graph(const evidential::DirichletBelief& belief,
                      const evidential::SelectionMask& mask, const domains::DomainModel& domains,
                      const std::vector<int>& view_origin) {
    const int n = belief.batch;
    if (static_cast<int>(mask.selected.size()) != n ||
        static_cast<int>(view_origin.size()) != n) {
        throw DimensionError("build_graph: belief, mask and origin map sizes differ");
    }
    for (int v : view_origin) {
        if (v < 0 || v >= static_cast<int>(domains.assignment.size())) {
            throw ContractError("build_graph: origin index outside domain model");
        }
    }
    PairGraph g;
    g.n = n;
    g.adjacency.assign(static_cast<std::size_t>(n) * n, 0.0);
    g.pair_weight.assign(static_cast<std::size_t>(n) * n, 0.0);
    g.domain_dist.assign(static_cast<std::size_t>(n) * n, 0.0);
    g.weighted.assign(static_cast<std::size_t>(n) * n, 0.0);

    const auto& c = belief.confidence.values();
    const auto& u = belief.uncertainty.values();
    for (int i = 0; i < n; ++i) {
        const int dom_i = domains.assignment[static_cast<std::size_t>(view_origin[i])];
        for (int j = 0; j < n; ++j) {
            const std::size_t idx = static_cast<std::size_t>(i) * n + j;
            const int dom_j = domains.assignment[static_cast<std::size_t>(view_origin[j])];
            g.pair_weight[idx] = c[i] * c[j] * (1.0 - u[i]) * (1.0 - u[j]);
            g.domain_dist[idx] = domains.distance[static_cast<std::size_t>(dom_i) * domains.k + dom_j];
            if (i == j) {
                g.adjacency[idx] = 1.0;
                g.weighted[idx] = 1.0;
            } else if (mask.selected[static_cast<std::size_t>(i)] &&
                       mask.selected[static_cast<std::size_t>(j)] &&
                       belief.pseudo_label[static_cast<std::size_t>(i)] ==
                           belief.pseudo_label[static_cast<std::size_t>(j)]) {
                g.adjacency[idx] = 1.0;
                g.weighted[idx] = g.pair_weight[idx] * g.domain_dist[idx];
            }
        }
    }
    return g;
}

Tensor contrastive_loss(const PairGraph& graph, const Tensor& embeddings, double tau) {
    if (!(tau > 0.0)) throw ConfigError("contrastive_loss: tau must be positive");
    const int n = graph.n;
    if (n < 2 || n % 2 != 0) throw ContractError("contrastive_loss: need an even view count >= 2");
    if (embeddings.shape().size() != 2 || embeddings.shape()[0] != n) {
        throw DimensionError("contrastive_loss: embeddings must be [" + std::to_string(n) +
                             " x dim]");
    }

    // Positive coefficients: each anchor spreads 1/(1+|P(i)|) over its paired
    // view and every same-class selected view; the matching denominator
    // coefficients then sum to exactly one log per anchor.
    std::vector<double> pos_coeff(static_cast<std::size_t>(n) * n, 0.0);
    double edge_log_const = 0.0;
    for (int i = 0; i < n; ++i) {
        const int pair = paired_view(i, n);
        std::vector<int> positives;
        for (int p = 0; p < n; ++p) {
            if (p == i || p == pair) continue;
            if (graph.at(graph.adjacency, i, p) == 1.0) positives.push_back(p);
        }
        const double w = 1.0 / (1.0 + static_cast<double>(positives.size()));
        pos_coeff[static_cast<std::size_t>(i) * n + pair] += w;
        for (int p : positives) {
            pos_coeff[static_cast<std::size_t>(i) * n + p] += w;
            edge_log_const += w * std::log(std::max(graph.at(graph.weighted, i, p), kEps));
        }
    }

    Tensor scores = scale(matmul(embeddings, transpose(embeddings)), 1.0 / tau);
    // The anchor itself never enters its denominator. Zeroing the diagonal
    // before exp (and removing the resulting exp(0)=1 as an exact constant)
    // avoids the cancellation a subtract-the-diagonal formulation would hit.
    std::vector<double> off_diag(static_cast<std::size_t>(n) * n, 1.0);
    for (int i = 0; i < n; ++i) off_diag[static_cast<std::size_t>(i) * n + i] = 0.0;
    Tensor masked = mul(scores, Tensor::from_values({n, n}, std::move(off_diag)));
    Tensor denom = add_scalar(row_sum(exp(masked)), -1.0);
    Tensor coeff = Tensor::from_values({n, n}, std::move(pos_coeff));
    Tensor loss = sub(sum(log(denom)), sum(mul(coeff, scores)));
    return add_scalar(loss, -edge_log_const);
}

}  // namespace eca::contrast

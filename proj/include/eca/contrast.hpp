#pragma once

#include <cstdint>
#include <vector>

#include "eca/domains.hpp"
#include "eca/evidential.hpp"
#include "eca/tensor.hpp"

namespace eca::contrast {

struct AugmentConfig {
    double noise_scale = 0.05;    // times per-feature std of the batch
    double max_angle_deg = 10.0;  // rotation of the two geometric dims
};

// Two stochastic views of the same batch: rotate the first two coordinates by
// a per-sample angle, then add feature-scaled Gaussian noise. Deterministic
// per seed.
struct ViewPair {
    Tensor first;   // [B x d]
    Tensor second;  // [B x d]
};

ViewPair make_views(const Tensor& x, std::uint64_t seed, const AugmentConfig& config = {});

// View stacking convention used throughout: rows [first; second], so view v
// originates from sample v mod B and its other view is (v + B) mod 2B.
inline int paired_view(int view, int total_views) { return (view + total_views / 2) % total_views; }
inline int origin_sample(int view, int total_views) { return view % (total_views / 2); }

// Per-batch graphs over 2B views. adjacency: unit diagonal, off-diagonal 1
// only when both endpoints are selected and share a pseudo class.
// pair_weight: c_i c_j (1-u_i)(1-u_j). domain_dist: centroid distance of the
// views' origin domains. weighted: adjacency * pair_weight * domain_dist off
// the diagonal. All matrices are constants to the optimizer.
struct PairGraph {
    int n = 0;
    std::vector<double> adjacency;
    std::vector<double> pair_weight;
    std::vector<double> domain_dist;
    std::vector<double> weighted;

    double at(const std::vector<double>& m, int i, int j) const {
        return m[static_cast<std::size_t>(i) * n + j];
    }
};

// view_origin maps each of the 2B views to its sample's index in the domain
// model's assignment.
PairGraph build_graph(const evidential::DirichletBelief& belief,
                      const evidential::SelectionMask& mask, const domains::DomainModel& domains,
                      const std::vector<int>& view_origin);

// Weighted supervised-contrastive loss over the 2B views. For each anchor the
// positive set is the same-class selected views (its own paired view enters
// through a dedicated term); denominators run over every other view. Weights
// enter the loss through log(weighted edge), floored at kEps. Differentiable
// in the embeddings only.
Tensor contrastive_loss(const PairGraph& graph, const Tensor& embeddings, double tau);

}  // namespace eca::contrast

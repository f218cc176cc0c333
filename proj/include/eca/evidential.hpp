#pragma once

#include <cstdint>
#include <vector>

#include "eca/tensor.hpp"

namespace eca::evidential {

// Per-sample Dirichlet state derived from evidence e = softplus(logits):
// alpha = e + 1, strength S = sum(alpha), uncertainty u = M/S, probabilities
// p = alpha/S, confidence c = max p. All tensors stay on the logits' grad path.
struct DirichletBelief {
    int batch = 0;
    int num_classes = 0;
    Tensor evidence;     // [batch x M]
    Tensor alpha;        // [batch x M]
    Tensor strength;     // [batch]
    Tensor uncertainty;  // [batch]
    Tensor probs;        // [batch x M]
    Tensor confidence;   // [batch]
    std::vector<int> pseudo_label;  // argmax of probs per sample
};

DirichletBelief belief_from_logits(const Tensor& logits);

// Whether low or high uncertainty counts as high quality. The calibration
// loss pushes selected samples toward low uncertainty, so LowUncertainty is
// the default; HighUncertainty runs the literal inline-text criterion.
enum class UncertaintyDirection { kLowIsGood, kHighIsGood };

// Batch partition by the per-batch mean thresholds. Membership is a constant
// within a training step; no gradient crosses the thresholding.
struct SelectionMask {
    double eta_c = 0.0;  // batch mean confidence
    double eta_u = 0.0;  // batch mean uncertainty
    std::vector<bool> selected;
    int selected_count = 0;
};

SelectionMask select_high_quality(const DirichletBelief& belief,
                                  UncertaintyDirection dir = UncertaintyDirection::kLowIsGood);

// -lambda_t * sum_sel c_i log(1-u_i) - (1-lambda_t) * sum_rej (1-c_i) log(u_i)
Tensor cel_loss(const DirichletBelief& belief, const SelectionMask& mask, double lambda_t);

// Mean over selected samples of the Dirichlet expected cross-entropy
// digamma(S) - digamma(alpha_label) against the given labels. Empty selection
// gives a constant zero.
Tensor fit_loss(const DirichletBelief& belief, const std::vector<bool>& selected,
                const std::vector<int>& labels);

// fit_loss against the belief's own pseudo labels on the selected set.
Tensor pseudo_label_fit_loss(const DirichletBelief& belief, const SelectionMask& mask);

// lambda_t = lambda0^(1 - t/T): exponential rise from lambda0 at t=0 to 1 at t=T.
struct AnnealSchedule {
    double lambda0 = 0.01;
    long total_steps = 1;
};

double anneal(const AnnealSchedule& schedule, long t);

}  // namespace eca::evidential

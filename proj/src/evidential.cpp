#include "eca/evidential.hpp"

#include <cmath>

namespace eca::evidential {

DirichletBelief belief_from_logits(const Tensor& logits) {
    if (logits.shape().size() != 2) {
        throw DimensionError("belief_from_logits: logits must be [batch x M]");
    }
    DirichletBelief b;
    b.batch = logits.shape()[0];
    b.num_classes = logits.shape()[1];
    b.evidence = softplus(logits);
    b.alpha = add_scalar(b.evidence, 1.0);
    b.strength = row_sum(b.alpha);
    b.uncertainty = div(Tensor::full({b.batch}, static_cast<double>(b.num_classes)), b.strength);
    b.probs = div_rows(b.alpha, b.strength);
    b.confidence = row_max(b.probs);

    b.pseudo_label.resize(static_cast<std::size_t>(b.batch));
    const int m = b.num_classes;
    for (int i = 0; i < b.batch; ++i) {
        const double* row = b.probs.values().data() + static_cast<std::size_t>(i) * m;
        int best = 0;
        for (int j = 1; j < m; ++j)
            if (row[j] > row[best]) best = j;
        b.pseudo_label[static_cast<std::size_t>(i)] = best;
    }
    return b;
}

SelectionMask select_high_quality(const DirichletBelief& belief, UncertaintyDirection dir) {
    if (belief.batch < 1) throw ContractError("select_high_quality: empty batch");
    const int n = belief.batch;
    SelectionMask mask;
    double sum_c = 0.0, sum_u = 0.0;
    for (int i = 0; i < n; ++i) {
        sum_c += belief.confidence.at(static_cast<std::size_t>(i));
        sum_u += belief.uncertainty.at(static_cast<std::size_t>(i));
    }
    mask.eta_c = sum_c / n;
    mask.eta_u = sum_u / n;
    mask.selected.assign(static_cast<std::size_t>(n), false);
    for (int i = 0; i < n; ++i) {
        const double c = belief.confidence.at(static_cast<std::size_t>(i));
        const double u = belief.uncertainty.at(static_cast<std::size_t>(i));
        const bool u_ok = dir == UncertaintyDirection::kLowIsGood ? u < mask.eta_u
                                                                  : u > mask.eta_u;
        if (c > mask.eta_c && u_ok) {
            mask.selected[static_cast<std::size_t>(i)] = true;
            ++mask.selected_count;
        }
    }
    return mask;
}

Tensor cel_loss(const DirichletBelief& belief, const SelectionMask& mask, double lambda_t) {
    if (static_cast<int>(mask.selected.size()) != belief.batch) {
        throw DimensionError("cel_loss: mask size does not match batch");
    }
    const int n = belief.batch;
    std::vector<double> sel_w(static_cast<std::size_t>(n)), rej_w(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
        sel_w[static_cast<std::size_t>(i)] = mask.selected[static_cast<std::size_t>(i)] ? 1.0 : 0.0;
        rej_w[static_cast<std::size_t>(i)] = 1.0 - sel_w[static_cast<std::size_t>(i)];
    }
    Tensor sel = Tensor::from_values({n}, std::move(sel_w));
    Tensor rej = Tensor::from_values({n}, std::move(rej_w));

    Tensor accurate_term = sum(mul(sel, mul(belief.confidence, log(rsub_scalar(1.0, belief.uncertainty)))));
    Tensor inaccurate_term =
        sum(mul(rej, mul(rsub_scalar(1.0, belief.confidence), log(belief.uncertainty))));
    return add(scale(accurate_term, -lambda_t), scale(inaccurate_term, -(1.0 - lambda_t)));
}

Tensor fit_loss(const DirichletBelief& belief, const std::vector<bool>& selected,
                const std::vector<int>& labels) {
    if (static_cast<int>(selected.size()) != belief.batch ||
        static_cast<int>(labels.size()) != belief.batch) {
        throw DimensionError("fit_loss: mask/labels size does not match batch");
    }
    int count = 0;
    for (bool s : selected)
        if (s) ++count;
    if (count == 0) return Tensor::scalar(0.0);

    const int n = belief.batch;
    std::vector<double> w(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i)
        w[static_cast<std::size_t>(i)] = selected[static_cast<std::size_t>(i)] ? 1.0 : 0.0;
    Tensor weights = Tensor::from_values({n}, std::move(w));

    Tensor alpha_at_label = gather_cols(belief.alpha, labels);
    Tensor per_sample = sub(digamma(belief.strength), digamma(alpha_at_label));
    return scale(sum(mul(weights, per_sample)), 1.0 / count);
}

Tensor pseudo_label_fit_loss(const DirichletBelief& belief, const SelectionMask& mask) {
    return fit_loss(belief, mask.selected, belief.pseudo_label);
}

double anneal(const AnnealSchedule& schedule, long t) {
    if (!(schedule.lambda0 > 0.0 && schedule.lambda0 < 1.0)) {
        throw ConfigError("anneal: lambda0 must be in (0,1)");
    }
    if (schedule.total_steps < 1) throw ConfigError("anneal: total_steps must be positive");
    if (t < 0 || t > schedule.total_steps) throw ContractError("anneal: t out of [0, T]");
    const double frac = static_cast<double>(t) / static_cast<double>(schedule.total_steps);
    return std::pow(schedule.lambda0, 1.0 - frac);
}

}  // namespace eca::evidential

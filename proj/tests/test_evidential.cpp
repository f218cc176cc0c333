#include <doctest.h>

#include <cmath>
#include <vector>

#include "eca/evidential.hpp"
#include "eca/rng.hpp"

using namespace eca;
using namespace eca::evidential;

namespace {

Tensor random_logits(int batch, int classes, Rng& rng, double scale = 3.0) {
    std::vector<double> v(static_cast<std::size_t>(batch) * classes);
    for (double& x : v) x = rng.uniform(-scale, scale);
    return Tensor::from_values({batch, classes}, std::move(v));
}

// Belief with prescribed confidence/uncertainty, for the loss-value examples.
DirichletBelief handmade_belief(std::vector<double> c, std::vector<double> u) {
    DirichletBelief b;
    b.batch = static_cast<int>(c.size());
    b.num_classes = 2;
    b.confidence = Tensor::from_values({b.batch}, std::move(c));
    b.uncertainty = Tensor::from_values({b.batch}, std::move(u));
    b.pseudo_label.assign(static_cast<std::size_t>(b.batch), 0);
    return b;
}

SelectionMask mask_of(std::vector<bool> selected) {
    SelectionMask m;
    m.selected = std::move(selected);
    for (bool s : m.selected)
        if (s) ++m.selected_count;
    return m;
}

}  // namespace

TEST_SUITE_BEGIN("evidential");

TEST_CASE("zero logits give the closed-form uniform belief") {
    DirichletBelief b = belief_from_logits(Tensor::zeros({1, 4}));
    const double e = std::log(2.0);
    const double s = 4.0 * (1.0 + e);
    CHECK(b.evidence.at(0) == doctest::Approx(e).epsilon(1e-14));
    CHECK(b.strength.at(0) == doctest::Approx(s).epsilon(1e-14));
    CHECK(b.uncertainty.at(0) == doctest::Approx(4.0 / s).epsilon(1e-14));
    for (int m = 0; m < 4; ++m) CHECK(b.probs.at(m) == doctest::Approx(0.25).epsilon(1e-12));
}

TEST_CASE("vacuous-evidence limit") {
    DirichletBelief b = belief_from_logits(Tensor::full({1, 5}, -40.0));
    CHECK(b.uncertainty.at(0) == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(b.confidence.at(0) == doctest::Approx(0.2).epsilon(1e-12));
}

TEST_CASE("worked example logits [3,0,0]") {
    DirichletBelief b = belief_from_logits(Tensor::from_values({1, 3}, {3.0, 0.0, 0.0}));
    const double e0 = std::log1p(std::exp(3.0));
    const double e1 = std::log(2.0);
    const double s = (e0 + 1.0) + 2.0 * (e1 + 1.0);
    CHECK(b.evidence.at(0) == doctest::Approx(e0).epsilon(1e-14));
    CHECK(b.strength.at(0) == doctest::Approx(s).epsilon(1e-14));
    CHECK(b.uncertainty.at(0) == doctest::Approx(3.0 / s).epsilon(1e-14));
    CHECK(b.confidence.at(0) == doctest::Approx((e0 + 1.0) / s).epsilon(1e-14));
    // the spec-level magnitudes
    CHECK(b.strength.at(0) == doctest::Approx(7.4348).epsilon(1e-4));
    CHECK(b.uncertainty.at(0) == doctest::Approx(0.4035).epsilon(1e-3));
    CHECK(b.confidence.at(0) == doctest::Approx(0.5446).epsilon(1e-3));
    CHECK(b.pseudo_label[0] == 0);
}

TEST_CASE("belief invariants over random logits") {
    Rng rng(21);
    for (int m : {2, 3, 10}) {
        for (int trial = 0; trial < 50; ++trial) {
            DirichletBelief b = belief_from_logits(random_logits(8, m, rng, 6.0));
            for (int i = 0; i < b.batch; ++i) {
                const double u = b.uncertainty.at(static_cast<std::size_t>(i));
                CHECK(u > 0.0);
                CHECK(u <= 1.0);
                double psum = 0.0;
                for (int j = 0; j < m; ++j) psum += b.probs.at(static_cast<std::size_t>(i) * m + j);
                CHECK(std::abs(psum - 1.0) < 1e-9);
                CHECK(b.confidence.at(static_cast<std::size_t>(i)) >= 1.0 / m);
                CHECK(b.confidence.at(static_cast<std::size_t>(i)) < 1.0);
            }
        }
    }
}

TEST_CASE("raising any logit strictly lowers uncertainty") {
    Rng rng(22);
    Tensor logits = random_logits(4, 3, rng);
    DirichletBelief base = belief_from_logits(logits);
    for (int i = 0; i < 4; ++i) {
        for (int j = 0; j < 3; ++j) {
            std::vector<double> bumped = logits.values();
            bumped[static_cast<std::size_t>(i) * 3 + j] += 0.1;
            DirichletBelief b = belief_from_logits(Tensor::from_values({4, 3}, std::move(bumped)));
            CHECK(b.uncertainty.at(static_cast<std::size_t>(i)) <
                  base.uncertainty.at(static_cast<std::size_t>(i)));
        }
    }
}

TEST_CASE("selection thresholds are the batch means") {
    DirichletBelief b = handmade_belief({0.9, 0.5, 0.7}, {0.3, 0.3, 0.3});
    SelectionMask m = select_high_quality(b);
    CHECK(m.eta_c == (0.9 + 0.5 + 0.7) / 3.0);
}

TEST_CASE("identical samples select nothing under strict inequality") {
    DirichletBelief b = handmade_belief({0.6, 0.6, 0.6}, {0.4, 0.4, 0.4});
    SelectionMask m = select_high_quality(b);
    CHECK(m.selected_count == 0);
}

TEST_CASE("worked selection example picks exactly sample 0") {
    DirichletBelief b = handmade_belief({0.9, 0.3}, {0.2, 0.8});
    SelectionMask m = select_high_quality(b);
    CHECK(m.eta_c == doctest::Approx(0.6));
    CHECK(m.eta_u == doctest::Approx(0.5));
    CHECK(m.selected == std::vector<bool>{true, false});

    SelectionMask literal = select_high_quality(b, UncertaintyDirection::kHighIsGood);
    CHECK(literal.selected_count == 0);  // sample 0 fails u>eta_u, sample 1 fails c>eta_c
}

TEST_CASE("selection membership is shift-invariant in confidence") {
    Rng rng(23);
    DirichletBelief b = belief_from_logits(random_logits(16, 4, rng));
    SelectionMask base = select_high_quality(b);
    DirichletBelief shifted = b;
    std::vector<double> c = b.confidence.values();
    for (double& x : c) x += 0.25;
    shifted.confidence = Tensor::from_values({16}, std::move(c));
    SelectionMask m = select_high_quality(shifted);
    CHECK(m.selected == base.selected);
}

TEST_CASE("cel_loss matches the hand-worked example") {
    DirichletBelief b = handmade_belief({0.8, 0.4}, {0.3, 0.6});
    SelectionMask m = mask_of({true, false});
    const double loss = cel_loss(b, m, 0.5).item();
    const double expect = -0.5 * 0.8 * std::log(0.7) - 0.5 * 0.6 * std::log(0.6);
    CHECK(loss == doctest::Approx(expect).epsilon(1e-12));
    CHECK(loss == doctest::Approx(0.2959).epsilon(1e-4));
}

TEST_CASE("accurate-certain and inaccurate-uncertain cost nothing") {
    DirichletBelief certain = handmade_belief({0.99}, {1e-9});
    CHECK(cel_loss(certain, mask_of({true}), 0.7).item() == doctest::Approx(0.0).epsilon(1e-8));
    DirichletBelief vacuous = handmade_belief({0.01}, {1.0 - 1e-12});
    CHECK(cel_loss(vacuous, mask_of({false}), 0.7).item() == doctest::Approx(0.0).epsilon(1e-8));
}

TEST_CASE("cel_loss stays finite at u = 1 on a selected sample") {
    DirichletBelief b = handmade_belief({0.9}, {1.0});
    const double loss = cel_loss(b, mask_of({true}), 0.5).item();
    CHECK(std::isfinite(loss));
}

TEST_CASE("cel_loss is nonnegative") {
    Rng rng(24);
    for (int trial = 0; trial < 100; ++trial) {
        DirichletBelief b = belief_from_logits(random_logits(6, 4, rng, 5.0));
        SelectionMask m = select_high_quality(b);
        const double lambda = rng.uniform(0.01, 1.0);
        CHECK(cel_loss(b, m, lambda).item() >= 0.0);
    }
}

TEST_CASE("fit loss on empty selection is zero") {
    DirichletBelief b = belief_from_logits(Tensor::zeros({2, 3}));
    CHECK(fit_loss(b, {false, false}, {0, 1}).item() == 0.0);
}

TEST_CASE("fit loss closed forms via digamma identities") {
    // uniform belief: alpha = [1,1,1] -> digamma(3) - digamma(1) = H_2 = 1.5
    DirichletBelief uniform = belief_from_logits(Tensor::full({1, 3}, -40.0));
    CHECK(fit_loss(uniform, {true}, {2}).item() == doctest::Approx(1.5).epsilon(1e-9));

    // alpha = [4,1,1], label 0 -> digamma(6) - digamma(4) = 1/4 + 1/5 = 0.45
    const double inv_softplus_3 = std::log(std::exp(3.0) - 1.0);
    DirichletBelief spiked =
        belief_from_logits(Tensor::from_values({1, 3}, {inv_softplus_3, -40.0, -40.0}));
    CHECK(fit_loss(spiked, {true}, {0}).item() == doctest::Approx(0.45).epsilon(1e-9));
}

TEST_CASE("pseudo-label fit loss uses the belief's own argmax") {
    Rng rng(25);
    DirichletBelief b = belief_from_logits(random_logits(5, 3, rng));
    SelectionMask m = mask_of({true, true, false, true, false});
    CHECK(pseudo_label_fit_loss(b, m).item() ==
          doctest::Approx(fit_loss(b, m.selected, b.pseudo_label).item()));
}

TEST_CASE("losses are differentiable w.r.t. logits") {
    Rng rng(26);
    for (int trial = 0; trial < 3; ++trial) {
        Tensor base = random_logits(4, 3, rng);
        DirichletBelief belief0 = belief_from_logits(base);
        const SelectionMask frozen = select_high_quality(belief0);
        const auto cel = [&frozen](const Tensor& logits) {
            return cel_loss(belief_from_logits(logits), frozen, 0.4);
        };
        CHECK(grad_check(cel, base, 1e-4) < 1e-4);
        const std::vector<int> labels = belief0.pseudo_label;
        const auto fit = [&frozen, &labels](const Tensor& logits) {
            return fit_loss(belief_from_logits(logits), frozen.selected, labels);
        };
        CHECK(grad_check(fit, base, 1e-4) < 1e-4);
    }
}

TEST_CASE("rejected samples carry more uncertainty than selected ones") {
    Rng rng(27);
    double sel_sum = 0.0, rej_sum = 0.0;
    long sel_n = 0, rej_n = 0;
    for (int trial = 0; trial < 50; ++trial) {
        DirichletBelief b = belief_from_logits(random_logits(16, 4, rng, 5.0));
        SelectionMask m = select_high_quality(b);
        for (int i = 0; i < b.batch; ++i) {
            const double u = b.uncertainty.at(static_cast<std::size_t>(i));
            if (m.selected[static_cast<std::size_t>(i)]) {
                sel_sum += u;
                ++sel_n;
            } else {
                rej_sum += u;
                ++rej_n;
            }
        }
    }
    REQUIRE(sel_n > 0);
    REQUIRE(rej_n > 0);
    CHECK(sel_sum / sel_n < rej_sum / rej_n);
}

TEST_CASE("anneal endpoints and midpoint") {
    AnnealSchedule s{0.01, 100};
    CHECK(anneal(s, 0) == doctest::Approx(0.01));
    CHECK(anneal(s, 100) == doctest::Approx(1.0));
    CHECK(anneal(s, 50) == doctest::Approx(0.1).epsilon(1e-12));
    double prev = 0.0;
    for (long t = 0; t <= 100; ++t) {
        const double v = anneal(s, t);
        CHECK(v > prev);
        prev = v;
    }
    CHECK_THROWS_AS(anneal(s, -1), ContractError);
    CHECK_THROWS_AS(anneal(s, 101), ContractError);
    CHECK_THROWS_AS(anneal(AnnealSchedule{1.5, 10}, 0), ConfigError);
}

TEST_SUITE_END();

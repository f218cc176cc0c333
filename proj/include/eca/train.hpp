#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "eca/evidential.hpp"
#include "eca/network.hpp"
#include "eca/synth.hpp"
#include "eca/tensor.hpp"

namespace eca::train {

// Classical momentum: v <- momentum*v + g; theta <- theta - lr*v.
class SgdMomentum {
  public:
    SgdMomentum(double learning_rate, double momentum)
        : lr_(learning_rate), momentum_(momentum) {}

    void set_learning_rate(double lr) { lr_ = lr; }
    void step(const std::vector<Tensor>& params);

  private:
    double lr_;
    double momentum_;
    std::vector<std::vector<double>> velocity_;
};

struct PretrainConfig {
    double learning_rate = 0.05;
    double momentum = 0.95;
    int epochs = 40;
    int batch_size = 64;
    std::uint64_t seed = 17;
};

struct PretrainReport {
    std::vector<double> epoch_loss;
    double source_test_accuracy = 0.0;
};

// Loss-value and loss-weight ablations sharing one code path.
enum class AblateMode { kFull, kUnweightedGraph, kCelOnly };

struct AdaptConfig {
    double learning_rate = 0.01;
    double momentum = 0.95;
    double beta = 1.0;      // contrastive trade-off
    double lambda0 = 0.01;  // annealing start
    int epochs = 30;
    int batch_size = 64;
    double tau = 0.1;
    int cluster_count = 3;  // pseudo-domain k
    std::uint64_t seed = 17;
    bool fit_term = true;
    double lr_decay = 0.0;  // per-epoch multiplicative decay when > 0
    evidential::UncertaintyDirection u_direction = evidential::UncertaintyDirection::kLowIsGood;
    AblateMode ablate = AblateMode::kFull;

    void validate() const;
};

struct EpochMetrics {
    int epoch = 0;
    double loss_cel = 0.0;
    double loss_con = 0.0;
    double loss_total = 0.0;
    double acc_overall = 0.0;
    std::vector<double> acc_per_domain;
    double selected_fraction = 0.0;
    double mean_u_selected = 0.0;
    double mean_u_rejected = 0.0;
    double eta_c = 0.0;
    double eta_u = 0.0;
    // graph diagnostics; carried on the stream but not part of the fixed CSV
    double graph_edges = 0.0;       // mean off-diagonal edge count per batch
    double graph_edge_weight = 0.0; // mean weighted edge value
};

struct Evaluation {
    double accuracy = 0.0;
    std::vector<int> per_domain_correct;
    std::vector<int> per_domain_count;
    std::vector<int> predictions;

    std::vector<double> per_domain_accuracy() const;
};

// EDL expected cross-entropy on the labeled source; the source is never
// touched again after this returns.
PretrainReport pretrain_source(net::BackboneParams& params, const synth::Dataset& source_train,
                               const synth::Dataset& source_test, const PretrainConfig& config);

// Overall/per-true-domain accuracy from a read-only parameter snapshot.
// Injected so adaptation itself never sees labels.
using EvalHook =
    std::function<std::pair<double, std::vector<double>>(const net::BackboneParams&)>;

// Source-free adaptation over target features only. Per epoch: refresh the
// pseudo-domain model from current shallow features, then per batch optimize
// the calibration loss (plus optional fit term) and the weighted contrastive
// loss with SGD momentum.
std::vector<EpochMetrics> adapt(net::BackboneParams& params, const Tensor& target_features,
                                const AdaptConfig& config, const EvalHook& eval_hook = {});

Evaluation evaluate(const net::BackboneParams& params, const synth::Dataset& data);

// Fixed metrics stream layout:
// epoch,loss_cel,loss_con,loss_total,acc_overall,acc_d0..,sel_frac,u_sel,u_rej,eta_c,eta_u
std::string metrics_csv(const std::vector<EpochMetrics>& metrics, int domain_count);

}  // namespace eca::train

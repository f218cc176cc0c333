#include "eca/train.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>

#include "eca/contrast.hpp"
#include "eca/domains.hpp"
#include "eca/rng.hpp"

namespace eca::train {

void SgdMomentum::step(const std::vector<Tensor>& params) {
    if (velocity_.empty()) {
        for (const Tensor& p : params) velocity_.emplace_back(p.size(), 0.0);
    }
    if (velocity_.size() != params.size()) {
        throw ContractError("SgdMomentum::step: parameter count changed");
    }
    for (std::size_t pi = 0; pi < params.size(); ++pi) {
        Tensor p = params[pi];
        const std::vector<double>& g = p.grad();
        if (g.empty()) continue;  // parameter not reached by the last backward
        std::vector<double>& v = velocity_[pi];
        std::vector<double>& w = p.mutable_values();
        for (std::size_t i = 0; i < w.size(); ++i) {
            v[i] = momentum_ * v[i] + g[i];
            w[i] -= lr_ * v[i];
        }
    }
}

void AdaptConfig::validate() const {
    if (beta < 0.0) throw ConfigError("adapt config: beta must be >= 0");
    if (batch_size < 2) throw ConfigError("adapt config: batch_size must be >= 2");
    if (!(tau > 0.0)) throw ConfigError("adapt config: tau must be positive");
    if (!(lambda0 > 0.0 && lambda0 < 1.0)) throw ConfigError("adapt config: lambda0 must be in (0,1)");
    if (epochs < 0) throw ConfigError("adapt config: epochs must be >= 0");
    if (cluster_count < 2) throw ConfigError("adapt config: k must be >= 2");
    if (learning_rate < 0.0) throw ConfigError("adapt config: learning_rate must be >= 0");
    if (!(momentum >= 0.0 && momentum < 1.0)) throw ConfigError("adapt config: momentum must be in [0,1)");
}

namespace {

std::vector<std::vector<int>> make_batches(int n, int batch_size, Rng& rng) {
    std::vector<int> order = rng.permutation(n);
    std::vector<std::vector<int>> batches;
    for (int start = 0; start < n; start += batch_size) {
        const int end = std::min(n, start + batch_size);
        if (end - start < 2) break;  // contrastive pairs need at least two rows
        batches.emplace_back(order.begin() + start, order.begin() + end);
    }
    return batches;
}

Tensor gather_rows(const Tensor& x, const std::vector<int>& rows) {
    const int d = x.shape()[1];
    std::vector<double> out;
    out.reserve(rows.size() * static_cast<std::size_t>(d));
    for (int r : rows) {
        const double* row = x.values().data() + static_cast<std::size_t>(r) * d;
        out.insert(out.end(), row, row + d);
    }
    return Tensor::from_values({static_cast<int>(rows.size()), d}, std::move(out));
}

}  // namespace

PretrainReport pretrain_source(net::BackboneParams& params, const synth::Dataset& source_train,
                               const synth::Dataset& source_test, const PretrainConfig& config) {
    if (source_train.count() < 1) throw ConfigError("pretrain_source: empty training split");
    PretrainReport report;
    const Tensor x = source_train.features_tensor();
    SgdMomentum sgd(config.learning_rate, config.momentum);
    std::vector<Tensor> trainable = params.parameters();
    Rng shuffle_rng(seeds::sub_seed(config.seed, seeds::kPretrainShuffle));
    const std::vector<bool> all(static_cast<std::size_t>(source_train.count()), true);

    for (int epoch = 0; epoch < config.epochs; ++epoch) {
        double epoch_loss = 0.0;
        int batches = 0;
        for (const std::vector<int>& batch : make_batches(source_train.count(),
                                                          config.batch_size, shuffle_rng)) {
            std::vector<int> labels;
            labels.reserve(batch.size());
            for (int r : batch) labels.push_back(source_train.labels[static_cast<std::size_t>(r)]);
            std::vector<bool> selected(batch.size(), true);
            try {
                net::ForwardResult fwd = net::forward(params, gather_rows(x, batch));
                evidential::DirichletBelief belief = evidential::belief_from_logits(fwd.logits);
                Tensor loss = evidential::fit_loss(belief, selected, labels);
                loss.backward();
                sgd.step(trainable);
                epoch_loss += loss.item();
            } catch (const DomainError& e) {
                throw Error("pretrain_source diverged at epoch " + std::to_string(epoch) + ": " +
                            e.what());
            }
            ++batches;
        }
        report.epoch_loss.push_back(batches ? epoch_loss / batches : 0.0);
    }
    report.source_test_accuracy = evaluate(params, source_test).accuracy;
    return report;
}

std::vector<EpochMetrics> adapt(net::BackboneParams& params, const Tensor& target_features,
                                const AdaptConfig& config, const EvalHook& eval_hook) {
    config.validate();
    if (target_features.shape().size() != 2) {
        throw DimensionError("adapt: target features must be [n x dim]");
    }
    const int n = target_features.shape()[0];
    if (n < config.cluster_count) throw ConfigError("adapt: fewer samples than clusters");

    std::vector<EpochMetrics> history;
    if (config.epochs == 0) return history;

    // T counts every adaptation batch; the annealing factor reaches 1 at the end.
    Rng probe_rng(seeds::sub_seed(config.seed, seeds::kAdaptShuffle));
    const long batches_per_epoch =
        static_cast<long>(make_batches(n, config.batch_size, probe_rng).size());
    if (batches_per_epoch == 0) throw ConfigError("adapt: batch_size leaves no usable batch");
    const evidential::AnnealSchedule schedule{config.lambda0,
                                              config.epochs * batches_per_epoch};

    SgdMomentum sgd(config.learning_rate, config.momentum);
    std::vector<Tensor> trainable = params.parameters();
    domains::DomainModel domain_model;
    long global_step = 0;
    double lr = config.learning_rate;

    for (int epoch = 0; epoch < config.epochs; ++epoch) {
        // Pseudo-domain refresh from the current shallow extractor.
        try {
            const net::BackboneParams snapshot = params.detached_copy();
            const Tensor shallow = net::forward(snapshot, target_features).features.shallow;
            const std::uint64_t epoch_seed = config.seed + static_cast<std::uint64_t>(epoch);
            domain_model = epoch == 0
                               ? domains::cluster_domains(target_features, shallow,
                                                          config.cluster_count, epoch_seed)
                               : domains::refresh(domain_model, target_features, shallow,
                                                  epoch_seed);
        } catch (const DomainError& e) {
            throw Error("adapt diverged at epoch " + std::to_string(epoch) + ": " + e.what());
        }

        EpochMetrics m;
        m.epoch = epoch;
        double u_sel_sum = 0.0, u_rej_sum = 0.0;
        long sel_count = 0, rej_count = 0, view_count = 0, zero_rows = 0;
        int batches_done = 0;

        Rng shuffle_rng(seeds::sub_seed(config.seed, seeds::kAdaptShuffle) +
                        static_cast<std::uint64_t>(epoch));
        for (const std::vector<int>& batch : make_batches(n, config.batch_size, shuffle_rng)) {
            const Tensor batch_x = gather_rows(target_features, batch);
            const contrast::ViewPair views = contrast::make_views(
                batch_x, config.seed + static_cast<std::uint64_t>(global_step));
            const Tensor stacked = concat_rows(views.first, views.second);

            try {
                net::ForwardResult fwd = net::forward(params, stacked);
                evidential::DirichletBelief belief = evidential::belief_from_logits(fwd.logits);
                evidential::SelectionMask mask =
                    evidential::select_high_quality(belief, config.u_direction);
                zero_rows += static_cast<long>(fwd.features.zero_rows.size());
                for (int zr : fwd.features.zero_rows) {
                    // Degenerate embeddings cannot join contrastive pairs.
                    if (mask.selected[static_cast<std::size_t>(zr)]) {
                        mask.selected[static_cast<std::size_t>(zr)] = false;
                        --mask.selected_count;
                    }
                }

                const double lambda_t = evidential::anneal(schedule, global_step);
                Tensor loss_cel = evidential::cel_loss(belief, mask, lambda_t);
                Tensor total = loss_cel;
                if (config.fit_term) {
                    total = add(total, evidential::pseudo_label_fit_loss(belief, mask));
                }

                double con_value = 0.0;
                if (config.ablate != AblateMode::kCelOnly && config.beta != 0.0) {
                    const int two_b = stacked.shape()[0];
                    std::vector<int> view_origin(static_cast<std::size_t>(two_b));
                    for (int v = 0; v < two_b; ++v) {
                        view_origin[static_cast<std::size_t>(v)] =
                            batch[static_cast<std::size_t>(contrast::origin_sample(v, two_b))];
                    }
                    contrast::PairGraph graph =
                        contrast::build_graph(belief, mask, domain_model, view_origin);
                    if (config.ablate == AblateMode::kUnweightedGraph) {
                        graph.weighted = graph.adjacency;
                    }
                    long edges = 0;
                    double weight_sum = 0.0;
                    for (int i = 0; i < two_b; ++i) {
                        for (int j = 0; j < two_b; ++j) {
                            if (i == j) continue;
                            if (graph.at(graph.adjacency, i, j) == 1.0) {
                                ++edges;
                                weight_sum += graph.at(graph.weighted, i, j);
                            }
                        }
                    }
                    m.graph_edges += static_cast<double>(edges);
                    m.graph_edge_weight += edges ? weight_sum / static_cast<double>(edges) : 0.0;
                    Tensor loss_con =
                        contrast::contrastive_loss(graph, fwd.features.embedding, config.tau);
                    con_value = loss_con.item();
                    total = add(total, scale(loss_con, config.beta));
                }

                total.backward();
                sgd.step(trainable);

                m.loss_cel += loss_cel.item();
                m.loss_con += con_value;
                m.loss_total += total.item();
                m.eta_c += mask.eta_c;
                m.eta_u += mask.eta_u;
                const int two_b = stacked.shape()[0];
                for (int v = 0; v < two_b; ++v) {
                    const double u = belief.uncertainty.at(static_cast<std::size_t>(v));
                    if (mask.selected[static_cast<std::size_t>(v)]) {
                        u_sel_sum += u;
                        ++sel_count;
                    } else {
                        u_rej_sum += u;
                        ++rej_count;
                    }
                }
                view_count += two_b;
            } catch (const DomainError& e) {
                throw Error("adapt diverged at epoch " + std::to_string(epoch) + ": " + e.what());
            }
            ++global_step;
            ++batches_done;
        }

        if (batches_done > 0) {
            m.loss_cel /= batches_done;
            m.loss_con /= batches_done;
            m.loss_total /= batches_done;
            m.eta_c /= batches_done;
            m.eta_u /= batches_done;
            m.graph_edges /= batches_done;
            m.graph_edge_weight /= batches_done;
        }
        if (sel_count == 0) {
            std::fprintf(stderr,
                         "warning: adapt epoch %d selected no samples; continuing on the "
                         "restraint term alone\n",
                         epoch);
        }
        if (zero_rows > 0) {
            std::fprintf(stderr, "warning: adapt epoch %d saw %ld zero-norm embedding rows\n",
                         epoch, zero_rows);
        }
        m.selected_fraction = view_count ? static_cast<double>(sel_count) / view_count : 0.0;
        m.mean_u_selected = sel_count ? u_sel_sum / sel_count : 0.0;
        m.mean_u_rejected = rej_count ? u_rej_sum / rej_count : 0.0;
        if (eval_hook) {
            const net::BackboneParams snapshot = params.detached_copy();
            const auto [acc, per_domain] = eval_hook(snapshot);
            m.acc_overall = acc;
            m.acc_per_domain = per_domain;
        }
        history.push_back(std::move(m));

        if (config.lr_decay > 0.0) {
            lr *= config.lr_decay;
            sgd.set_learning_rate(lr);
        }
    }
    return history;
}

Evaluation evaluate(const net::BackboneParams& params, const synth::Dataset& data) {
    Evaluation ev;
    if (data.count() == 0) return ev;
    const net::BackboneParams snapshot = params.detached_copy();
    const net::ForwardResult fwd = net::forward(snapshot, data.features_tensor());
    const evidential::DirichletBelief belief = evidential::belief_from_logits(fwd.logits);

    int max_domain = -1;
    for (int d : data.true_domain) max_domain = std::max(max_domain, d);
    ev.per_domain_correct.assign(static_cast<std::size_t>(max_domain + 1), 0);
    ev.per_domain_count.assign(static_cast<std::size_t>(max_domain + 1), 0);

    int correct = 0;
    for (int i = 0; i < data.count(); ++i) {
        const int pred = belief.pseudo_label[static_cast<std::size_t>(i)];
        ev.predictions.push_back(pred);
        const bool hit = pred == data.labels[static_cast<std::size_t>(i)];
        if (hit) ++correct;
        const int dom = data.true_domain[static_cast<std::size_t>(i)];
        if (dom >= 0) {
            ++ev.per_domain_count[static_cast<std::size_t>(dom)];
            if (hit) ++ev.per_domain_correct[static_cast<std::size_t>(dom)];
        }
    }
    ev.accuracy = static_cast<double>(correct) / data.count();
    return ev;
}

std::vector<double> Evaluation::per_domain_accuracy() const {
    std::vector<double> out;
    for (std::size_t d = 0; d < per_domain_count.size(); ++d) {
        out.push_back(per_domain_count[d] ? static_cast<double>(per_domain_correct[d]) /
                                                per_domain_count[d]
                                          : 0.0);
    }
    return out;
}

std::string metrics_csv(const std::vector<EpochMetrics>& metrics, int domain_count) {
    std::ostringstream out;
    out << "epoch,loss_cel,loss_con,loss_total,acc_overall";
    for (int d = 0; d < domain_count; ++d) out << ",acc_d" << d;
    out << ",sel_frac,u_sel,u_rej,eta_c,eta_u\n";
    char buf[64];
    auto put = [&](double v) {
        std::snprintf(buf, sizeof(buf), "%.17g", v);
        out << ',' << buf;
    };
    for (const EpochMetrics& m : metrics) {
        out << m.epoch;
        put(m.loss_cel);
        put(m.loss_con);
        put(m.loss_total);
        put(m.acc_overall);
        for (int d = 0; d < domain_count; ++d) {
            put(d < static_cast<int>(m.acc_per_domain.size()) ? m.acc_per_domain[static_cast<std::size_t>(d)]
                                                              : 0.0);
        }
        put(m.selected_fraction);
        put(m.mean_u_selected);
        put(m.mean_u_rejected);
        put(m.eta_c);
        put(m.eta_u);
        out << '\n';
    }
    return out.str();
}

}  // namespace eca::train

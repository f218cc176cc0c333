#include "eca/cli.hpp"

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <set>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "eca/rng.hpp"

namespace eca::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

void reject_unknown_keys(const json& doc, const std::set<std::string>& allowed,
                         const std::string& scope) {
    for (const auto& item : doc.items()) {
        if (!allowed.count(item.key())) {
            throw ConfigError("config: unknown key \"" + scope + item.key() + "\"");
        }
    }
}

template <typename T>
void read_field(const json& doc, const char* key, T& into) {
    if (doc.contains(key)) into = doc.at(key).get<T>();
}

}  // namespace

void RunConfig::validate() const {
    blend_spec().validate();
    adapt_config().validate();
    if (hidden.empty()) throw ConfigError("config: model.hidden must not be empty");
    for (int h : hidden) {
        if (h < 1) throw ConfigError("config: model.hidden entries must be positive");
    }
    if (pretrain_epochs < 0) throw ConfigError("config: pretrain.epochs must be >= 0");
    if (pretrain_batch_size < 1) throw ConfigError("config: pretrain.batch_size must be >= 1");
    if (selection_u_direction != "low" && selection_u_direction != "high") {
        throw ConfigError("config: adapt.selection_u_direction must be \"low\" or \"high\"");
    }
    if (ablate != "cel-only" && ablate != "con-unweighted" && ablate != "con-full") {
        throw ConfigError("config: adapt.ablate must be cel-only, con-unweighted or con-full");
    }
    if (out_dir.empty()) throw ConfigError("config: out_dir must not be empty");
}

synth::BlendSpec RunConfig::blend_spec() const {
    const std::size_t k = rotations_deg.size();
    if (translations.size() != k || noise_scales.size() != k || weights.size() != k) {
        throw ConfigError(
            "config: data.rotations_deg, translations, noise_scales and weights must have "
            "matching lengths");
    }
    synth::BlendSpec spec;
    spec.seed = seed;
    spec.num_classes = num_classes;
    spec.input_dim = input_dim;
    spec.source_noise = source_noise;
    spec.source_train_count = source_train_count;
    spec.source_test_count = source_test_count;
    spec.target_blend_count = target_blend_count;
    spec.target_test_count = target_test_count;

    const auto priors = synth::perturbed_priors(static_cast<int>(k), num_classes,
                                                label_shift ? prior_sigma : 0.0, seed);
    spec.targets.resize(k);
    for (std::size_t j = 0; j < k; ++j) {
        auto& t = spec.targets[j];
        t.rotation_deg = rotations_deg[j];
        if (translations[j].size() != 2) {
            throw ConfigError("config: data.translations entries must be [x, y] pairs");
        }
        t.translate_x = translations[j][0];
        t.translate_y = translations[j][1];
        t.noise_scale = noise_scales[j];
        t.weight = weights[j];
        t.class_prior = priors[j];
    }
    return spec;
}

train::PretrainConfig RunConfig::pretrain_config() const {
    train::PretrainConfig cfg;
    cfg.learning_rate = pretrain_learning_rate;
    cfg.momentum = momentum;
    cfg.epochs = pretrain_epochs;
    cfg.batch_size = pretrain_batch_size;
    cfg.seed = seed;
    return cfg;
}

train::AdaptConfig RunConfig::adapt_config() const {
    train::AdaptConfig cfg;
    cfg.learning_rate = adapt_learning_rate;
    cfg.momentum = momentum;
    cfg.beta = beta;
    cfg.lambda0 = lambda0;
    cfg.epochs = adapt_epochs;
    cfg.batch_size = adapt_batch_size;
    cfg.tau = tau;
    cfg.cluster_count = cluster_count;
    cfg.seed = seed;
    cfg.fit_term = fit_term;
    cfg.lr_decay = lr_decay;
    cfg.u_direction = selection_u_direction == "high"
                          ? evidential::UncertaintyDirection::kHighIsGood
                          : evidential::UncertaintyDirection::kLowIsGood;
    cfg.ablate = ablate == "cel-only"        ? train::AblateMode::kCelOnly
                 : ablate == "con-unweighted" ? train::AblateMode::kUnweightedGraph
                                              : train::AblateMode::kFull;
    return cfg;
}

std::string RunConfig::to_json() const {
    json doc;
    doc["seed"] = seed;
    doc["out_dir"] = out_dir;
    doc["data"] = {{"num_classes", num_classes},
                   {"input_dim", input_dim},
                   {"source_noise", source_noise},
                   {"rotations_deg", rotations_deg},
                   {"translations", translations},
                   {"noise_scales", noise_scales},
                   {"weights", weights},
                   {"label_shift", label_shift},
                   {"prior_sigma", prior_sigma},
                   {"source_train_count", source_train_count},
                   {"source_test_count", source_test_count},
                   {"target_blend_count", target_blend_count},
                   {"target_test_count", target_test_count}};
    doc["model"] = {{"hidden", hidden}};
    doc["pretrain"] = {{"epochs", pretrain_epochs},
                       {"batch_size", pretrain_batch_size},
                       {"learning_rate", pretrain_learning_rate}};
    doc["adapt"] = {{"epochs", adapt_epochs},
                    {"batch_size", adapt_batch_size},
                    {"learning_rate", adapt_learning_rate},
                    {"momentum", momentum},
                    {"beta", beta},
                    {"lambda0", lambda0},
                    {"tau", tau},
                    {"k", cluster_count},
                    {"fit_term", fit_term},
                    {"selection_u_direction", selection_u_direction},
                    {"ablate", ablate},
                    {"lr_decay", lr_decay}};
    return doc.dump(2) + "\n";
}

RunConfig parse_config_json(const std::string& text) {
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::exception& e) {
        throw ParseError(std::string("config: ") + e.what());
    }
    RunConfig cfg;
    reject_unknown_keys(doc, {"seed", "out_dir", "data", "model", "pretrain", "adapt"}, "");
    read_field(doc, "seed", cfg.seed);
    read_field(doc, "out_dir", cfg.out_dir);
    if (doc.contains("data")) {
        const json& d = doc.at("data");
        reject_unknown_keys(d,
                            {"num_classes", "input_dim", "source_noise", "rotations_deg",
                             "translations", "noise_scales", "weights", "label_shift", "prior_sigma",
                             "source_train_count", "source_test_count", "target_blend_count",
                             "target_test_count"},
                            "data.");
        read_field(d, "num_classes", cfg.num_classes);
        read_field(d, "input_dim", cfg.input_dim);
        read_field(d, "source_noise", cfg.source_noise);
        read_field(d, "rotations_deg", cfg.rotations_deg);
        read_field(d, "translations", cfg.translations);
        read_field(d, "noise_scales", cfg.noise_scales);
        read_field(d, "weights", cfg.weights);
        read_field(d, "label_shift", cfg.label_shift);
        read_field(d, "prior_sigma", cfg.prior_sigma);
        read_field(d, "source_train_count", cfg.source_train_count);
        read_field(d, "source_test_count", cfg.source_test_count);
        read_field(d, "target_blend_count", cfg.target_blend_count);
        read_field(d, "target_test_count", cfg.target_test_count);
    }
    if (doc.contains("model")) {
        const json& m = doc.at("model");
        reject_unknown_keys(m, {"hidden"}, "model.");
        read_field(m, "hidden", cfg.hidden);
    }
    if (doc.contains("pretrain")) {
        const json& p = doc.at("pretrain");
        reject_unknown_keys(p, {"epochs", "batch_size", "learning_rate"}, "pretrain.");
        read_field(p, "epochs", cfg.pretrain_epochs);
        read_field(p, "batch_size", cfg.pretrain_batch_size);
        read_field(p, "learning_rate", cfg.pretrain_learning_rate);
    }
    if (doc.contains("adapt")) {
        const json& a = doc.at("adapt");
        reject_unknown_keys(a,
                            {"epochs", "batch_size", "learning_rate", "momentum", "beta",
                             "lambda0", "tau", "k", "fit_term", "selection_u_direction", "ablate",
                             "lr_decay"},
                            "adapt.");
        read_field(a, "epochs", cfg.adapt_epochs);
        read_field(a, "batch_size", cfg.adapt_batch_size);
        read_field(a, "learning_rate", cfg.adapt_learning_rate);
        read_field(a, "momentum", cfg.momentum);
        read_field(a, "beta", cfg.beta);
        read_field(a, "lambda0", cfg.lambda0);
        read_field(a, "tau", cfg.tau);
        read_field(a, "k", cfg.cluster_count);
        read_field(a, "fit_term", cfg.fit_term);
        read_field(a, "selection_u_direction", cfg.selection_u_direction);
        read_field(a, "ablate", cfg.ablate);
        read_field(a, "lr_decay", cfg.lr_decay);
    }
    return cfg;
}

RunConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("config: cannot open " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_config_json(buf.str());
}

namespace {

struct SplitPaths {
    fs::path source_train, source_test, target_blend, target_test;
};

SplitPaths split_paths(const RunConfig& cfg) {
    const fs::path base = fs::path(cfg.out_dir) / "generate";
    return {base / "source_train.csv", base / "source_test.csv", base / "target_blend.csv",
            base / "target_test.csv"};
}

fs::path pretrain_checkpoint_path(const RunConfig& cfg) {
    return fs::path(cfg.out_dir) / "pretrain" / "checkpoint.json";
}

void write_text(const fs::path& path, const std::string& text) {
    fs::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ConfigError("cannot open " + path.string() + " for writing");
    out << text;
}

void echo_config(const RunConfig& cfg, const std::string& command) {
    write_text(fs::path(cfg.out_dir) / command / "config_echo.json", cfg.to_json());
}

synth::Benchmark load_benchmark(const RunConfig& cfg) {
    const SplitPaths paths = split_paths(cfg);
    for (const fs::path* p :
         {&paths.source_train, &paths.source_test, &paths.target_blend, &paths.target_test}) {
        if (!fs::exists(*p)) {
            throw ConfigError("missing dataset file " + p->string() + "; run generate first");
        }
    }
    synth::Benchmark bench;
    bench.source_train = synth::read_csv(paths.source_train.string());
    bench.source_test = synth::read_csv(paths.source_test.string());
    bench.target_blend = synth::read_csv(paths.target_blend.string());
    bench.target_test = synth::read_csv(paths.target_test.string());
    return bench;
}

std::vector<int> model_widths(const RunConfig& cfg) {
    std::vector<int> widths;
    widths.push_back(cfg.input_dim);
    widths.insert(widths.end(), cfg.hidden.begin(), cfg.hidden.end());
    widths.push_back(cfg.num_classes);
    return widths;
}

train::EvalHook blend_eval_hook(const synth::Dataset& blend, int domain_count) {
    return [&blend, domain_count](const net::BackboneParams& params) {
        const train::Evaluation ev = train::evaluate(params, blend);
        std::vector<double> per_domain = ev.per_domain_accuracy();
        per_domain.resize(static_cast<std::size_t>(domain_count), 0.0);
        return std::make_pair(ev.accuracy, per_domain);
    };
}

// Shared by adapt, ablate and sweep-k; writes a metrics CSV and returns the
// final blend accuracy.
double run_adaptation(const RunConfig& cfg, const synth::Benchmark& bench,
                      const train::AdaptConfig& adapt_cfg, const fs::path& metrics_path,
                      const fs::path& checkpoint_path) {
    net::BackboneParams params = net::load_checkpoint(pretrain_checkpoint_path(cfg).string());
    const int domain_count = static_cast<int>(cfg.rotations_deg.size());
    const Tensor features = bench.target_blend.features_tensor();
    const std::vector<train::EpochMetrics> history =
        train::adapt(params, features, adapt_cfg, blend_eval_hook(bench.target_blend, domain_count));
    write_text(metrics_path, train::metrics_csv(history, domain_count));
    if (!history.empty()) {
        std::cout << "adapt: final epoch graph stats: " << history.back().graph_edges
                  << " edges per batch, mean edge weight " << history.back().graph_edge_weight
                  << "\n";
    }
    if (!checkpoint_path.empty()) {
        fs::create_directories(checkpoint_path.parent_path());
        net::save_checkpoint(params, checkpoint_path.string());
    }
    return history.empty() ? train::evaluate(params, bench.target_blend).accuracy
                           : history.back().acc_overall;
}

std::string format_double(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

}  // namespace

int cmd_generate(const RunConfig& cfg) {
    cfg.validate();
    const synth::Benchmark bench = synth::generate(cfg.blend_spec());
    const SplitPaths paths = split_paths(cfg);
    fs::create_directories(paths.source_train.parent_path());
    synth::write_csv(bench.source_train, paths.source_train.string());
    synth::write_csv(bench.source_test, paths.source_test.string());
    synth::write_csv(bench.target_blend, paths.target_blend.string());
    synth::write_csv(bench.target_test, paths.target_test.string());
    echo_config(cfg, "generate");
    std::cout << "generate: wrote 4 splits under " << paths.source_train.parent_path().string()
              << "\n";
    return 0;
}

int cmd_pretrain(const RunConfig& cfg) {
    cfg.validate();
    const synth::Benchmark bench = load_benchmark(cfg);
    net::BackboneParams params = net::init_backbone(cfg.seed, model_widths(cfg));
    const train::PretrainReport report =
        train::pretrain_source(params, bench.source_train, bench.source_test,
                               cfg.pretrain_config());
    const fs::path dir = fs::path(cfg.out_dir) / "pretrain";
    fs::create_directories(dir);
    net::save_checkpoint(params, (dir / "checkpoint.json").string());
    std::ostringstream csv;
    csv << "epoch,loss\n";
    for (std::size_t e = 0; e < report.epoch_loss.size(); ++e) {
        csv << e << ',' << format_double(report.epoch_loss[e]) << '\n';
    }
    write_text(dir / "metrics.csv", csv.str());
    echo_config(cfg, "pretrain");
    std::cout << "pretrain: source-test accuracy " << report.source_test_accuracy << "\n";
    return 0;
}

int cmd_adapt(const RunConfig& cfg) {
    cfg.validate();
    if (!fs::exists(pretrain_checkpoint_path(cfg))) {
        throw ConfigError("missing checkpoint " + pretrain_checkpoint_path(cfg).string() +
                          "; run pretrain first");
    }
    const synth::Benchmark bench = load_benchmark(cfg);
    const fs::path dir = fs::path(cfg.out_dir) / "adapt";
    const double acc = run_adaptation(cfg, bench, cfg.adapt_config(), dir / "metrics.csv",
                                      dir / "checkpoint.json");
    echo_config(cfg, "adapt");
    std::cout << "adapt: final target-blend accuracy " << acc << "\n";
    return 0;
}

int cmd_evaluate(const RunConfig& cfg, const std::string& checkpoint, const std::string& split) {
    cfg.validate();
    fs::path ckpt = checkpoint.empty() ? fs::path(cfg.out_dir) / "adapt" / "checkpoint.json"
                                       : fs::path(checkpoint);
    if (!fs::exists(ckpt)) {
        throw ConfigError("missing checkpoint " + ckpt.string());
    }
    const synth::Benchmark bench = load_benchmark(cfg);
    const synth::Dataset* data = nullptr;
    if (split == "target-blend") data = &bench.target_blend;
    else if (split == "target-test") data = &bench.target_test;
    else if (split == "source-test") data = &bench.source_test;
    else throw ConfigError("evaluate: unknown split \"" + split + "\"");

    const net::BackboneParams params = net::load_checkpoint(ckpt.string());
    const train::Evaluation ev = train::evaluate(params, *data);
    std::ostringstream csv;
    csv << "split,accuracy";
    for (std::size_t d = 0; d < ev.per_domain_count.size(); ++d) csv << ",acc_d" << d;
    csv << "\n" << split << ',' << format_double(ev.accuracy);
    for (double a : ev.per_domain_accuracy()) csv << ',' << format_double(a);
    csv << "\n";
    write_text(fs::path(cfg.out_dir) / "evaluate" / "metrics.csv", csv.str());
    echo_config(cfg, "evaluate");
    std::cout << "evaluate: " << split << " accuracy " << ev.accuracy << "\n";
    return 0;
}

int cmd_ablate(const RunConfig& cfg) {
    cfg.validate();
    if (!fs::exists(pretrain_checkpoint_path(cfg))) {
        throw ConfigError("missing checkpoint " + pretrain_checkpoint_path(cfg).string() +
                          "; run pretrain first");
    }
    const synth::Benchmark bench = load_benchmark(cfg);
    const fs::path dir = fs::path(cfg.out_dir) / "ablate";
    std::ostringstream summary;
    summary << "mode,final_accuracy\n";
    for (const std::string mode : {"cel-only", "con-unweighted", "con-full"}) {
        RunConfig variant = cfg;
        variant.ablate = mode;
        const double acc = run_adaptation(cfg, bench, variant.adapt_config(),
                                          dir / (mode + ".csv"), fs::path());
        summary << mode << ',' << format_double(acc) << '\n';
    }
    write_text(dir / "summary.csv", summary.str());
    echo_config(cfg, "ablate");
    std::cout << "ablate: wrote " << (dir / "summary.csv").string() << "\n";
    return 0;
}

int cmd_sweep_k(const RunConfig& cfg, const std::vector<int>& values) {
    cfg.validate();
    if (values.empty()) throw ConfigError("sweep-k: --values must not be empty");
    if (!fs::exists(pretrain_checkpoint_path(cfg))) {
        throw ConfigError("missing checkpoint " + pretrain_checkpoint_path(cfg).string() +
                          "; run pretrain first");
    }
    const synth::Benchmark bench = load_benchmark(cfg);
    const fs::path dir = fs::path(cfg.out_dir) / "sweep-k";
    std::ostringstream summary;
    summary << "k,final_accuracy\n";
    for (int k : values) {
        RunConfig variant = cfg;
        variant.cluster_count = k;
        const double acc = run_adaptation(cfg, bench, variant.adapt_config(),
                                          dir / ("k" + std::to_string(k) + ".csv"), fs::path());
        summary << k << ',' << format_double(acc) << '\n';
    }
    write_text(dir / "summary.csv", summary.str());
    echo_config(cfg, "sweep-k");
    std::cout << "sweep-k: wrote " << (dir / "summary.csv").string() << "\n";
    return 0;
}

int run(int argc, const char* const* argv) {
    CLI::App app{"Source-free blending-target adaptation laboratory"};
    app.require_subcommand(1);

    std::string config_path;
    std::string checkpoint;
    std::string split = "target-blend";
    std::string values_csv = "2,3,4,5";

    // Flag overrides applied on top of the JSON config.
    struct Overrides {
        std::optional<std::uint64_t> seed;
        std::optional<std::string> out_dir;
        std::optional<int> k;
        std::optional<double> beta;
        std::optional<int> epochs;
        std::optional<std::string> u_direction;
        std::optional<std::string> ablate;
        bool no_fit_term = false;
    } ov;

    auto add_common = [&](CLI::App* cmd) {
        cmd->add_option("--config", config_path, "JSON config file");
        cmd->add_option("--seed", ov.seed, "master seed");
        cmd->add_option("--out", ov.out_dir, "output directory");
        cmd->add_option("--k", ov.k, "pseudo-domain count");
        cmd->add_option("--beta", ov.beta, "contrastive trade-off");
        cmd->add_option("--epochs", ov.epochs, "adaptation epochs");
        cmd->add_flag("--no-fit-term", ov.no_fit_term,
                      "drop the pseudo-label fit term from the adaptation objective");
        cmd->add_option("--selection-u-direction", ov.u_direction,
                        "low: select low-uncertainty samples; high: literal text criterion")
            ->check(CLI::IsMember({"low", "high"}));
        cmd->add_option("--ablate", ov.ablate, "loss ablation mode")
            ->check(CLI::IsMember({"cel-only", "con-unweighted", "con-full"}));
    };

    CLI::App* generate = app.add_subcommand("generate", "write the synthetic benchmark splits");
    CLI::App* pretrain = app.add_subcommand("pretrain", "train the source model");
    CLI::App* adapt = app.add_subcommand("adapt", "source-free adaptation on the target blend");
    CLI::App* evaluate = app.add_subcommand("evaluate", "evaluate a checkpoint on a split");
    CLI::App* ablate = app.add_subcommand("ablate", "run cel-only / con-unweighted / con-full");
    CLI::App* sweep = app.add_subcommand("sweep-k", "adaptation across pseudo-domain counts");
    for (CLI::App* cmd : {generate, pretrain, adapt, evaluate, ablate, sweep}) add_common(cmd);
    evaluate->add_option("--checkpoint", checkpoint, "checkpoint path");
    evaluate->add_option("--split", split, "target-blend | target-test | source-test");
    sweep->add_option("--values", values_csv, "comma-separated k values");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? 0 : 2;
    }

    try {
        RunConfig cfg = config_path.empty() ? RunConfig() : load_config(config_path);
        if (ov.seed) cfg.seed = *ov.seed;
        if (ov.out_dir) cfg.out_dir = *ov.out_dir;
        if (ov.k) cfg.cluster_count = *ov.k;
        if (ov.beta) cfg.beta = *ov.beta;
        if (ov.epochs) cfg.adapt_epochs = *ov.epochs;
        if (ov.no_fit_term) cfg.fit_term = false;
        if (ov.u_direction) cfg.selection_u_direction = *ov.u_direction;
        if (ov.ablate) cfg.ablate = *ov.ablate;

        if (generate->parsed()) return cmd_generate(cfg);
        if (pretrain->parsed()) return cmd_pretrain(cfg);
        if (adapt->parsed()) return cmd_adapt(cfg);
        if (evaluate->parsed()) return cmd_evaluate(cfg, checkpoint, split);
        if (ablate->parsed()) return cmd_ablate(cfg);
        if (sweep->parsed()) {
            std::vector<int> values;
            std::stringstream ss(values_csv);
            std::string tok;
            while (std::getline(ss, tok, ',')) {
                if (!tok.empty()) values.push_back(std::stoi(tok));
            }
            return cmd_sweep_k(cfg, values);
        }
        return 2;
    } catch (const ConfigError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const ParseError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    }
}

}  // namespace eca::cli

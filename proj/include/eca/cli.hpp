#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "eca/synth.hpp"
#include "eca/train.hpp"

namespace eca::cli {

// Fully resolved run configuration. Every field has a default; unknown JSON
// keys are rejected; the resolved document is echoed into the output
// directory so any run can be reproduced from its artifacts.
struct RunConfig {
    std::uint64_t seed = 17;
    std::string out_dir = "runs/default";

    // data
    int num_classes = 6;
    int input_dim = 8;
    double source_noise = 0.4;
    std::vector<double> rotations_deg = {8.0, 14.0, 18.0};
    std::vector<std::vector<double>> translations = {{0.3, -0.2}, {-0.3, 0.3}, {0.2, 0.3}};
    std::vector<double> noise_scales = {0.5, 0.55, 0.6};
    std::vector<double> weights = {0.4, 0.3, 0.3};
    bool label_shift = true;
    double prior_sigma = 0.5;
    int source_train_count = 1200;
    int source_test_count = 300;
    int target_blend_count = 1800;
    int target_test_count = 1800;

    // model
    std::vector<int> hidden = {32, 32};

    // pretrain
    int pretrain_epochs = 40;
    int pretrain_batch_size = 64;
    double pretrain_learning_rate = 0.05;

    // adapt
    int adapt_epochs = 40;
    int adapt_batch_size = 64;
    double adapt_learning_rate = 0.00005;
    double momentum = 0.95;
    double beta = 1.0;
    double lambda0 = 0.1;
    double tau = 0.1;
    int cluster_count = 3;
    bool fit_term = true;
    std::string selection_u_direction = "low";  // "low" | "high"
    std::string ablate = "con-full";            // "cel-only" | "con-unweighted" | "con-full"
    double lr_decay = 0.88;

    void validate() const;
    std::string to_json() const;

    synth::BlendSpec blend_spec() const;
    train::PretrainConfig pretrain_config() const;
    train::AdaptConfig adapt_config() const;
};

RunConfig parse_config_json(const std::string& text);
RunConfig load_config(const std::string& path);

// Command implementations; each returns a process exit code
// (0 ok, 2 config error, 3 runtime failure).
int cmd_generate(const RunConfig& config);
int cmd_pretrain(const RunConfig& config);
int cmd_adapt(const RunConfig& config);
int cmd_evaluate(const RunConfig& config, const std::string& checkpoint, const std::string& split);
int cmd_ablate(const RunConfig& config);
int cmd_sweep_k(const RunConfig& config, const std::vector<int>& values);

// Full argv entry point used by the binary.
int run(int argc, const char* const* argv);

}  // namespace eca::cli

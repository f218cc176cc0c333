#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "eca/tensor.hpp"

namespace eca::synth {

// One unlabeled target domain: the source class layout rotated, translated
// and renoised, with its own class prior (label shift) and mixing weight.
struct TargetSpec {
    double rotation_deg = 0.0;
    double translate_x = 0.0;
    double translate_y = 0.0;
    double noise_scale = 0.4;
    double weight = 1.0;
    std::vector<double> class_prior;  // length num_classes, sums to 1
};

struct BlendSpec {
    int num_classes = 6;
    int input_dim = 8;  // first two dims are geometric, the rest nuisance
    double source_noise = 0.4;
    std::vector<TargetSpec> targets;
    int source_train_count = 1200;
    int source_test_count = 300;
    int target_blend_count = 1800;
    int target_test_count = 1800;
    std::uint64_t seed = 17;

    void validate() const;  // ConfigError naming the offending field
};

// Per-target class priors: uniform under no label shift, otherwise a
// logistic-normal perturbation of the uniform prior with the given sigma.
std::vector<std::vector<double>> perturbed_priors(int targets, int num_classes, double sigma,
                                                  std::uint64_t seed);

// The stock benchmark: three targets with increasing rotation, small
// translations, renoising, perturbed class priors (when label_shift) and
// 0.4/0.3/0.3 mixing.
BlendSpec default_spec(std::uint64_t seed = 17, bool label_shift = true);

struct Dataset {
    int dim = 0;
    std::vector<double> features;   // [count x dim]
    std::vector<int> labels;        // evaluation-only on target splits
    std::vector<int> true_domain;   // -1 on source splits; evaluation-only
    std::string split;

    int count() const { return static_cast<int>(labels.size()); }
    Tensor features_tensor() const;  // requires count >= 1
};

struct Benchmark {
    Dataset source_train;
    Dataset source_test;
    Dataset target_blend;  // rows shuffled; domain order carries no signal
    Dataset target_test;
};

Benchmark generate(const BlendSpec& spec);

// CSV with header id,f0..f{d-1},label,true_domain,split; 17 significant
// digits, LF line endings. Round-trips bit-exactly.
void write_csv(const Dataset& data, const std::string& path);
Dataset read_csv(const std::string& path);

}  // namespace eca::synth

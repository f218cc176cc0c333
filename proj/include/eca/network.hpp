#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "eca/tensor.hpp"

namespace eca::net {

struct LayerParam {
    Tensor weight;  // [in x out]
    Tensor bias;    // [out]
};

// MLP backbone split three ways: a shallow extractor (first hidden layer,
// whose activations also drive domain clustering), a deep extractor (the
// remaining hidden layers) and a linear evidence head.
struct BackboneParams {
    std::vector<int> widths;  // input, hidden..., feature_dim, num_classes
    std::vector<LayerParam> layers;
    int f1_count = 0;
    int f2_count = 0;
    int g_count = 0;
    std::uint64_t seed = 0;

    int input_dim() const { return widths.front(); }
    int num_classes() const { return widths.back(); }
    int feature_dim() const { return widths[widths.size() - 2]; }
    int shallow_dim() const { return widths[1]; }

    std::vector<Tensor> parameters() const;
    // Deep copy with requires_grad off; for evaluation snapshots.
    BackboneParams detached_copy() const;
    // Deep copy ready for training; the original stays untouched.
    BackboneParams trainable_copy() const;
};

struct FeaturePair {
    Tensor shallow;    // [batch x shallow_dim], output of the first layer
    Tensor embedding;  // [batch x feature_dim], row-normalized deep feature
    std::vector<int> zero_rows;  // rows whose deep feature had zero norm
};

struct ForwardResult {
    FeaturePair features;
    Tensor logits;  // [batch x M], raw head output before the evidence function
};

// Glorot-uniform weights, zero biases, deterministic per seed. Widths must
// chain with at least input, one hidden and the class layer.
BackboneParams init_backbone(std::uint64_t seed, const std::vector<int>& widths);

// Softplus after the shallow and every deep layer; linear head.
ForwardResult forward(const BackboneParams& params, const Tensor& x);

// Single-document JSON checkpoint; floats round-trip exactly.
void save_checkpoint(const BackboneParams& params, const std::string& path);
BackboneParams load_checkpoint(const std::string& path);

}  // namespace eca::net

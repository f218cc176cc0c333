#include "eca/network.hpp"

#include <cmath>
#include <fstream>

#include <json.hpp>

#include "eca/rng.hpp"

namespace eca::net {

using nlohmann::json;

std::vector<Tensor> BackboneParams::parameters() const {
    std::vector<Tensor> out;
    out.reserve(layers.size() * 2);
    for (const LayerParam& l : layers) {
        out.push_back(l.weight);
        out.push_back(l.bias);
    }
    return out;
}

namespace {

BackboneParams deep_copy(const BackboneParams& src, bool requires_grad) {
    BackboneParams copy;
    copy.widths = src.widths;
    copy.f1_count = src.f1_count;
    copy.f2_count = src.f2_count;
    copy.g_count = src.g_count;
    copy.seed = src.seed;
    for (const LayerParam& l : src.layers) {
        copy.layers.push_back(
            {Tensor::from_values(l.weight.shape(), l.weight.values(), requires_grad),
             Tensor::from_values(l.bias.shape(), l.bias.values(), requires_grad)});
    }
    return copy;
}

}  // namespace

BackboneParams BackboneParams::detached_copy() const { return deep_copy(*this, false); }
BackboneParams BackboneParams::trainable_copy() const { return deep_copy(*this, true); }

BackboneParams init_backbone(std::uint64_t seed, const std::vector<int>& widths) {
    if (widths.size() < 3) {
        throw ConfigError("init_backbone: widths need input, at least one hidden, and classes");
    }
    for (int w : widths) {
        if (w <= 0) throw ConfigError("init_backbone: widths must be positive");
    }
    BackboneParams params;
    params.widths = widths;
    params.seed = seed;
    const int n_layers = static_cast<int>(widths.size()) - 1;
    params.f1_count = 1;
    params.g_count = 1;
    params.f2_count = n_layers - 2;

    Rng rng(seeds::sub_seed(seed, seeds::kInit));
    for (int l = 0; l < n_layers; ++l) {
        const int fan_in = widths[l], fan_out = widths[l + 1];
        const double a = std::sqrt(6.0 / (fan_in + fan_out));
        std::vector<double> w(static_cast<std::size_t>(fan_in) * fan_out);
        for (double& v : w) v = rng.uniform(-a, a);
        params.layers.push_back(
            {Tensor::from_values({fan_in, fan_out}, std::move(w), true),
             Tensor::zeros({fan_out}, true)});
    }
    return params;
}

namespace {

Tensor affine(const Tensor& x, const LayerParam& l) {
    return add_row_broadcast(matmul(x, l.weight), l.bias);
}

}  // namespace

ForwardResult forward(const BackboneParams& params, const Tensor& x) {
    if (x.shape().size() != 2 || x.shape()[1] != params.input_dim()) {
        throw DimensionError("forward: input must be [batch x " +
                             std::to_string(params.input_dim()) + "]");
    }
    Tensor h = x;
    Tensor shallow;
    const int n_layers = static_cast<int>(params.layers.size());
    for (int l = 0; l < n_layers - 1; ++l) {
        h = softplus(affine(h, params.layers[l]));
        if (l == 0) shallow = h;
    }
    Tensor logits = affine(h, params.layers[n_layers - 1]);

    FeaturePair features;
    features.shallow = shallow;
    features.embedding = row_normalize(h);
    const int b = h.shape()[0], c = h.shape()[1];
    for (int i = 0; i < b; ++i) {
        double norm2 = 0.0;
        for (int j = 0; j < c; ++j) {
            const double v = h.at(static_cast<std::size_t>(i) * c + j);
            norm2 += v * v;
        }
        if (norm2 == 0.0) features.zero_rows.push_back(i);
    }
    return {features, logits};
}

void save_checkpoint(const BackboneParams& params, const std::string& path) {
    json doc;
    doc["widths"] = params.widths;
    doc["seed"] = params.seed;
    doc["role_split"] = {{"f1", params.f1_count}, {"f2", params.f2_count}, {"g", params.g_count}};
    json layers = json::array();
    for (const LayerParam& l : params.layers) {
        const int in = l.weight.shape()[0], out = l.weight.shape()[1];
        json w = json::array();
        for (int i = 0; i < in; ++i) {
            json row = json::array();
            for (int j = 0; j < out; ++j) row.push_back(l.weight.at(static_cast<std::size_t>(i) * out + j));
            w.push_back(std::move(row));
        }
        json b = json::array();
        for (std::size_t j = 0; j < l.bias.size(); ++j) b.push_back(l.bias.at(j));
        layers.push_back({{"w", std::move(w)}, {"b", std::move(b)}});
    }
    doc["layers"] = std::move(layers);

    std::ofstream out(path);
    if (!out) throw ConfigError("save_checkpoint: cannot open " + path);
    out << doc.dump(2) << "\n";
}

BackboneParams load_checkpoint(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("load_checkpoint: cannot open " + path);
    json doc;
    try {
        in >> doc;
    } catch (const json::exception& e) {
        throw ParseError("load_checkpoint: " + std::string(e.what()));
    }
    BackboneParams params;
    params.widths = doc.at("widths").get<std::vector<int>>();
    params.seed = doc.at("seed").get<std::uint64_t>();
    params.f1_count = doc.at("role_split").at("f1").get<int>();
    params.f2_count = doc.at("role_split").at("f2").get<int>();
    params.g_count = doc.at("role_split").at("g").get<int>();
    for (const json& lj : doc.at("layers")) {
        const auto& wj = lj.at("w");
        const int in = static_cast<int>(wj.size());
        const int out = static_cast<int>(wj.at(0).size());
        std::vector<double> w;
        w.reserve(static_cast<std::size_t>(in) * out);
        for (const json& row : wj)
            for (const json& v : row) w.push_back(v.get<double>());
        std::vector<double> b = lj.at("b").get<std::vector<double>>();
        params.layers.push_back({Tensor::from_values({in, out}, std::move(w), true),
                                 Tensor::from_values({out}, std::move(b), true)});
    }
    if (params.widths.size() != params.layers.size() + 1) {
        throw ParseError("load_checkpoint: widths do not match layer count");
    }
    return params;
}

}  // namespace eca::net

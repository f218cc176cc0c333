#include "eca/synth.hpp"

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include "eca/rng.hpp"

namespace eca::synth {

namespace {

constexpr double kCircleRadius = 3.0;

void class_center(int label, int num_classes, double* cx, double* cy) {
    const double angle = 2.0 * M_PI * label / num_classes;
    *cx = kCircleRadius * std::cos(angle);
    *cy = kCircleRadius * std::sin(angle);
}

int draw_categorical(const std::vector<double>& weights, Rng& rng) {
    const double t = rng.uniform();
    double run = 0.0;
    for (std::size_t i = 0; i + 1 < weights.size(); ++i) {
        run += weights[i];
        if (t < run) return static_cast<int>(i);
    }
    return static_cast<int>(weights.size()) - 1;
}

}  // namespace

void BlendSpec::validate() const {
    if (num_classes < 2) throw ConfigError("blend spec: num_classes must be at least 2");
    if (input_dim < 2) throw ConfigError("blend spec: input_dim must be at least 2");
    if (source_noise <= 0.0) throw ConfigError("blend spec: source_noise must be positive");
    if (targets.empty()) throw ConfigError("blend spec: targets must not be empty");
    if (source_train_count < 1 || source_test_count < 1) {
        throw ConfigError("blend spec: source counts must be positive");
    }
    if (target_blend_count < 1 || target_test_count < 1) {
        throw ConfigError("blend spec: target counts must be positive");
    }
    double weight_sum = 0.0;
    for (std::size_t j = 0; j < targets.size(); ++j) {
        const TargetSpec& t = targets[j];
        if (t.noise_scale <= 0.0) throw ConfigError("blend spec: targets.noise_scale must be positive");
        if (t.weight <= 0.0) throw ConfigError("blend spec: targets.weight must be positive");
        weight_sum += t.weight;
        if (static_cast<int>(t.class_prior.size()) != num_classes) {
            throw ConfigError("blend spec: targets.class_prior must have num_classes entries");
        }
        double prior_sum = 0.0;
        for (double p : t.class_prior) {
            if (p < 0.0) throw ConfigError("blend spec: targets.class_prior entries must be >= 0");
            prior_sum += p;
        }
        if (std::abs(prior_sum - 1.0) > 1e-9) {
            throw ConfigError("blend spec: targets.class_prior must sum to 1");
        }
    }
    if (std::abs(weight_sum - 1.0) > 1e-9) {
        throw ConfigError("blend spec: targets.weight values must sum to 1");
    }
}

std::vector<std::vector<double>> perturbed_priors(int targets, int num_classes, double sigma,
                                                  std::uint64_t seed) {
    Rng rng(seeds::sub_seed(seed, seeds::kPriors));
    std::vector<std::vector<double>> priors;
    for (int j = 0; j < targets; ++j) {
        std::vector<double> prior(static_cast<std::size_t>(num_classes), 1.0 / num_classes);
        if (sigma > 0.0) {
            double total = 0.0;
            for (double& p : prior) {
                p = std::exp(sigma * rng.normal());
                total += p;
            }
            for (double& p : prior) p /= total;
        }
        priors.push_back(std::move(prior));
    }
    return priors;
}

BlendSpec default_spec(std::uint64_t seed, bool label_shift) {
    BlendSpec spec;
    spec.seed = seed;
    spec.input_dim = 8;
    const double rotations[3] = {8.0, 14.0, 18.0};
    const double translations[3][2] = {{0.3, -0.2}, {-0.3, 0.3}, {0.2, 0.3}};
    const double noises[3] = {0.5, 0.55, 0.6};
    const double weights[3] = {0.4, 0.3, 0.3};

    const auto priors =
        perturbed_priors(3, spec.num_classes, label_shift ? 0.5 : 0.0, seed);
    for (int j = 0; j < 3; ++j) {
        TargetSpec t;
        t.rotation_deg = rotations[j];
        t.translate_x = translations[j][0];
        t.translate_y = translations[j][1];
        t.noise_scale = noises[j];
        t.weight = weights[j];
        t.class_prior = priors[static_cast<std::size_t>(j)];
        spec.targets.push_back(std::move(t));
    }
    return spec;
}

namespace {

void append_sample(Dataset& data, const BlendSpec& spec, int label, int domain,
                   double rotation_deg, double tx, double ty, double noise, Rng& rng) {
    double cx, cy;
    class_center(label, spec.num_classes, &cx, &cy);
    const double a = rotation_deg * M_PI / 180.0;
    const double rx = std::cos(a) * cx - std::sin(a) * cy + tx;
    const double ry = std::sin(a) * cx + std::cos(a) * cy + ty;
    data.features.push_back(rx + noise * rng.normal());
    data.features.push_back(ry + noise * rng.normal());
    for (int d = 2; d < spec.input_dim; ++d) data.features.push_back(rng.normal());
    data.labels.push_back(label);
    data.true_domain.push_back(domain);
}

Dataset make_source_split(const BlendSpec& spec, int count, const char* split, Rng& rng) {
    Dataset data;
    data.dim = spec.input_dim;
    data.split = split;
    for (int i = 0; i < count; ++i) {
        const int label = rng.below(spec.num_classes);
        append_sample(data, spec, label, -1, 0.0, 0.0, 0.0, spec.source_noise, rng);
    }
    return data;
}

Dataset make_target_split(const BlendSpec& spec, int count, const char* split, Rng& rng) {
    std::vector<double> weights;
    for (const TargetSpec& t : spec.targets) weights.push_back(t.weight);
    Dataset data;
    data.dim = spec.input_dim;
    data.split = split;
    for (int i = 0; i < count; ++i) {
        const int j = draw_categorical(weights, rng);
        const TargetSpec& t = spec.targets[static_cast<std::size_t>(j)];
        const int label = draw_categorical(t.class_prior, rng);
        append_sample(data, spec, label, j, t.rotation_deg, t.translate_x, t.translate_y,
                      t.noise_scale, rng);
    }
    return data;
}

void shuffle_rows(Dataset& data, Rng& rng) {
    const std::vector<int> perm = rng.permutation(data.count());
    Dataset shuffled;
    shuffled.dim = data.dim;
    shuffled.split = data.split;
    shuffled.features.reserve(data.features.size());
    for (int i : perm) {
        const double* row = data.features.data() + static_cast<std::size_t>(i) * data.dim;
        shuffled.features.insert(shuffled.features.end(), row, row + data.dim);
        shuffled.labels.push_back(data.labels[static_cast<std::size_t>(i)]);
        shuffled.true_domain.push_back(data.true_domain[static_cast<std::size_t>(i)]);
    }
    data = std::move(shuffled);
}

}  // namespace

Benchmark generate(const BlendSpec& spec) {
    spec.validate();
    Rng rng(seeds::sub_seed(spec.seed, seeds::kData));
    Benchmark bench;
    bench.source_train = make_source_split(spec, spec.source_train_count, "source-train", rng);
    bench.source_test = make_source_split(spec, spec.source_test_count, "source-test", rng);
    bench.target_blend = make_target_split(spec, spec.target_blend_count, "target-blend", rng);
    bench.target_test = make_target_split(spec, spec.target_test_count, "target-test", rng);
    shuffle_rows(bench.target_blend, rng);
    return bench;
}

Tensor Dataset::features_tensor() const {
    if (count() < 1) throw ContractError("features_tensor: dataset is empty");
    return Tensor::from_values({count(), dim}, features);
}

void write_csv(const Dataset& data, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ConfigError("write_csv: cannot open " + path);
    out << "id";
    for (int j = 0; j < data.dim; ++j) out << ",f" << j;
    out << ",label,true_domain,split\n";
    char buf[64];
    for (int i = 0; i < data.count(); ++i) {
        out << i;
        for (int j = 0; j < data.dim; ++j) {
            std::snprintf(buf, sizeof(buf), "%.17g",
                          data.features[static_cast<std::size_t>(i) * data.dim + j]);
            out << ',' << buf;
        }
        out << ',' << data.labels[static_cast<std::size_t>(i)] << ','
            << data.true_domain[static_cast<std::size_t>(i)] << ',' << data.split << '\n';
    }
}

namespace {

std::vector<std::string> split_fields(const std::string& line) {
    std::vector<std::string> fields;
    std::string cur;
    for (char ch : line) {
        if (ch == ',') {
            fields.push_back(cur);
            cur.clear();
        } else {
            cur.push_back(ch);
        }
    }
    fields.push_back(cur);
    return fields;
}

}  // namespace

Dataset read_csv(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("read_csv: cannot open " + path);
    std::string line;
    if (!std::getline(in, line)) throw ParseError(path + ":1: missing header");
    if (!line.empty() && line.back() == '\r') line.pop_back();
    const std::vector<std::string> header = split_fields(line);
    if (header.size() < 4 || header.front() != "id" || header[header.size() - 3] != "label" ||
        header[header.size() - 2] != "true_domain" || header.back() != "split") {
        throw ParseError(path + ":1: malformed header");
    }
    Dataset data;
    data.dim = static_cast<int>(header.size()) - 4;

    int line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        const std::vector<std::string> fields = split_fields(line);
        if (static_cast<int>(fields.size()) != data.dim + 4) {
            throw ParseError(path + ":" + std::to_string(line_no) + ": expected " +
                             std::to_string(data.dim + 4) + " fields, got " +
                             std::to_string(fields.size()));
        }
        try {
            for (int j = 0; j < data.dim; ++j) {
                std::size_t used = 0;
                data.features.push_back(std::stod(fields[static_cast<std::size_t>(j) + 1], &used));
            }
            data.labels.push_back(std::stoi(fields[fields.size() - 3]));
            data.true_domain.push_back(std::stoi(fields[fields.size() - 2]));
        } catch (const std::exception&) {
            throw ParseError(path + ":" + std::to_string(line_no) + ": malformed numeric field");
        }
        if (data.split.empty()) {
            data.split = fields.back();
        }
    }
    return data;
}

}  // namespace eca::synth

#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <vector>

#include "eca/rng.hpp"
#include "eca/synth.hpp"
#include "eca/train.hpp"

using namespace eca;
using synth::BlendSpec;
using synth::Dataset;

namespace {

std::string temp_path(const char* name) {
    return (std::filesystem::temp_directory_path() / name).string();
}

std::vector<double> domain_histogram(const Dataset& data, int domain, int classes) {
    std::vector<double> h(static_cast<std::size_t>(classes), 0.0);
    double total = 0.0;
    for (int i = 0; i < data.count(); ++i) {
        if (data.true_domain[static_cast<std::size_t>(i)] != domain) continue;
        h[static_cast<std::size_t>(data.labels[static_cast<std::size_t>(i)])] += 1.0;
        total += 1.0;
    }
    for (double& v : h) v /= total;
    return h;
}

}  // namespace

TEST_SUITE_BEGIN("synth");

TEST_CASE("no-shift target matches source accuracy") {
    // One target identical in distribution to the source; the source model
    // should transfer within two points, checked over five seeds.
    int hits = 0;
    for (std::uint64_t seed = 50; seed < 55; ++seed) {
        BlendSpec spec;
        spec.num_classes = 3;
        spec.input_dim = 3;
        spec.source_train_count = 400;
        spec.source_test_count = 400;
        spec.target_blend_count = 400;
        spec.target_test_count = 10;
        spec.seed = seed;
        synth::TargetSpec t;
        t.rotation_deg = 0.0;
        t.noise_scale = spec.source_noise;
        t.weight = 1.0;
        t.class_prior.assign(3, 1.0 / 3.0);
        spec.targets = {t};
        const synth::Benchmark bench = synth::generate(spec);

        net::BackboneParams params = net::init_backbone(seed, {3, 16, 16, 3});
        train::PretrainConfig cfg;
        cfg.epochs = 15;
        cfg.seed = seed;
        train::pretrain_source(params, bench.source_train, bench.source_test, cfg);
        const double src = train::evaluate(params, bench.source_test).accuracy;
        const double tgt = train::evaluate(params, bench.target_blend).accuracy;
        if (std::abs(src - tgt) <= 0.02 + 1e-12) ++hits;
    }
    CHECK(hits >= 4);
}

TEST_CASE("blend domain counts follow the mixing proportions") {
    BlendSpec spec = synth::default_spec(99);
    spec.targets.resize(2);
    spec.targets[0].weight = 0.5;
    spec.targets[1].weight = 0.5;
    spec.target_blend_count = 1000;
    const synth::Benchmark bench = synth::generate(spec);
    int count0 = 0;
    for (int d : bench.target_blend.true_domain)
        if (d == 0) ++count0;
    const double sigma = std::sqrt(1000 * 0.5 * 0.5);
    CHECK(std::abs(count0 - 500.0) <= 3.0 * sigma);
}

TEST_CASE("one-hot prior produces a single class") {
    BlendSpec spec = synth::default_spec(7);
    for (auto& t : spec.targets) {
        t.class_prior.assign(static_cast<std::size_t>(spec.num_classes), 0.0);
    }
    spec.targets[0].class_prior[0] = 1.0;
    spec.targets[1].class_prior[0] = 1.0;
    spec.targets[2].class_prior[0] = 1.0;
    const synth::Benchmark bench = synth::generate(spec);
    for (int i = 0; i < bench.target_blend.count(); ++i) {
        CHECK(bench.target_blend.labels[static_cast<std::size_t>(i)] == 0);
    }
}

TEST_CASE("empty dataset round-trips as a header-only file") {
    Dataset empty;
    empty.dim = 3;
    empty.split = "source-train";
    const std::string path = temp_path("eca_empty.csv");
    synth::write_csv(empty, path);
    std::ifstream in(path);
    std::string line;
    int lines = 0;
    while (std::getline(in, line)) ++lines;
    CHECK(lines == 1);
    Dataset back = synth::read_csv(path);
    CHECK(back.count() == 0);
    CHECK(back.dim == 3);
    std::filesystem::remove(path);
}

TEST_CASE("small dataset has the declared shape on disk") {
    Dataset d;
    d.dim = 2;
    d.split = "target-blend";
    d.features = {1.5, -2.25, 0.0, 1e-3, 3.25, 7.75};
    d.labels = {0, 1, 2};
    d.true_domain = {0, 0, 1};
    const std::string path = temp_path("eca_small.csv");
    synth::write_csv(d, path);
    std::ifstream in(path);
    std::string line;
    std::vector<std::string> lines;
    while (std::getline(in, line)) lines.push_back(line);
    REQUIRE(lines.size() == 4);
    CHECK(lines[0] == "id,f0,f1,label,true_domain,split");
    CHECK(lines[1] == "0,1.5,-2.25,0,0,target-blend");
    std::filesystem::remove(path);
}

TEST_CASE("random dataset round-trips bit-exactly") {
    Rng rng(61);
    Dataset d;
    d.dim = 4;
    d.split = "target-test";
    for (int i = 0; i < 64; ++i) {
        for (int j = 0; j < 4; ++j) {
            double v = rng.normal() * std::pow(10.0, rng.uniform(-12, 12));
            d.features.push_back(v);
        }
        d.labels.push_back(rng.below(6));
        d.true_domain.push_back(rng.below(3) - 1);
    }
    const std::string path = temp_path("eca_roundtrip.csv");
    synth::write_csv(d, path);
    Dataset back = synth::read_csv(path);
    CHECK(back.dim == d.dim);
    CHECK(back.features == d.features);
    CHECK(back.labels == d.labels);
    CHECK(back.true_domain == d.true_domain);
    CHECK(back.split == d.split);
    std::filesystem::remove(path);
}

TEST_CASE("default label shifts are real in total variation") {
    const synth::Benchmark bench = synth::generate(synth::default_spec(17));
    const int m = 6;
    for (int a = 0; a < 3; ++a) {
        for (int b = a + 1; b < 3; ++b) {
            const auto ha = domain_histogram(bench.target_test, a, m);
            const auto hb = domain_histogram(bench.target_test, b, m);
            double tv = 0.0;
            for (int c = 0; c < m; ++c) tv += std::abs(ha[static_cast<std::size_t>(c)] - hb[static_cast<std::size_t>(c)]);
            tv *= 0.5;
            CHECK(tv >= 0.1);
        }
    }
}

TEST_CASE("no label shift mode keeps priors uniform") {
    const BlendSpec spec = synth::default_spec(17, false);
    for (const auto& t : spec.targets) {
        for (double p : t.class_prior) CHECK(p == doctest::Approx(1.0 / 6).epsilon(1e-12));
    }
}

TEST_CASE("row shuffling leaves evaluation metrics unchanged") {
    const synth::Benchmark bench = synth::generate(synth::default_spec(23));
    net::BackboneParams params = net::init_backbone(23, {8, 16, 16, 6});
    const train::Evaluation base = train::evaluate(params, bench.target_blend);

    Dataset shuffled = bench.target_blend;
    Rng rng(5);
    const std::vector<int> perm = rng.permutation(shuffled.count());
    Dataset out;
    out.dim = shuffled.dim;
    out.split = shuffled.split;
    for (int i : perm) {
        for (int j = 0; j < shuffled.dim; ++j)
            out.features.push_back(shuffled.features[static_cast<std::size_t>(i) * shuffled.dim + j]);
        out.labels.push_back(shuffled.labels[static_cast<std::size_t>(i)]);
        out.true_domain.push_back(shuffled.true_domain[static_cast<std::size_t>(i)]);
    }
    const train::Evaluation permuted = train::evaluate(params, out);
    CHECK(permuted.accuracy == base.accuracy);
    CHECK(permuted.per_domain_correct == base.per_domain_correct);
}

TEST_CASE("generation is deterministic per seed") {
    const synth::Benchmark a = synth::generate(synth::default_spec(31));
    const synth::Benchmark b = synth::generate(synth::default_spec(31));
    CHECK(a.target_blend.features == b.target_blend.features);
    CHECK(a.source_train.features == b.source_train.features);
}

TEST_CASE("invalid specs raise ConfigError naming the field") {
    BlendSpec spec = synth::default_spec(1);
    spec.targets[0].weight = 0.9;
    CHECK_THROWS_WITH_AS(synth::generate(spec), "blend spec: targets.weight values must sum to 1",
                         ConfigError);
    spec = synth::default_spec(1);
    spec.targets[1].class_prior[0] += 0.5;
    CHECK_THROWS_AS(synth::generate(spec), ConfigError);
    spec = synth::default_spec(1);
    spec.input_dim = 1;
    CHECK_THROWS_AS(synth::generate(spec), ConfigError);
}

TEST_CASE("malformed csv reports the line number") {
    const std::string path = temp_path("eca_bad.csv");
    {
        std::ofstream out(path);
        out << "id,f0,f1,label,true_domain,split\n";
        out << "0,1.0,2.0,1,0,x\n";
        out << "1,3.0,oops,1,0,x\n";
    }
    try {
        synth::read_csv(path);
        FAIL("expected ParseError");
    } catch (const ParseError& e) {
        CHECK(std::string(e.what()).find(":3:") != std::string::npos);
    }
    std::filesystem::remove(path);
}

TEST_SUITE_END();

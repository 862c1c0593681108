#include <doctest.h>

#include <array>
#include <cmath>

#include "dcys/errors.hpp"
#include "dcys/synth.hpp"

using namespace dcys;

namespace {

struct Features {
    double mean_intensity;  // over mask voxels
    double mask_area;       // voxel count
};

Features features_of(const Volume& v) {
    double sum = 0.0;
    std::size_t n = 0;
    for (std::size_t i = 0; i < v.mask.size(); ++i)
        if (v.mask[i]) {
            sum += v.intensities[i];
            ++n;
        }
    return {n ? sum / n : 0.0, static_cast<double>(n)};
}

}  // namespace

TEST_CASE("same seed yields identical datasets") {
    SynthConfig cfg;
    cfg.n_per_class = 3;
    const auto a = synth_generate(cfg);
    const auto b = synth_generate(cfg);
    REQUIRE(a.size() == b.size());
    for (std::size_t i = 0; i < a.size(); ++i) {
        CHECK(a[i].patient_id == b[i].patient_id);
        CHECK(a[i].label == b[i].label);
        CHECK(a[i].intensities == b[i].intensities);
        CHECK(a[i].mask == b[i].mask);
    }
}

TEST_CASE("different seeds yield different volumes") {
    SynthConfig cfg;
    cfg.n_per_class = 1;
    SynthConfig cfg2 = cfg;
    cfg2.seed = 2;
    CHECK(synth_generate(cfg)[0].intensities != synth_generate(cfg2)[0].intensities);
}

TEST_CASE("n_per_class=5 yields 20 volumes, 5 per label") {
    SynthConfig cfg;
    cfg.n_per_class = 5;
    const auto volumes = synth_generate(cfg);
    REQUIRE(volumes.size() == 20);
    std::array<int, kNumClasses> counts{};
    for (const auto& v : volumes) {
        REQUIRE(v.label >= 0);
        REQUIRE(v.label < kNumClasses);
        ++counts[v.label];
    }
    for (int c : counts) CHECK(c == 5);
}

TEST_CASE("volumes are structurally valid") {
    SynthConfig cfg;
    cfg.n_per_class = 2;
    for (const auto& v : synth_generate(cfg)) {
        CHECK(v.intensities.size() == v.voxels());
        CHECK(v.mask.size() == v.voxels());
        std::size_t mask_voxels = 0;
        for (auto m : v.mask) {
            CHECK(m <= 1);
            mask_voxels += m;
        }
        CHECK(mask_voxels > 100);  // a usable pancreas, not a sliver
        for (float x : v.intensities) CHECK(std::isfinite(x));
        CHECK(!v.patient_id.empty());
    }
}

TEST_CASE("patient ids are unique") {
    SynthConfig cfg;
    cfg.n_per_class = 4;
    const auto volumes = synth_generate(cfg);
    for (std::size_t i = 0; i < volumes.size(); ++i)
        for (std::size_t j = i + 1; j < volumes.size(); ++j)
            CHECK(volumes[i].patient_id != volumes[j].patient_id);
}

TEST_CASE("mean-intensity + mask-area linear probe separates class 3 from class 0") {
    SynthConfig cfg;
    cfg.n_per_class = 25;  // 100 volumes total
    cfg.seed = 99;
    const auto volumes = synth_generate(cfg);

    // nearest-class-mean classifier in z-scored feature space, classes 0 vs 3
    std::vector<Features> feats;
    std::vector<int> labels;
    for (const auto& v : volumes) {
        if (v.label != 0 && v.label != 3) continue;
        feats.push_back(features_of(v));
        labels.push_back(v.label == 3 ? 1 : 0);
    }
    REQUIRE(feats.size() == 50);

    double mu_i = 0, mu_a = 0;
    for (const auto& f : feats) {
        mu_i += f.mean_intensity;
        mu_a += f.mask_area;
    }
    mu_i /= feats.size();
    mu_a /= feats.size();
    double sd_i = 0, sd_a = 0;
    for (const auto& f : feats) {
        sd_i += (f.mean_intensity - mu_i) * (f.mean_intensity - mu_i);
        sd_a += (f.mask_area - mu_a) * (f.mask_area - mu_a);
    }
    sd_i = std::sqrt(sd_i / feats.size()) + 1e-12;
    sd_a = std::sqrt(sd_a / feats.size()) + 1e-12;

    std::array<double, 2> ci{}, ca{};
    std::array<int, 2> n{};
    for (std::size_t i = 0; i < feats.size(); ++i) {
        ci[labels[i]] += (feats[i].mean_intensity - mu_i) / sd_i;
        ca[labels[i]] += (feats[i].mask_area - mu_a) / sd_a;
        ++n[labels[i]];
    }
    for (int c = 0; c < 2; ++c) {
        ci[c] /= n[c];
        ca[c] /= n[c];
    }

    int correct = 0;
    for (std::size_t i = 0; i < feats.size(); ++i) {
        const double zi = (feats[i].mean_intensity - mu_i) / sd_i;
        const double za = (feats[i].mask_area - mu_a) / sd_a;
        const double d0 = (zi - ci[0]) * (zi - ci[0]) + (za - ca[0]) * (za - ca[0]);
        const double d1 = (zi - ci[1]) * (zi - ci[1]) + (za - ca[1]) * (za - ca[1]);
        if ((d1 < d0 ? 1 : 0) == labels[i]) ++correct;
    }
    CHECK(static_cast<double>(correct) / feats.size() >= 0.90);
}

TEST_CASE("config validation") {
    SynthConfig cfg;
    cfg.n_per_class = 0;
    CHECK_THROWS_AS(cfg.validate(), ConfigError);
    SynthConfig tiny;
    tiny.height = 8;
    CHECK_THROWS_AS(tiny.validate(), ConfigError);
}

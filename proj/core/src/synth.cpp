#include "dcys/synth.hpp"

#include <algorithm>
#include <cmath>

#include "dcys/errors.hpp"

namespace dcys {

void SynthConfig::validate() const {
    if (n_per_class < 1) throw ConfigError("synth: n_per_class must be >= 1");
    if (height < 32 || width < 32) throw ConfigError("synth: height/width must be >= 32");
    if (depth < 16) throw ConfigError("synth: depth must be >= 16");
}

namespace {

struct Ellipsoid {
    double cz, cy, cx;
    double rz, ry, rx;

    // normalized radius: 1.0 on the surface
    double rho(int z, int y, int x) const {
        const double dz = (z - cz) / rz, dy = (y - cy) / ry, dx = (x - cx) / rx;
        return std::sqrt(dz * dz + dy * dy + dx * dx);
    }
};

void add_sphere(Volume& v, double cz, double cy, double cx, double r, float amount,
                bool extend_mask) {
    const int z0 = std::max(0, static_cast<int>(cz - r - 1)), z1 = std::min(v.depth - 1, static_cast<int>(cz + r + 1));
    const int y0 = std::max(0, static_cast<int>(cy - r - 1)), y1 = std::min(v.height - 1, static_cast<int>(cy + r + 1));
    const int x0 = std::max(0, static_cast<int>(cx - r - 1)), x1 = std::min(v.width - 1, static_cast<int>(cx + r + 1));
    for (int z = z0; z <= z1; ++z)
        for (int y = y0; y <= y1; ++y)
            for (int x = x0; x <= x1; ++x) {
                const double dz = z - cz, dy = y - cy, dx = x - cx;
                if (dz * dz + dy * dy + dx * dx <= r * r) {
                    v.at(z, y, x) += amount;
                    if (extend_mask)
                        v.mask[(static_cast<std::size_t>(z) * v.height + y) * v.width + x] = 1;
                }
            }
}

Volume make_volume(const SynthConfig& cfg, int label, int index, Rng rng) {
    Volume v;
    v.patient_id = std::string(kClassNames[label]) + "-" + std::to_string(index);
    v.label = label;
    v.depth = cfg.depth;
    v.height = cfg.height;
    v.width = cfg.width;
    v.intensities.assign(v.voxels(), 0.0f);
    v.mask.assign(v.voxels(), 0);

    Ellipsoid organ;
    organ.cz = cfg.depth / 2.0 + rng.uniform(-1.0, 1.0);
    organ.cy = cfg.height / 2.0 + rng.uniform(-3.0, 3.0);
    organ.cx = cfg.width / 2.0 + rng.uniform(-3.0, 3.0);
    organ.rz = std::max(2.5, 0.14 * cfg.depth) * rng.uniform(0.95, 1.1);
    organ.ry = 0.21 * cfg.height * rng.uniform(0.95, 1.1);
    organ.rx = 0.21 * cfg.width * rng.uniform(0.95, 1.1);

    for (int z = 0; z < v.depth; ++z)
        for (int y = 0; y < v.height; ++y)
            for (int x = 0; x < v.width; ++x) {
                if (organ.rho(z, y, x) <= 1.0) {
                    v.mask[(static_cast<std::size_t>(z) * v.height + y) * v.width + x] = 1;
                    v.at(z, y, x) = 0.5f;  // baseline organ tissue
                }
            }

    switch (label) {
        case 0: {
            // single large smooth blob
            const double sigma = 0.55 * organ.rx;
            for (int z = 0; z < v.depth; ++z)
                for (int y = 0; y < v.height; ++y)
                    for (int x = 0; x < v.width; ++x) {
                        if (!v.mask_at(z, y, x)) continue;
                        const double dz = (z - organ.cz) * organ.rx / organ.rz;
                        const double dy = y - organ.cy, dx = x - organ.cx;
                        const double r2 = dz * dz + dy * dy + dx * dx;
                        v.at(z, y, x) += static_cast<float>(0.9 * std::exp(-r2 / (2 * sigma * sigma)));
                    }
            break;
        }
        case 1: {
            // medium blob with a thick bright rim
            for (int z = 0; z < v.depth; ++z)
                for (int y = 0; y < v.height; ++y)
                    for (int x = 0; x < v.width; ++x) {
                        const double rho = organ.rho(z, y, x);
                        if (rho >= 0.5 && rho <= 0.85) v.at(z, y, x) += 1.0f;
                    }
            break;
        }
        case 2: {
            // many small high-frequency speckles inside the organ
            const int n_speckles = 20 + rng.uniform_int(0, 10);
            for (int i = 0; i < n_speckles; ++i) {
                const double rho = 0.8 * std::cbrt(rng.uniform());
                const double th = rng.uniform(0.0, 6.283185307179586);
                const double ph = std::acos(rng.uniform(-1.0, 1.0));
                const double cz = organ.cz + rho * organ.rz * std::cos(ph);
                const double cy = organ.cy + rho * organ.ry * std::sin(ph) * std::sin(th);
                const double cx = organ.cx + rho * organ.rx * std::sin(ph) * std::cos(th);
                add_sphere(v, cz, cy, cx, rng.uniform(1.0, 2.0), 1.2f, false);
            }
            break;
        }
        case 3: {
            // small solid bright nodule bulging out of the organ boundary
            const double th = rng.uniform(0.0, 6.283185307179586);
            const double cy = organ.cy + 0.95 * organ.ry * std::sin(th);
            const double cx = organ.cx + 0.95 * organ.rx * std::cos(th);
            add_sphere(v, organ.cz, cy, cx, 0.28 * organ.rx, 1.6f, /*extend_mask=*/true);
            break;
        }
    }

    for (auto& x : v.intensities) x += static_cast<float>(rng.normal(0.0, 0.05));
    return v;
}

}  // namespace

std::vector<Volume> synth_generate(const SynthConfig& config) {
    config.validate();
    Rng root(config.seed);
    std::vector<Volume> out;
    out.reserve(static_cast<std::size_t>(config.n_per_class) * kNumClasses);
    for (int label = 0; label < kNumClasses; ++label)
        for (int i = 0; i < config.n_per_class; ++i)
            out.push_back(make_volume(config, label, i,
                                      root.split(static_cast<std::uint64_t>(label) * 100003 + i)));
    return out;
}

}  // namespace dcys

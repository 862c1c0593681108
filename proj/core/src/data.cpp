#include "dcys/data.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <sstream>

#include "dcys/errors.hpp"

namespace dcys {

int class_index_from_name(const std::string& name) {
    for (int i = 0; i < kNumClasses; ++i)
        if (name == kClassNames[i]) return i;
    throw DataError("unknown class label \"" + name + "\" (expected IPMN, MCN, SCN or SPT)");
}

void AugmentParams::validate() const {
    if (rotation_min_deg > rotation_max_deg) throw ConfigError("augment: rotation range ill-ordered");
    if (zoom_min > zoom_max || zoom_min <= 0.0) throw ConfigError("augment: zoom range ill-ordered");
    if (vertical_flip_prob < 0.0 || vertical_flip_prob > 1.0)
        throw ConfigError("augment: flip probability outside [0,1]");
}

// --- slice extraction -------------------------------------------------------

std::vector<SliceSample> extract_slices(const Volume& volume, int side, double threshold) {
    if (volume.intensities.size() != volume.voxels() || volume.mask.size() != volume.voxels())
        throw DataError("volume " + volume.patient_id + ": intensities/mask size mismatch");
    if (side < 1) throw ConfigError("extract_slices: side must be positive");
    if (volume.label < 0 || volume.label >= kNumClasses)
        throw DataError("volume " + volume.patient_id + ": label out of range");

    // Per-volume min-max normalization; constant volumes map to all zeros.
    float lo = volume.intensities.empty() ? 0.f : volume.intensities[0];
    float hi = lo;
    for (float v : volume.intensities) {
        lo = std::min(lo, v);
        hi = std::max(hi, v);
    }
    const float scale = hi > lo ? 1.0f / (hi - lo) : 0.0f;

    std::vector<SliceSample> out;
    const double window_px = static_cast<double>(side) * side;
    for (int d = 0; d < volume.depth; ++d) {
        long long count = 0, sum_y = 0, sum_x = 0;
        for (int y = 0; y < volume.height; ++y)
            for (int x = 0; x < volume.width; ++x)
                if (volume.mask_at(d, y, x)) {
                    ++count;
                    sum_y += y;
                    sum_x += x;
                }
        if (count == 0) continue;

        const int cy = static_cast<int>(std::llround(static_cast<double>(sum_y) / count));
        const int cx = static_cast<int>(std::llround(static_cast<double>(sum_x) / count));
        const int top = cy - side / 2;
        const int left = cx - side / 2;

        SliceSample s;
        s.side = side;
        s.label = volume.label;
        s.patient_id = volume.patient_id;
        s.image.assign(static_cast<std::size_t>(side) * side, 0.0f);
        long long in_window = 0;
        for (int y = 0; y < side; ++y) {
            const int sy = top + y;
            if (sy < 0 || sy >= volume.height) continue;
            for (int x = 0; x < side; ++x) {
                const int sx = left + x;
                if (sx < 0 || sx >= volume.width) continue;
                s.px(y, x) = (volume.at(d, sy, sx) - lo) * scale;
                if (volume.mask_at(d, sy, sx)) ++in_window;
            }
        }
        s.overlap_ratio = static_cast<double>(in_window) / window_px;
        if (s.overlap_ratio >= threshold) out.push_back(std::move(s));
    }
    return out;
}

// --- augmentation -----------------------------------------------------------

namespace {

// Inverse-mapped bilinear sample with zero fill outside the image.
float sample_bilinear(const std::vector<float>& img, int side, double y, double x) {
    const int y0 = static_cast<int>(std::floor(y));
    const int x0 = static_cast<int>(std::floor(x));
    const double fy = y - y0, fx = x - x0;
    auto px = [&](int yy, int xx) -> double {
        if (yy < 0 || yy >= side || xx < 0 || xx >= side) return 0.0;
        return img[static_cast<std::size_t>(yy) * side + xx];
    };
    return static_cast<float>((1 - fy) * ((1 - fx) * px(y0, x0) + fx * px(y0, x0 + 1)) +
                              fy * ((1 - fx) * px(y0 + 1, x0) + fx * px(y0 + 1, x0 + 1)));
}

}  // namespace

std::vector<float> rotate_bilinear(const std::vector<float>& img, int side, double angle_deg) {
    const double a = angle_deg * 3.14159265358979323846 / 180.0;
    const double c = std::cos(a), s = std::sin(a);
    const double mid = (side - 1) / 2.0;
    std::vector<float> out(img.size());
    for (int y = 0; y < side; ++y)
        for (int x = 0; x < side; ++x) {
            const double dy = y - mid, dx = x - mid;
            // inverse rotation of the output coordinate
            const double sy = mid + c * dy - s * dx;
            const double sx = mid + s * dy + c * dx;
            out[static_cast<std::size_t>(y) * side + x] = sample_bilinear(img, side, sy, sx);
        }
    return out;
}

std::vector<float> zoom_bilinear(const std::vector<float>& img, int side, double factor) {
    if (factor <= 0.0) throw ConfigError("zoom: factor must be positive");
    const double mid = (side - 1) / 2.0;
    std::vector<float> out(img.size());
    for (int y = 0; y < side; ++y)
        for (int x = 0; x < side; ++x) {
            const double sy = mid + (y - mid) / factor;
            const double sx = mid + (x - mid) / factor;
            out[static_cast<std::size_t>(y) * side + x] = sample_bilinear(img, side, sy, sx);
        }
    return out;
}

std::vector<float> vflip(const std::vector<float>& img, int side) {
    std::vector<float> out(img.size());
    for (int y = 0; y < side; ++y)
        std::copy_n(img.begin() + static_cast<std::size_t>(side - 1 - y) * side, side,
                    out.begin() + static_cast<std::size_t>(y) * side);
    return out;
}

SliceSample augment(const SliceSample& sample, const AugmentParams& params, Rng& rng) {
    params.validate();
    const double angle = rng.uniform(params.rotation_min_deg, params.rotation_max_deg);
    const double zoom = rng.uniform(params.zoom_min, params.zoom_max);
    const bool flip = rng.bernoulli(params.vertical_flip_prob);

    SliceSample out = sample;
    out.image = rotate_bilinear(out.image, out.side, angle);
    out.image = zoom_bilinear(out.image, out.side, zoom);
    if (flip) out.image = vflip(out.image, out.side);
    return out;
}

// --- RVOL -------------------------------------------------------------------

namespace {
constexpr char kRvolMagic[4] = {'R', 'V', 'O', 'L'};
}

void write_volume(const Volume& volume, const std::string& path) {
    if (volume.intensities.size() != volume.voxels() || volume.mask.size() != volume.voxels())
        throw DataError("write_volume: intensities/mask size mismatch for " + volume.patient_id);
    std::ofstream os(path, std::ios::binary);
    if (!os) throw DataError("cannot open for writing: " + path);
    os.write(kRvolMagic, 4);
    os.put(1);  // version
    const std::uint32_t dims[3] = {static_cast<std::uint32_t>(volume.depth),
                                   static_cast<std::uint32_t>(volume.height),
                                   static_cast<std::uint32_t>(volume.width)};
    os.write(reinterpret_cast<const char*>(dims), sizeof(dims));
    os.write(reinterpret_cast<const char*>(volume.intensities.data()),
             static_cast<std::streamsize>(volume.intensities.size() * sizeof(float)));
    os.write(reinterpret_cast<const char*>(volume.mask.data()),
             static_cast<std::streamsize>(volume.mask.size()));
    if (!os) throw DataError("write failed: " + path);
}

Volume read_volume(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw DataError("cannot open: " + path);
    char magic[4];
    if (!is.read(magic, 4) || std::memcmp(magic, kRvolMagic, 4) != 0)
        throw ParseError(path + ": bad magic at byte 0, expected \"RVOL\"");
    const int version = is.get();
    if (version != 1) throw ParseError(path + ": unsupported RVOL version " + std::to_string(version));
    std::uint32_t dims[3];
    if (!is.read(reinterpret_cast<char*>(dims), sizeof(dims)))
        throw ParseError(path + ": truncated at byte " + std::to_string(is.tellg()));
    Volume v;
    v.depth = static_cast<int>(dims[0]);
    v.height = static_cast<int>(dims[1]);
    v.width = static_cast<int>(dims[2]);
    v.intensities.resize(v.voxels());
    v.mask.resize(v.voxels());
    if (!is.read(reinterpret_cast<char*>(v.intensities.data()),
                 static_cast<std::streamsize>(v.intensities.size() * sizeof(float))))
        throw ParseError(path + ": truncated intensities at byte " + std::to_string(is.tellg()));
    if (!is.read(reinterpret_cast<char*>(v.mask.data()),
                 static_cast<std::streamsize>(v.mask.size())))
        throw ParseError(path + ": truncated mask at byte " + std::to_string(is.tellg()));
    for (auto m : v.mask)
        if (m > 1) throw ParseError(path + ": mask value " + std::to_string(m) + " not in {0,1}");
    return v;
}

// --- manifest ---------------------------------------------------------------

std::vector<ManifestRow> read_manifest(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw DataError("cannot open manifest: " + path);
    std::string line;
    if (!std::getline(is, line)) throw ParseError(path + ": empty manifest");
    if (line != "patient_id,label,path")
        throw ParseError(path + ": bad header, expected \"patient_id,label,path\"");
    std::vector<ManifestRow> rows;
    int lineno = 1;
    while (std::getline(is, line)) {
        ++lineno;
        if (line.empty()) continue;
        std::istringstream ls(line);
        std::string id, label, file;
        if (!std::getline(ls, id, ',') || !std::getline(ls, label, ',') || !std::getline(ls, file))
            throw ParseError(path + ": row " + std::to_string(lineno) + " malformed: " + line);
        try {
            rows.push_back({id, class_index_from_name(label), file});
        } catch (const DataError& e) {
            throw DataError(path + ": row " + std::to_string(lineno) + ": " + e.what());
        }
    }
    return rows;
}

void write_manifest(const std::vector<ManifestRow>& rows, const std::string& path) {
    std::ofstream os(path);
    if (!os) throw DataError("cannot open manifest for writing: " + path);
    os << "patient_id,label,path\n";
    for (const auto& r : rows)
        os << r.patient_id << "," << kClassNames[r.label] << "," << r.path << "\n";
    if (!os) throw DataError("manifest write failed: " + path);
}

std::vector<Volume> load_dataset(const std::string& manifest_path) {
    std::vector<Volume> out;
    for (const auto& row : read_manifest(manifest_path)) {
        Volume v = read_volume(row.path);
        v.patient_id = row.patient_id;
        v.label = row.label;
        out.push_back(std::move(v));
    }
    return out;
}

}  // namespace dcys

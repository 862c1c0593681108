#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "dcys/rng.hpp"

namespace dcys {

inline constexpr int kNumClasses = 4;
inline const char* const kClassNames[kNumClasses] = {"IPMN", "MCN", "SCN", "SPT"};

int class_index_from_name(const std::string& name);  // throws DataError

// Labeled 3D intensity volume with a binary pancreas mask.
struct Volume {
    std::string patient_id;
    int label = 0;  // 0..3
    int depth = 0, height = 0, width = 0;
    std::vector<float> intensities;  // D*H*W row-major
    std::vector<std::uint8_t> mask;  // same layout, values in {0,1}

    std::size_t voxels() const {
        return static_cast<std::size_t>(depth) * height * width;
    }
    float& at(int d, int h, int w) {
        return intensities[(static_cast<std::size_t>(d) * height + h) * width + w];
    }
    float at(int d, int h, int w) const {
        return intensities[(static_cast<std::size_t>(d) * height + h) * width + w];
    }
    std::uint8_t mask_at(int d, int h, int w) const {
        return mask[(static_cast<std::size_t>(d) * height + h) * width + w];
    }
};

// One square 2D training/eval image cut from a volume.
struct SliceSample {
    std::vector<float> image;  // side*side, row-major
    int side = 0;
    int label = 0;
    std::string patient_id;
    double overlap_ratio = 0.0;

    float& px(int y, int x) { return image[static_cast<std::size_t>(y) * side + x]; }
    float px(int y, int x) const { return image[static_cast<std::size_t>(y) * side + x]; }
};

struct AugmentParams {
    double rotation_min_deg = -25.0, rotation_max_deg = 25.0;
    double zoom_min = 0.9, zoom_max = 1.2;
    double vertical_flip_prob = 0.5;

    void validate() const;
};

// --- slice extraction -------------------------------------------------------

// Axial slices, windowed to side x side around the per-slice mask centroid,
// intensity min-max normalized per volume. Slices whose pancreas coverage of
// the window is below `threshold` are dropped. Empty mask yields an empty
// list (callers may warn). Deterministic, no RNG involved.
std::vector<SliceSample> extract_slices(const Volume& volume, int side = 144,
                                        double threshold = 0.10);

// --- augmentation -----------------------------------------------------------

std::vector<float> rotate_bilinear(const std::vector<float>& img, int side, double angle_deg);
std::vector<float> zoom_bilinear(const std::vector<float>& img, int side, double factor);
std::vector<float> vflip(const std::vector<float>& img, int side);

// rotate -> zoom -> flip, parameters drawn from `rng`. Label and patient id
// pass through untouched.
SliceSample augment(const SliceSample& sample, const AugmentParams& params, Rng& rng);

// --- RVOL file format and manifest ------------------------------------------

// RVOL: "RVOL" | u8 version=1 | u32le D,H,W | f32le intensities | u8 mask.
void write_volume(const Volume& volume, const std::string& path);
Volume read_volume(const std::string& path);  // patient_id/label left for the manifest

struct ManifestRow {
    std::string patient_id;
    int label;
    std::string path;
};

// CSV with header "patient_id,label,path"; labels IPMN/MCN/SCN/SPT.
std::vector<ManifestRow> read_manifest(const std::string& path);
void write_manifest(const std::vector<ManifestRow>& rows, const std::string& path);

// Loads every volume a manifest references.
std::vector<Volume> load_dataset(const std::string& manifest_path);

}  // namespace dcys

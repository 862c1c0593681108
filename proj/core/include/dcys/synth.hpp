#pragma once

#include <cstdint>
#include <vector>

#include "dcys/data.hpp"

namespace dcys {

// Synthetic phantom dataset standing in for a clinical cohort. Every volume
// carries an ellipsoidal pancreas mask and a class-dependent intensity
// signature:
//   class 0 (IPMN): single large smooth blob
//   class 1 (MCN):  medium blob with a thick bright rim
//   class 2 (SCN):  many small high-frequency speckles
//   class 3 (SPT):  small solid high-intensity nodule deforming the mask edge
struct SynthConfig {
    int n_per_class = 15;
    int depth = 24, height = 64, width = 64;
    std::uint64_t seed = 1;

    void validate() const;  // throws ConfigError
};

std::vector<Volume> synth_generate(const SynthConfig& config);

}  // namespace dcys

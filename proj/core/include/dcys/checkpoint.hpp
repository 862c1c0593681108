#pragma once

#include <string>

#include "dcys/model.hpp"

namespace dcys {

// Checkpoint file layout (all integers little-endian):
//   "DCYS" | u8 version | u32 header length | header bytes | f32 blob
// The header is UTF-8 "key=value\n" lines carrying the architecture and the
// spec needed to rebuild the graph. The blob holds conv/linear weights and BN
// gamma/beta/running_mean/running_var in topological node order.
// Save then load reproduces the parameters bit-exactly.

void save_checkpoint(const LayerGraph& graph, const DenseNetSpec& spec, const std::string& path);

LayerGraph load_checkpoint(const std::string& path, DenseNetSpec* spec_out = nullptr);

}  // namespace dcys

#include "dcys/checkpoint.hpp"

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <map>
#include <sstream>

#include "dcys/errors.hpp"

static_assert(std::endian::native == std::endian::little,
              "checkpoint/RVOL formats assume a little-endian host");

namespace dcys {

namespace {

constexpr char kMagic[4] = {'D', 'C', 'Y', 'S'};
constexpr std::uint8_t kVersion = 1;

void put_u32(std::ostream& os, std::uint32_t v) {
    os.write(reinterpret_cast<const char*>(&v), 4);
}

std::uint32_t get_u32(std::istream& is, const std::string& path) {
    std::uint32_t v = 0;
    if (!is.read(reinterpret_cast<char*>(&v), 4))
        throw ParseError(path + ": truncated at byte " + std::to_string(is.tellg()));
    return v;
}

std::string spec_header(const LayerGraph& graph, const DenseNetSpec& spec) {
    std::ostringstream os;
    os << "arch=" << graph.arch << "\n";
    os << "num_blocks=" << spec.num_blocks << "\n";
    os << "layers_per_block=" << spec.layers_per_block << "\n";
    os << "growth_rate=" << spec.growth_rate << "\n";
    os << "initial_channels=" << spec.initial_channels << "\n";
    os << "bottleneck_factor=" << spec.bottleneck_factor << "\n";
    os << "input_size=" << spec.input_size << "\n";
    os << "num_classes=" << spec.num_classes << "\n";
    os << "transition_compression=" << spec.transition_compression << "\n";
    os << "transition_max_pool=" << (spec.transition_max_pool ? 1 : 0) << "\n";
    return os.str();
}

void write_floats(std::ostream& os, const std::vector<float>& v) {
    os.write(reinterpret_cast<const char*>(v.data()),
             static_cast<std::streamsize>(v.size() * sizeof(float)));
}

void read_floats(std::istream& is, std::vector<float>& v, const std::string& path) {
    if (!is.read(reinterpret_cast<char*>(v.data()),
                 static_cast<std::streamsize>(v.size() * sizeof(float))))
        throw ParseError(path + ": truncated parameter blob at byte " + std::to_string(is.tellg()));
}

}  // namespace

void save_checkpoint(const LayerGraph& graph, const DenseNetSpec& spec, const std::string& path) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw DataError("cannot open checkpoint for writing: " + path);
    os.write(kMagic, 4);
    os.put(static_cast<char>(kVersion));
    const std::string header = spec_header(graph, spec);
    put_u32(os, static_cast<std::uint32_t>(header.size()));
    os.write(header.data(), static_cast<std::streamsize>(header.size()));
    for (const auto& node : graph.nodes) {
        if (!node.weight.data.empty()) write_floats(os, node.weight.data);
        if (node.kind == OpKind::BatchNorm) {
            write_floats(os, node.bn.gamma);
            write_floats(os, node.bn.beta);
            write_floats(os, node.bn.running_mean);
            write_floats(os, node.bn.running_var);
        }
    }
    if (!os) throw DataError("checkpoint write failed: " + path);
}

LayerGraph load_checkpoint(const std::string& path, DenseNetSpec* spec_out) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw DataError("cannot open checkpoint: " + path);
    char magic[4];
    if (!is.read(magic, 4) || std::memcmp(magic, kMagic, 4) != 0)
        throw ParseError(path + ": bad magic at byte 0, expected \"DCYS\"");
    const int version = is.get();
    if (version != kVersion)
        throw ParseError(path + ": unsupported checkpoint version " + std::to_string(version));
    const std::uint32_t hlen = get_u32(is, path);
    std::string header(hlen, '\0');
    if (!is.read(header.data(), hlen))
        throw ParseError(path + ": truncated header at byte " + std::to_string(is.tellg()));

    std::map<std::string, std::string> kv;
    std::istringstream hs(header);
    std::string line;
    while (std::getline(hs, line)) {
        const auto eq = line.find('=');
        if (eq == std::string::npos) throw ParseError(path + ": malformed header line: " + line);
        kv[line.substr(0, eq)] = line.substr(eq + 1);
    }
    auto want = [&](const char* key) {
        auto it = kv.find(key);
        if (it == kv.end()) throw ParseError(path + ": header missing key " + key);
        return it->second;
    };

    DenseNetSpec spec;
    spec.num_blocks = std::stoi(want("num_blocks"));
    spec.layers_per_block = std::stoi(want("layers_per_block"));
    spec.growth_rate = std::stoi(want("growth_rate"));
    spec.initial_channels = std::stoi(want("initial_channels"));
    spec.bottleneck_factor = std::stoi(want("bottleneck_factor"));
    spec.input_size = std::stoi(want("input_size"));
    spec.num_classes = std::stoi(want("num_classes"));
    spec.transition_compression = std::stod(want("transition_compression"));
    spec.transition_max_pool = std::stoi(want("transition_max_pool")) != 0;
    const std::string arch = want("arch");

    LayerGraph graph = arch == "densenet"       ? build_densenet(spec)
                       : arch == "cnn-baseline" ? build_baseline_cnn(spec)
                                                : throw ParseError(path + ": unknown arch " + arch);
    for (auto& node : graph.nodes) {
        if (!node.weight.data.empty()) read_floats(is, node.weight.data, path);
        if (node.kind == OpKind::BatchNorm) {
            read_floats(is, node.bn.gamma, path);
            read_floats(is, node.bn.beta, path);
            read_floats(is, node.bn.running_mean, path);
            read_floats(is, node.bn.running_var, path);
        }
    }
    if (spec_out) *spec_out = spec;
    return graph;
}

}  // namespace dcys

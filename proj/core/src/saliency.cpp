#include "dcys/saliency.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>

#include "dcys/errors.hpp"

namespace dcys {

void write_map_pgm(const SaliencyMap& map, const std::string& path) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw DataError("cannot open PGM for writing: " + path);
    os << "P5\n" << map.side << " " << map.side << "\n255\n";
    for (double v : map.values) {
        const int q = static_cast<int>(std::floor(255.0 * v + 0.5));  // round half up
        os.put(static_cast<char>(std::min(255, std::max(0, q))));
    }
    if (!os) throw DataError("PGM write failed: " + path);
}

}  // namespace dcys

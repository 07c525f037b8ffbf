#include "shellforge/grid.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <stdexcept>

#include <json.hpp>

namespace shellforge {

void GridSpec::validate() const {
    static const int allowed[] = {16, 32, 64, 128, 256};
    bool ok = std::find(std::begin(allowed), std::end(allowed), resolution) !=
              std::end(allowed);
    if (!ok)
        throw std::invalid_argument("grid resolution must be one of 16/32/64/128/256, got " +
                                    std::to_string(resolution));
    if (!(extent > 0.0)) throw std::invalid_argument("grid extent must be > 0");
}

double DensityVolume::total_mass() const {
    double h = grid.voxel_size();
    double sum = 0.0;
    for (float v : values) sum += v;
    return sum * h * h * h;
}

float DensityVolume::max_value() const {
    float m = 0.0f;
    for (float v : values) m = std::max(m, v);
    return m;
}

void save_volume(const DensityVolume& v, const std::string& path) {
    std::ofstream raw(path, std::ios::binary);
    if (!raw) throw std::runtime_error("cannot write volume: " + path);
    raw.write(reinterpret_cast<const char*>(v.values.data()),
              static_cast<std::streamsize>(v.values.size() * sizeof(float)));

    nlohmann::json side;
    side["resolution"] = v.grid.resolution;
    side["extent"] = v.grid.extent;
    side["origin"] = {v.grid.origin[0], v.grid.origin[1], v.grid.origin[2]};
    std::ofstream js(path + ".json");
    js << side.dump(2) << "\n";
}

DensityVolume load_volume(const std::string& path) {
    std::ifstream js(path + ".json");
    if (!js) throw std::runtime_error("missing volume sidecar: " + path + ".json");
    nlohmann::json side = nlohmann::json::parse(js);

    GridSpec g;
    g.resolution = side.at("resolution").get<int>();
    g.extent = side.at("extent").get<double>();
    auto o = side.at("origin");
    g.origin = {o.at(0).get<double>(), o.at(1).get<double>(), o.at(2).get<double>()};
    g.validate();

    DensityVolume v(g);
    std::ifstream raw(path, std::ios::binary);
    if (!raw) throw std::runtime_error("cannot read volume: " + path);
    raw.read(reinterpret_cast<char*>(v.values.data()),
             static_cast<std::streamsize>(v.values.size() * sizeof(float)));
    if (static_cast<std::size_t>(raw.gcount()) != v.values.size() * sizeof(float))
        throw std::runtime_error("volume payload truncated: " + path);
    return v;
}

}  // namespace shellforge

#include "shellforge/image.hpp"

#include <algorithm>
#include <cstdint>
#include <fstream>
#include <stdexcept>

#include <json.hpp>

namespace shellforge {

void save_pgm16(const Image& img, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write PGM: " + path);
    out << "P5\n" << img.cols << " " << img.rows << "\n65535\n";
    float mx = 0.0f;
    for (float x : img.v) mx = std::max(mx, x);
    double scale = mx > 0.0f ? 65535.0 / mx : 0.0;
    for (float x : img.v) {
        auto s = static_cast<std::uint16_t>(
            std::clamp(x * scale, 0.0, 65535.0) + 0.5);
        // PGM stores the most significant byte first.
        char bytes[2] = {static_cast<char>(s >> 8), static_cast<char>(s & 0xff)};
        out.write(bytes, 2);
    }
}

void save_image_raw(const Image& img, const std::string& path) {
    std::ofstream raw(path, std::ios::binary);
    if (!raw) throw std::runtime_error("cannot write image: " + path);
    raw.write(reinterpret_cast<const char*>(img.v.data()),
              static_cast<std::streamsize>(img.v.size() * sizeof(float)));
    nlohmann::json side;
    side["rows"] = img.rows;
    side["cols"] = img.cols;
    std::ofstream js(path + ".json");
    js << side.dump(2) << "\n";
}

Image load_image_raw(const std::string& path) {
    std::ifstream js(path + ".json");
    if (!js) throw std::runtime_error("missing image sidecar: " + path + ".json");
    nlohmann::json side = nlohmann::json::parse(js);
    Image img(side.at("rows").get<int>(), side.at("cols").get<int>());
    std::ifstream raw(path, std::ios::binary);
    if (!raw) throw std::runtime_error("cannot read image: " + path);
    raw.read(reinterpret_cast<char*>(img.v.data()),
             static_cast<std::streamsize>(img.v.size() * sizeof(float)));
    if (static_cast<std::size_t>(raw.gcount()) != img.v.size() * sizeof(float))
        throw std::runtime_error("image payload truncated: " + path);
    return img;
}

}  // namespace shellforge

#pragma once

#include <string>
#include <vector>

namespace shellforge {

// Row-major float image.
struct Image {
    int rows = 0;
    int cols = 0;
    std::vector<float> v;

    Image() = default;
    Image(int r, int c, float fill = 0.0f)
        : rows(r), cols(c), v(static_cast<std::size_t>(r) * c, fill) {}

    float at(int r, int c) const { return v[static_cast<std::size_t>(r) * cols + c]; }
    float& at(int r, int c) { return v[static_cast<std::size_t>(r) * cols + c]; }
    std::size_t size() const { return v.size(); }
};

// 16-bit binary PGM, linearly scaled so the image maximum maps to 65535.
void save_pgm16(const Image& img, const std::string& path);

// Raw little-endian float32 payload, row-major. Sidecar handling lives with
// the owning type (Radiograph adds geometry, plain images a {rows, cols} stub).
void save_image_raw(const Image& img, const std::string& path);
Image load_image_raw(const std::string& path);

}  // namespace shellforge

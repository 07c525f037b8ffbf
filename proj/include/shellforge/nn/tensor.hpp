#pragma once

#include <cstddef>
#include <numeric>
#include <stdexcept>
#include <string>
#include <vector>

namespace shellforge::nn {

// Dense n-dimensional array. Scalar type is float for training speed or
// double for finite-difference verification.
template <class T>
struct Tensor {
    std::vector<int> shape;
    std::vector<T> v;

    Tensor() = default;
    explicit Tensor(std::vector<int> s) : shape(std::move(s)) {
        v.assign(count(shape), T{0});
    }
    Tensor(std::vector<int> s, std::vector<T> data)
        : shape(std::move(s)), v(std::move(data)) {
        if (v.size() != count(shape))
            throw std::invalid_argument("tensor data does not match shape");
    }

    static std::size_t count(const std::vector<int>& s) {
        std::size_t n = 1;
        for (int d : s) {
            if (d <= 0) throw std::invalid_argument("tensor dims must be positive");
            n *= static_cast<std::size_t>(d);
        }
        return n;
    }

    std::size_t numel() const { return v.size(); }

    bool same_shape(const Tensor& o) const { return shape == o.shape; }

    static std::string shape_str(const std::vector<int>& s) {
        std::string out = "[";
        for (std::size_t i = 0; i < s.size(); ++i)
            out += (i ? "x" : "") + std::to_string(s[i]);
        return out + "]";
    }
};

// Non-overlapping block average of a cubic volume tensor [R, R, R].
template <class T>
Tensor<T> downsample(const Tensor<T>& volume, int factor) {
    if (volume.shape.size() != 3 || volume.shape[0] != volume.shape[1] ||
        volume.shape[1] != volume.shape[2])
        throw std::invalid_argument("downsample expects a cubic [R,R,R] tensor");
    const int r = volume.shape[0];
    if (factor < 1 || r % factor != 0)
        throw std::invalid_argument("downsample factor must divide the resolution");
    if (factor == 1) return volume;

    const int out_r = r / factor;
    Tensor<T> out({out_r, out_r, out_r});
    const T norm = T{1} / static_cast<T>(factor * factor * factor);
    for (int z = 0; z < out_r; ++z)
        for (int y = 0; y < out_r; ++y)
            for (int x = 0; x < out_r; ++x) {
                T acc{0};
                for (int dz = 0; dz < factor; ++dz)
                    for (int dy = 0; dy < factor; ++dy)
                        for (int dx = 0; dx < factor; ++dx) {
                            std::size_t idx =
                                (static_cast<std::size_t>(z * factor + dz) * r +
                                 (y * factor + dy)) *
                                    r +
                                (x * factor + dx);
                            acc += volume.v[idx];
                        }
                out.v[(static_cast<std::size_t>(z) * out_r + y) * out_r + x] =
                    acc * norm;
            }
    return out;
}

}  // namespace shellforge::nn

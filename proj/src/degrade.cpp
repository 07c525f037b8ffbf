#include "shellforge/degrade.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include <json.hpp>

#include "shellforge/parallel.hpp"
#include "shellforge/rng.hpp"

namespace shellforge {

namespace {

// Edge-inclusive mirror: ... 1 0 | 0 1 2 ... n-1 | n-1 n-2 ...
int reflect(int i, int n) {
    while (i < 0 || i >= n) {
        if (i < 0) i = -1 - i;
        if (i >= n) i = 2 * n - 1 - i;
    }
    return i;
}

std::vector<double> gaussian_kernel(double sigma) {
    int radius = std::max(1, static_cast<int>(std::ceil(4.0 * sigma)));
    std::vector<double> k(2 * radius + 1);
    double sum = 0.0;
    for (int i = -radius; i <= radius; ++i) {
        double w = std::exp(-0.5 * (i / sigma) * (i / sigma));
        k[i + radius] = w;
        sum += w;
    }
    for (double& w : k) w /= sum;
    return k;
}

}  // namespace

void DegradeParams::validate() const {
    if (blur_sigma < 0.0) throw std::invalid_argument("blur_sigma must be >= 0");
    if (photon_scale < 0.0) throw std::invalid_argument("photon_scale must be >= 0");
    if (gaussian_sigma < 0.0)
        throw std::invalid_argument("gaussian_sigma must be >= 0");
    if (quantization_levels != 0 && quantization_levels < 2)
        throw std::invalid_argument("quantization_levels must be >= 2 or 0");
}

double DegradeParams::flat_field_gain(double xn, double yn) const {
    if (flat_field_coeffs.empty()) return 1.0;
    double gain = 0.0;
    double xp = 1.0;
    for (const auto& row : flat_field_coeffs) {
        double yp = 1.0;
        for (double c : row) {
            gain += c * xp * yp;
            yp *= yn;
        }
        xp *= xn;
    }
    return gain;
}

Image apply_blur(const Image& image, double sigma) {
    if (sigma < 0.0) throw std::invalid_argument("blur sigma must be >= 0");
    if (sigma == 0.0) return image;
    const auto k = gaussian_kernel(sigma);
    const int radius = static_cast<int>(k.size() / 2);

    Image tmp(image.rows, image.cols);
    Image out(image.rows, image.cols);
    // Horizontal pass.
    for (int r = 0; r < image.rows; ++r)
        for (int c = 0; c < image.cols; ++c) {
            double acc = 0.0;
            for (int j = -radius; j <= radius; ++j)
                acc += k[j + radius] * image.at(r, reflect(c + j, image.cols));
            tmp.at(r, c) = static_cast<float>(acc);
        }
    // Vertical pass.
    for (int r = 0; r < image.rows; ++r)
        for (int c = 0; c < image.cols; ++c) {
            double acc = 0.0;
            for (int j = -radius; j <= radius; ++j)
                acc += k[j + radius] * tmp.at(reflect(r + j, image.rows), c);
            out.at(r, c) = static_cast<float>(acc);
        }
    return out;
}

Image apply_noise(const Image& image, const DegradeParams& params) {
    params.validate();
    for (float p : image.v)
        if (p < 0.0f)
            throw std::invalid_argument("apply_noise expects non-negative pixels");

    Image out(image.rows, image.cols);
    parallel_for(image.rows, [&](int r) {
        for (int c = 0; c < image.cols; ++c) {
            std::uint64_t pixel_index =
                static_cast<std::uint64_t>(r) * image.cols + c;
            RngStream rng(params.seed, pixel_index);
            double value = image.at(r, c);
            if (params.photon_scale > 0.0)
                value = static_cast<double>(
                            rng.poisson(params.photon_scale * value)) /
                        params.photon_scale;
            if (params.gaussian_sigma > 0.0)
                value += params.gaussian_sigma * rng.normal();
            if (params.quantization_levels >= 2) {
                double steps = params.quantization_levels - 1;
                value = std::clamp(std::round(value * steps) / steps, 0.0, 1.0);
            }
            double xn = image.cols > 1 ? 2.0 * c / (image.cols - 1) - 1.0 : 0.0;
            double yn = image.rows > 1 ? 2.0 * r / (image.rows - 1) - 1.0 : 0.0;
            out.at(r, c) = static_cast<float>(params.flat_field_gain(xn, yn) * value);
        }
    });
    return out;
}

Image degrade(const Image& image, const DegradeParams& params) {
    return apply_noise(apply_blur(image, params.blur_sigma), params);
}

Image pseudo_flat_field(const Image& image, double kernel_sigma) {
    if (!(kernel_sigma > 0.0))
        throw std::invalid_argument("kernel_sigma must be > 0");
    for (float p : image.v)
        if (!(p > 0.0f))
            throw std::invalid_argument(
                "pseudo_flat_field expects strictly positive pixels");

    Image blurred = apply_blur(image, kernel_sigma);
    Image out(image.rows, image.cols);
    float lo = std::numeric_limits<float>::max();
    float hi = std::numeric_limits<float>::lowest();
    for (std::size_t i = 0; i < out.v.size(); ++i) {
        out.v[i] = image.v[i] / blurred.v[i];
        lo = std::min(lo, out.v[i]);
        hi = std::max(hi, out.v[i]);
    }
    if (hi > lo)
        for (float& x : out.v) x = (x - lo) / (hi - lo);
    return out;
}

std::string degrade_params_to_json(const DegradeParams& p) {
    nlohmann::json j;
    j["blur_sigma"] = p.blur_sigma;
    j["photon_scale"] = p.photon_scale;
    j["gaussian_sigma"] = p.gaussian_sigma;
    j["flat_field_coeffs"] = p.flat_field_coeffs;
    j["quantization_levels"] = p.quantization_levels;
    j["seed"] = p.seed;
    return j.dump(2);
}

DegradeParams degrade_params_from_json(const std::string& text) {
    nlohmann::json j = nlohmann::json::parse(text);
    DegradeParams p;
    p.blur_sigma = j.value("blur_sigma", 0.0);
    p.photon_scale = j.value("photon_scale", 0.0);
    p.gaussian_sigma = j.value("gaussian_sigma", 0.0);
    if (j.contains("flat_field_coeffs"))
        p.flat_field_coeffs =
            j["flat_field_coeffs"].get<std::vector<std::vector<double>>>();
    p.quantization_levels = j.value("quantization_levels", 0);
    p.seed = j.value("seed", std::uint64_t{0});
    p.validate();
    return p;
}

}  // namespace shellforge

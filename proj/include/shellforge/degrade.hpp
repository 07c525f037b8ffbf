#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "shellforge/image.hpp"

namespace shellforge {

// Parametric detector degradation: optics blur, Poisson-Gaussian counting
// noise, low-order flat-field gain, ADC quantization. Streams are derived
// per pixel from (seed, pixel index) with SplitMix64, so serial and parallel
// application agree bit-exactly.
struct DegradeParams {
    double blur_sigma = 0.0;          // pixels
    double photon_scale = 0.0;        // expected counts at T=1; 0 disables Poisson
    double gaussian_sigma = 0.0;      // counts (in transmission units)
    // Gain g(x, y) = sum c[i][j] * x^i * y^j over normalized coords in [-1, 1];
    // empty list means unit gain.
    std::vector<std::vector<double>> flat_field_coeffs;
    int quantization_levels = 0;      // >= 2, or 0 to disable
    std::uint64_t seed = 0;

    void validate() const;

    double flat_field_gain(double xn, double yn) const;
};

// Gaussian convolution with reflective boundaries; sigma = 0 is the identity.
Image apply_blur(const Image& image, double sigma);

// flat_field * quantize(Poisson(scale * pixel) / scale + N(0, gaussian_sigma)).
Image apply_noise(const Image& image, const DegradeParams& params);

// Blur then noise.
Image degrade(const Image& image, const DegradeParams& params);

// Divide by a heavy Gaussian blur of the image, then min-max rescale to [0,1].
// Throws if any pixel is non-positive or kernel_sigma <= 0.
Image pseudo_flat_field(const Image& image, double kernel_sigma);

std::string degrade_params_to_json(const DegradeParams& p);
DegradeParams degrade_params_from_json(const std::string& text);

}  // namespace shellforge

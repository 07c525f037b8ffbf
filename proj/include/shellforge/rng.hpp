// Counter-based random number generation. Every stream is derived from a
// (seed, index) pair via SplitMix64, so parallel and serial consumers of the
// same indices produce identical draws.
#pragma once

#include <cmath>
#include <cstdint>

namespace shellforge {

// SplitMix64 step (Steele, Lea, Flood 2014 public-domain constants).
inline std::uint64_t splitmix64(std::uint64_t& state) {
    std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

// A small deterministic stream keyed by (seed, stream_index).
class RngStream {
  public:
    RngStream(std::uint64_t seed, std::uint64_t stream_index) {
        // Mix the stream index through one SplitMix64 round before xoring so
        // streams (s, 0) and (s+1, 0) do not collide with (s, 1).
        std::uint64_t k = stream_index;
        state_ = seed ^ splitmix64(k) ^ 0x6a09e667f3bcc909ULL;
    }

    std::uint64_t next_u64() { return splitmix64(state_); }

    // Uniform in [0, 1).
    double next_double() {
        return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
    }

    // Uniform in [lo, hi).
    double uniform(double lo, double hi) { return lo + (hi - lo) * next_double(); }

    // Standard normal via Box-Muller (one value per call, cached pair).
    double normal() {
        if (have_spare_) {
            have_spare_ = false;
            return spare_;
        }
        double u1 = 0.0;
        while (u1 <= 0.0) u1 = next_double();
        double u2 = next_double();
        double r = std::sqrt(-2.0 * std::log(u1));
        double a = 2.0 * M_PI * u2;
        spare_ = r * std::sin(a);
        have_spare_ = true;
        return r * std::cos(a);
    }

    // Poisson draw. Knuth multiplication below lambda=64, normal
    // approximation (rounded, clamped at 0) above, where the relative
    // error of the approximation is well under a percent.
    std::uint64_t poisson(double lambda) {
        if (lambda <= 0.0) return 0;
        if (lambda < 64.0) {
            double limit = std::exp(-lambda);
            double p = 1.0;
            std::uint64_t k = 0;
            do {
                ++k;
                p *= next_double();
            } while (p > limit);
            return k - 1;
        }
        double x = lambda + std::sqrt(lambda) * normal();
        return x < 0.0 ? 0 : static_cast<std::uint64_t>(std::llround(x));
    }

  private:
    std::uint64_t state_;
    bool have_spare_ = false;
    double spare_ = 0.0;
};

}  // namespace shellforge

#pragma once

#include <string>
#include <vector>

#include "shellforge/grid.hpp"

namespace shellforge {

struct SphericalPoint {
    double r;      // > 0
    double theta;  // [0, pi]
    double phi;    // [-pi, pi)
};

// Radius field fitted as r(theta, phi) = sum c_nm Y_nm. Coefficients are
// stored n-major: index(n, m) = n^2 + n + m.
struct SurfaceFit {
    Vec3 center{0.0, 0.0, 0.0};
    int degree = 0;
    std::vector<double> coefficients;  // (degree + 1)^2 values
    double residual_rms = 0.0;
    int point_count = 0;

    double coeff(int n, int m) const { return coefficients[n * n + n + m]; }
};

// Cartesian -> spherical about `center`. Throws if a point coincides with
// the center.
std::vector<SphericalPoint> to_spherical(const std::vector<Vec3>& points,
                                         const Vec3& center);

// Orthonormal real spherical harmonics, cosine convention for m > 0 and sine
// for m < 0, no Condon-Shortley phase. Y_00 = 1/sqrt(4 pi).
double real_sph_harm(int n, int m, double theta, double phi);

// Least squares via column-pivoted QR. Requires at least 2 (N+1)^2 points;
// throws on an underdetermined or rank-deficient system (reporting the
// effective rank).
SurfaceFit fit_spherical_harmonics(const std::vector<SphericalPoint>& points,
                                   int degree);

// Radius predicted by a fit at (theta, phi).
double fit_radius(const SurfaceFit& fit, double theta, double phi);

std::string surface_fit_to_json(const SurfaceFit& fit);
void save_surface_fits(const std::vector<SurfaceFit>& fits,
                       const std::string& path);

}  // namespace shellforge

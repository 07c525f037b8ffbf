#include "shellforge/feat/spherical.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <stdexcept>

#include <Eigen/Dense>
#include <json.hpp>

namespace shellforge {

namespace {

// Associated Legendre P_n^m (m >= 0) without the Condon-Shortley phase.
double assoc_legendre(int n, int m, double x) {
    double pmm = 1.0;
    if (m > 0) {
        double somx2 = std::sqrt((1.0 - x) * (1.0 + x));
        double fact = 1.0;
        for (int i = 0; i < m; ++i) {
            pmm *= fact * somx2;
            fact += 2.0;
        }
    }
    if (n == m) return pmm;
    double pmmp1 = x * (2.0 * m + 1.0) * pmm;
    if (n == m + 1) return pmmp1;
    double pnm = 0.0;
    for (int l = m + 2; l <= n; ++l) {
        pnm = ((2.0 * l - 1.0) * x * pmmp1 - (l + m - 1.0) * pmm) / (l - m);
        pmm = pmmp1;
        pmmp1 = pnm;
    }
    return pnm;
}

double sh_norm(int n, int m) {
    double ratio = 1.0;  // (n-m)! / (n+m)!
    for (int k = n - m + 1; k <= n + m; ++k) ratio /= k;
    return std::sqrt((2.0 * n + 1.0) / (4.0 * M_PI) * ratio);
}

}  // namespace

std::vector<SphericalPoint> to_spherical(const std::vector<Vec3>& points,
                                         const Vec3& center) {
    std::vector<SphericalPoint> out;
    out.reserve(points.size());
    for (const auto& p : points) {
        double x = p[0] - center[0];
        double y = p[1] - center[1];
        double z = p[2] - center[2];
        double r = std::sqrt(x * x + y * y + z * z);
        if (r == 0.0)
            throw std::invalid_argument("to_spherical: point coincides with center");
        double theta = std::acos(std::clamp(z / r, -1.0, 1.0));
        double phi = std::atan2(y, x);
        if (phi >= M_PI) phi = -M_PI;  // atan2 returns (-pi, pi]
        out.push_back({r, theta, phi});
    }
    return out;
}

double real_sph_harm(int n, int m, double theta, double phi) {
    if (n < 0 || std::abs(m) > n)
        throw std::invalid_argument("real_sph_harm needs 0 <= |m| <= n");
    int am = std::abs(m);
    double p = assoc_legendre(n, am, std::cos(theta));
    double base = sh_norm(n, am) * p;
    if (m == 0) return base;
    const double sqrt2 = std::sqrt(2.0);
    return m > 0 ? sqrt2 * base * std::cos(am * phi)
                 : sqrt2 * base * std::sin(am * phi);
}

SurfaceFit fit_spherical_harmonics(const std::vector<SphericalPoint>& points,
                                   int degree) {
    if (degree < 0) throw std::invalid_argument("degree must be >= 0");
    const int ncoef = (degree + 1) * (degree + 1);
    const int npts = static_cast<int>(points.size());
    if (npts < 2 * ncoef)
        throw std::invalid_argument(
            "underdetermined spherical-harmonic fit: " + std::to_string(npts) +
            " points for " + std::to_string(ncoef) +
            " coefficients (need at least 2x)");

    Eigen::MatrixXd design(npts, ncoef);
    Eigen::VectorXd radius(npts);
    for (int i = 0; i < npts; ++i) {
        radius(i) = points[i].r;
        for (int n = 0; n <= degree; ++n)
            for (int m = -n; m <= n; ++m)
                design(i, n * n + n + m) =
                    real_sph_harm(n, m, points[i].theta, points[i].phi);
    }

    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(design);
    if (qr.rank() < ncoef)
        throw std::runtime_error(
            "rank-deficient spherical-harmonic fit: effective rank " +
            std::to_string(qr.rank()) + " of " + std::to_string(ncoef));
    Eigen::VectorXd c = qr.solve(radius);

    SurfaceFit fit;
    fit.degree = degree;
    fit.coefficients.assign(c.data(), c.data() + ncoef);
    fit.point_count = npts;
    fit.residual_rms = std::sqrt((design * c - radius).squaredNorm() / npts);
    return fit;
}

double fit_radius(const SurfaceFit& fit, double theta, double phi) {
    double r = 0.0;
    for (int n = 0; n <= fit.degree; ++n)
        for (int m = -n; m <= n; ++m)
            r += fit.coeff(n, m) * real_sph_harm(n, m, theta, phi);
    return r;
}

std::string surface_fit_to_json(const SurfaceFit& fit) {
    nlohmann::json j;
    j["center"] = {fit.center[0], fit.center[1], fit.center[2]};
    j["degree"] = fit.degree;
    j["residual_rms"] = fit.residual_rms;
    j["point_count"] = fit.point_count;
    auto coeffs = nlohmann::json::array();
    for (int n = 0; n <= fit.degree; ++n)
        for (int m = -n; m <= n; ++m)
            coeffs.push_back({{"n", n}, {"m", m}, {"value", fit.coeff(n, m)}});
    j["coefficients"] = coeffs;
    return j.dump(2);
}

void save_surface_fits(const std::vector<SurfaceFit>& fits,
                       const std::string& path) {
    nlohmann::json arr = nlohmann::json::array();
    for (const auto& f : fits) arr.push_back(nlohmann::json::parse(surface_fit_to_json(f)));
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write surface fits: " + path);
    out << arr.dump(2) << "\n";
}

}  // namespace shellforge

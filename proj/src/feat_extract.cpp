#include "shellforge/feat/extract.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <stdexcept>

#include "shellforge/feat/marching_cubes.hpp"

namespace shellforge {

ExtractResult extract_features(const DensityVolume& volume,
                               const ExtractOptions& opts) {
    ExtractResult out;
    auto warn = opts.warn ? opts.warn : [](const std::string&) {};

    double iso = opts.iso > 0.0 ? opts.iso : 0.5 * volume.max_value();
    if (iso <= 0.0) return out;  // empty volume
    out.mesh = marching_cubes(volume, iso);
    if (out.mesh.empty()) return out;

    out.center = mesh_center(out.mesh);

    double eps = opts.eps > 0.0 ? opts.eps : 2.0 * volume.grid.voxel_size();
    out.labels = dbscan(out.mesh.vertices, eps, opts.min_pts);

    // Mean radius per cluster about the mesh center.
    const int nc = out.labels.cluster_count;
    std::vector<double> radius_sum(nc, 0.0);
    std::vector<int> count(nc, 0);
    for (std::size_t i = 0; i < out.mesh.vertices.size(); ++i) {
        int c = out.labels.label[i];
        if (c < 0) continue;
        const Vec3& p = out.mesh.vertices[i];
        double dx = p[0] - out.center[0], dy = p[1] - out.center[1],
               dz = p[2] - out.center[2];
        radius_sum[c] += std::sqrt(dx * dx + dy * dy + dz * dz);
        ++count[c];
    }
    std::vector<int> order(nc);
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](int a, int b) {
        return radius_sum[a] / std::max(count[a], 1) >
               radius_sum[b] / std::max(count[b], 1);
    });

    const int needed = 2 * (opts.degree + 1) * (opts.degree + 1);
    for (int c : order) {
        std::vector<Vec3> pts;
        pts.reserve(count[c]);
        for (std::size_t i = 0; i < out.mesh.vertices.size(); ++i)
            if (out.labels.label[i] == c) pts.push_back(out.mesh.vertices[i]);

        auto sph = to_spherical(pts, out.center);
        if (opts.theta_min > 0.0 || opts.theta_max < M_PI) {
            std::erase_if(sph, [&](const SphericalPoint& p) {
                return p.theta < opts.theta_min || p.theta > opts.theta_max;
            });
        }
        if (static_cast<int>(sph.size()) < needed) {
            warn("cluster " + std::to_string(c) + " has " +
                 std::to_string(sph.size()) + " usable vertices, need " +
                 std::to_string(needed) + " for degree " +
                 std::to_string(opts.degree) + "; skipping fit");
            continue;
        }
        SurfaceFit fit = fit_spherical_harmonics(sph, opts.degree);
        fit.center = out.center;
        out.fits.push_back(std::move(fit));
    }
    return out;
}

void save_cluster_labels(const ClusterLabels& labels, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write cluster labels: " + path);
    for (int l : labels.label) out << l << "\n";
}

}  // namespace shellforge

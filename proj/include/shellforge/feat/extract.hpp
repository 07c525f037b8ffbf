#pragma once

#include <cmath>
#include <functional>
#include <string>
#include <vector>

#include "shellforge/feat/dbscan.hpp"
#include "shellforge/feat/mesh.hpp"
#include "shellforge/feat/spherical.hpp"
#include "shellforge/grid.hpp"

namespace shellforge {

struct ExtractOptions {
    double iso = 0.0;        // 0 = half of the volume maximum
    double eps = 0.0;        // 0 = 2 voxel widths
    int min_pts = 8;
    int degree = 4;
    // Partial-cap fit: keep only vertices with theta in [theta_min, theta_max].
    double theta_min = 0.0;
    double theta_max = M_PI;
    std::function<void(const std::string&)> warn;  // optional
};

struct ExtractResult {
    Mesh mesh;
    Vec3 center{0.0, 0.0, 0.0};
    ClusterLabels labels;          // per mesh vertex
    std::vector<SurfaceFit> fits;  // ordered by mean cluster radius, descending
};

// marching cubes -> mesh center -> DBSCAN on vertices -> per-cluster
// spherical conversion and harmonic fit. Clusters too small for the requested
// degree are reported through opts.warn and skipped.
ExtractResult extract_features(const DensityVolume& volume,
                               const ExtractOptions& opts = {});

void save_cluster_labels(const ClusterLabels& labels, const std::string& path);

}  // namespace shellforge

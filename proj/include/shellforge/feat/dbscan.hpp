#pragma once

#include <vector>

#include "shellforge/grid.hpp"

namespace shellforge {

constexpr int kNoise = -1;

struct ClusterLabels {
    std::vector<int> label;  // cluster id >= 0 or kNoise
    int cluster_count = 0;
};

// Density-based clustering. Core points have >= min_pts neighbors (self
// included) within eps; clusters grow by density reachability; the rest is
// noise. Neighbor queries use a uniform hash grid with cell size eps, so the
// scan stays near-linear for surface point clouds.
ClusterLabels dbscan(const std::vector<Vec3>& points, double eps, int min_pts);

}  // namespace shellforge

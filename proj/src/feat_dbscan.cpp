#include "shellforge/feat/dbscan.hpp"

#include <cmath>
#include <cstdint>
#include <deque>
#include <stdexcept>
#include <unordered_map>

namespace shellforge {

namespace {

struct HashGrid {
    double cell;
    std::unordered_map<std::uint64_t, std::vector<int>> cells;

    explicit HashGrid(const std::vector<Vec3>& points, double eps) : cell(eps) {
        cells.reserve(points.size());
        for (int i = 0; i < static_cast<int>(points.size()); ++i)
            cells[key_of(points[i])].push_back(i);
    }

    std::uint64_t key(std::int64_t x, std::int64_t y, std::int64_t z) const {
        // 21 bits per axis, offset to keep coordinates positive.
        const std::int64_t off = 1 << 20;
        return (static_cast<std::uint64_t>(x + off) << 42) |
               (static_cast<std::uint64_t>(y + off) << 21) |
               static_cast<std::uint64_t>(z + off);
    }
    std::uint64_t key_of(const Vec3& p) const {
        return key(static_cast<std::int64_t>(std::floor(p[0] / cell)),
                   static_cast<std::int64_t>(std::floor(p[1] / cell)),
                   static_cast<std::int64_t>(std::floor(p[2] / cell)));
    }

    void neighbors(const std::vector<Vec3>& points, int i, double eps,
                   std::vector<int>& out) const {
        out.clear();
        const Vec3& p = points[i];
        double eps2 = eps * eps;
        std::int64_t cx = static_cast<std::int64_t>(std::floor(p[0] / cell));
        std::int64_t cy = static_cast<std::int64_t>(std::floor(p[1] / cell));
        std::int64_t cz = static_cast<std::int64_t>(std::floor(p[2] / cell));
        for (std::int64_t dx = -1; dx <= 1; ++dx)
            for (std::int64_t dy = -1; dy <= 1; ++dy)
                for (std::int64_t dz = -1; dz <= 1; ++dz) {
                    auto it = cells.find(key(cx + dx, cy + dy, cz + dz));
                    if (it == cells.end()) continue;
                    for (int j : it->second) {
                        double ddx = points[j][0] - p[0];
                        double ddy = points[j][1] - p[1];
                        double ddz = points[j][2] - p[2];
                        if (ddx * ddx + ddy * ddy + ddz * ddz <= eps2)
                            out.push_back(j);
                    }
                }
    }
};

}  // namespace

ClusterLabels dbscan(const std::vector<Vec3>& points, double eps, int min_pts) {
    if (!(eps > 0.0)) throw std::invalid_argument("dbscan eps must be > 0");
    if (min_pts < 1) throw std::invalid_argument("dbscan min_pts must be >= 1");

    const int n = static_cast<int>(points.size());
    ClusterLabels out;
    out.label.assign(n, kNoise);
    if (n == 0) return out;

    HashGrid grid(points, eps);
    std::vector<bool> visited(n, false);
    std::vector<int> nb, nb2;
    int next_cluster = 0;

    for (int i = 0; i < n; ++i) {
        if (visited[i]) continue;
        visited[i] = true;
        grid.neighbors(points, i, eps, nb);
        if (static_cast<int>(nb.size()) < min_pts) continue;  // noise (for now)

        int cid = next_cluster++;
        out.label[i] = cid;
        std::deque<int> frontier(nb.begin(), nb.end());
        while (!frontier.empty()) {
            int j = frontier.front();
            frontier.pop_front();
            if (out.label[j] == kNoise) out.label[j] = cid;  // border point
            if (visited[j]) continue;
            visited[j] = true;
            out.label[j] = cid;
            grid.neighbors(points, j, eps, nb2);
            if (static_cast<int>(nb2.size()) >= min_pts)
                frontier.insert(frontier.end(), nb2.begin(), nb2.end());
        }
    }
    out.cluster_count = next_cluster;
    return out;
}

}  // namespace shellforge

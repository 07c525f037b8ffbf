#include "shellforge/feat/marching_cubes.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <unordered_map>

#include "shellforge/feat/mc_tables.hpp"

namespace shellforge {

namespace {

const int kCorner[8][3] = {{0, 0, 0}, {1, 0, 0}, {1, 1, 0}, {0, 1, 0},
                           {0, 0, 1}, {1, 0, 1}, {1, 1, 1}, {0, 1, 1}};
const int kEdgeEnds[12][2] = {{0, 1}, {1, 2}, {2, 3}, {3, 0},
                              {4, 5}, {5, 6}, {6, 7}, {7, 4},
                              {0, 4}, {1, 5}, {2, 6}, {3, 7}};

}  // namespace

Mesh marching_cubes(const DensityVolume& volume, double iso) {
    const int res = volume.grid.resolution;
    Mesh mesh;
    if (res < 2) return mesh;

    // One shared vertex per crossed grid edge, keyed by (axis, base node).
    std::unordered_map<std::uint64_t, int> edge_vertex;
    auto node_index = [res](int x, int y, int z) {
        return static_cast<std::uint64_t>(x) +
               static_cast<std::uint64_t>(res) *
                   (static_cast<std::uint64_t>(y) +
                    static_cast<std::uint64_t>(res) * z);
    };

    const std::uint64_t n3 = static_cast<std::uint64_t>(res) * res * res;
    int cell_verts[12];

    for (int k = 0; k + 1 < res; ++k)
        for (int j = 0; j + 1 < res; ++j)
            for (int i = 0; i + 1 < res; ++i) {
                double vals[8];
                int cube = 0;
                for (int c = 0; c < 8; ++c) {
                    vals[c] = volume.at(i + kCorner[c][0], j + kCorner[c][1],
                                        k + kCorner[c][2]);
                    if (vals[c] < iso) cube |= 1 << c;
                }
                int edges = mc::kEdgeTable[cube];
                if (edges == 0) continue;

                for (int e = 0; e < 12; ++e) {
                    if (!(edges & (1 << e))) continue;
                    int a = kEdgeEnds[e][0], b = kEdgeEnds[e][1];
                    int ax = i + kCorner[a][0], ay = j + kCorner[a][1],
                        az = k + kCorner[a][2];
                    int bx = i + kCorner[b][0], by = j + kCorner[b][1],
                        bz = k + kCorner[b][2];
                    int axis = bx != ax ? 0 : (by != ay ? 1 : 2);
                    int mx = std::min(ax, bx), my = std::min(ay, by),
                        mz = std::min(az, bz);
                    std::uint64_t key = axis * n3 + node_index(mx, my, mz);

                    auto it = edge_vertex.find(key);
                    if (it != edge_vertex.end()) {
                        cell_verts[e] = it->second;
                        continue;
                    }
                    double denom = vals[b] - vals[a];
                    double t = std::abs(denom) > 1e-30 ? (iso - vals[a]) / denom
                                                       : 0.5;
                    t = std::clamp(t, 0.0, 1.0);
                    Vec3 pa = volume.grid.voxel_center(ax, ay, az);
                    Vec3 pb = volume.grid.voxel_center(bx, by, bz);
                    Vec3 p = {pa[0] + t * (pb[0] - pa[0]),
                              pa[1] + t * (pb[1] - pa[1]),
                              pa[2] + t * (pb[2] - pa[2])};
                    cell_verts[e] = static_cast<int>(mesh.vertices.size());
                    mesh.vertices.push_back(p);
                    edge_vertex.emplace(key, cell_verts[e]);
                }

                for (const int* t = mc::kTriTable[cube]; *t != -1; t += 3) {
                    int v0 = cell_verts[t[0]], v1 = cell_verts[t[1]],
                        v2 = cell_verts[t[2]];
                    if (v0 == v1 || v1 == v2 || v0 == v2) continue;
                    mesh.faces.push_back({v0, v1, v2});
                }
            }
    return mesh;
}

}  // namespace shellforge

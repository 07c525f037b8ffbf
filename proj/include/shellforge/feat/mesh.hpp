#pragma once

#include <array>
#include <string>
#include <vector>

#include "shellforge/grid.hpp"

namespace shellforge {

struct Mesh {
    std::vector<Vec3> vertices;
    std::vector<std::array<int, 3>> faces;

    bool empty() const { return faces.empty(); }
};

// Area-weighted mean of triangle centroids.
Vec3 mesh_center(const Mesh& mesh);

// True when every edge is incident to exactly two faces.
bool mesh_is_closed(const Mesh& mesh);

// ASCII OBJ (v/f records only).
void save_obj(const Mesh& mesh, const std::string& path);
Mesh load_obj(const std::string& path);

}  // namespace shellforge

#pragma once

#include "shellforge/feat/mesh.hpp"
#include "shellforge/grid.hpp"

namespace shellforge {

// Isosurface triangulation over the grid of voxel centers. Vertices are
// linearly interpolated along cell edges and welded through global edge ids,
// so shared edges reuse the same vertex. Ambiguous cell configurations follow
// the classic fixed lookup table orientation. Faces that collapse to zero
// area (iso exactly at a corner value) are dropped.
Mesh marching_cubes(const DensityVolume& volume, double iso);

}  // namespace shellforge

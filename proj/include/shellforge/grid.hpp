#pragma once

#include <array>
#include <cstddef>
#include <string>
#include <vector>

namespace shellforge {

using Vec3 = std::array<double, 3>;

// Cubic voxel grid. `extent` is the physical half-width in cm, `origin` the
// world position of the grid center.
struct GridSpec {
    int resolution = 64;
    double extent = 1.0;
    Vec3 origin{0.0, 0.0, 0.0};

    double voxel_size() const { return 2.0 * extent / resolution; }

    // World position of the center of voxel (ix, iy, iz).
    Vec3 voxel_center(int ix, int iy, int iz) const {
        double h = voxel_size();
        return {origin[0] - extent + (ix + 0.5) * h,
                origin[1] - extent + (iy + 0.5) * h,
                origin[2] - extent + (iz + 0.5) * h};
    }

    void validate() const;  // throws std::invalid_argument
};

// Scalar density grid, g/cm^3. Storage is x-fastest:
// index = x + resolution * (y + resolution * z).
struct DensityVolume {
    GridSpec grid;
    std::vector<float> values;

    DensityVolume() = default;
    explicit DensityVolume(const GridSpec& g)
        : grid(g),
          values(static_cast<std::size_t>(g.resolution) * g.resolution * g.resolution,
                 0.0f) {}

    std::size_t index(int ix, int iy, int iz) const {
        int r = grid.resolution;
        return static_cast<std::size_t>(ix) +
               static_cast<std::size_t>(r) * (static_cast<std::size_t>(iy) +
                                              static_cast<std::size_t>(r) * iz);
    }
    float at(int ix, int iy, int iz) const { return values[index(ix, iy, iz)]; }
    float& at(int ix, int iy, int iz) { return values[index(ix, iy, iz)]; }

    double total_mass() const;  // sum(values) * voxel^3, grams
    float max_value() const;
};

// Raw little-endian float32 payload plus JSON sidecar {resolution, extent, origin}.
// `path` names the raw file; the sidecar is written to path + ".json".
void save_volume(const DensityVolume& v, const std::string& path);
DensityVolume load_volume(const std::string& path);

}  // namespace shellforge

#pragma once

#include <array>
#include <string>
#include <vector>

#include "shellforge/grid.hpp"

namespace shellforge {

using ShearMatrix = std::array<std::array<double, 3>, 3>;

inline ShearMatrix identity_shear() {
    return {{{1.0, 0.0, 0.0}, {0.0, 1.0, 0.0}, {0.0, 0.0, 1.0}}};
}

// One constant-density layer. The mid-surface radius is a Legendre series in
// cos(theta); outer/inner surfaces are mid +/- thickness/2.
struct ShellLayer {
    double density = 1.0;                 // g/cm^3
    std::vector<double> coeffs{0.5};      // a_n, cm
    double thickness = 0.1;               // cm

    void validate() const;  // throws std::invalid_argument
};

struct ShellModel {
    std::vector<ShellLayer> layers;   // outermost first
    double joint_size = 0.0;          // cm; 0 disables the joint gap
    double fill_tube_radius = 0.0;    // cm; 0 disables the tube
    double fill_tube_density = 0.0;   // g/cm^3; 0 = void channel
    ShearMatrix shear = identity_shear();

    void validate() const;  // field-level checks (non-negativity, unit diagonal)

    // Radial nesting on a fixed 32x64 (theta, phi) angular grid. Throws
    // std::invalid_argument naming the offending layer index.
    void check_nesting() const;
};

// R(theta) = sum a_n P_n(cos theta).
double legendre_radius(double theta, const std::vector<double>& coeffs);

// S * [x, y, z, 1] truncated to three components.
Vec3 apply_shear(const Vec3& p, const ShellModel& model);

// Density at a world point: the point is pulled back through the inverse
// shear, then tested against the joint band, fill tube and layer walls.
double evaluate_density(const Vec3& p, const ShellModel& model);

// Mean of evaluate_density over supersample^3 stratified sub-points per voxel.
DensityVolume voxelize(const ShellModel& model, const GridSpec& grid,
                       int supersample = 2);

// JSON round trip. Field names: layers[].density, layers[].coeffs,
// layers[].thickness, joint_size, fill_tube_radius, shear[3][3].
std::string model_to_json(const ShellModel& model);
ShellModel model_from_json(const std::string& json_text);
void save_model(const ShellModel& model, const std::string& path);
ShellModel load_model(const std::string& path);

}  // namespace shellforge

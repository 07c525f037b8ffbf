#pragma once

#include <string>

#include "shellforge/grid.hpp"
#include "shellforge/image.hpp"

namespace shellforge {

enum class BeamKind { Parallel, Cone };

struct BeamGeometry {
    BeamKind kind = BeamKind::Parallel;
    int rows = 128;
    int cols = 128;
    double pitch = 0.0;             // cm per pixel; 0 = fit the volume extent
    double source_distance = 0.0;   // cm, cone only (source to volume center)
    double detector_distance = 0.0; // cm, cone only (volume center to detector)
    Vec3 view_axis{0.0, 0.0, 1.0};

    void validate() const;
};

struct MaterialSpec {
    double mass_attenuation = 1.0;  // cm^2/g

    void validate() const;
};

struct Radiograph {
    Image pixels;                   // transmission, (0, 1]
    BeamGeometry geometry;
};

struct Ray {
    Vec3 origin;
    Vec3 direction;                 // need not be unit length
};

// Exact radiological path (g/cm^2) through the piecewise-constant volume:
// sum of density * chord length over traversed voxels.
double radiological_path(const DensityVolume& volume, const Ray& ray);

// Beer-Lambert transmission image: pixel = exp(-mu_m * path).
Radiograph project(const DensityVolume& volume, const BeamGeometry& geometry,
                   const MaterialSpec& material);

// Element-wise -log(transmission). Throws on non-positive pixels.
Image absorption_image(const Radiograph& radiograph);

// Raw float32 payload + JSON sidecar
// {rows, cols, pitch, kind, source_distance, detector_distance}.
void save_radiograph(const Radiograph& r, const std::string& path);
Radiograph load_radiograph(const std::string& path);

}  // namespace shellforge

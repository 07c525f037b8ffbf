#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "shellforge/degrade.hpp"
#include "shellforge/grid.hpp"
#include "shellforge/nn/tensor.hpp"
#include "shellforge/projector.hpp"
#include "shellforge/shell_model.hpp"

namespace shellforge {

struct ParamRange {
    double min = 0.0;
    double max = 0.0;
};

// Seeded dataset factory configuration. Each sample is a two-layer shell with
// independently uniform parameters; the outer mid-surface carries optional
// P1/P2 Legendre perturbations.
struct DatasetSpec {
    int count = 240;
    ParamRange outer_radius{0.55, 0.72};
    ParamRange outer_thickness{0.08, 0.16};
    ParamRange outer_density{1.0, 3.0};
    ParamRange inner_radius{0.28, 0.42};
    ParamRange inner_thickness{0.06, 0.12};
    ParamRange inner_density{1.0, 3.0};
    ParamRange legendre_a1{0.0, 0.0};       // outer mid-surface P1 mode, cm
    ParamRange legendre_a2{-0.02, 0.02};    // outer mid-surface P2 mode, cm
    ParamRange joint_size{0.0, 0.05};
    ParamRange fill_tube_radius{0.0, 0.04};
    ParamRange shear_xy{0.0, 0.0};
    GridSpec grid;
    BeamGeometry geometry;
    MaterialSpec material;
    DegradeParams degrade;
    std::uint64_t seed = 0;
    double train_fraction = 5.0 / 6.0;      // remainder is validation
    int supersample = 2;

    void validate() const;
};

struct DatasetSample {
    int index = 0;
    ShellModel model;
    int rejections = 0;  // resamples needed before a nested model appeared
};

struct DatasetResult {
    std::vector<DatasetSample> samples;
    int total_rejections = 0;
    std::string manifest_path;
};

// Uniform parameter draw for sample `index`, attempt `attempt`, keyed by the
// dataset seed. Pure function of its arguments.
ShellModel sample_model(const DatasetSpec& spec, int index, int attempt);

// Draws a nested model for `index`, resampling on nesting violations.
// Throws std::runtime_error when the rejection rate exceeds 90%.
DatasetSample draw_sample(const DatasetSpec& spec, int index);

// Generates count (model, volume, clean radiograph, degraded radiograph)
// file groups plus manifest.json under out_dir. Reproducible from (spec, seed).
DatasetResult generate_dataset(const DatasetSpec& spec, const std::string& out_dir);

std::string dataset_spec_to_json(const DatasetSpec& spec);
DatasetSpec dataset_spec_from_json(const std::string& text);
DatasetSpec load_dataset_spec(const std::string& path);

// Normalizes a radiograph for network input: clamp to a small positive floor,
// pseudo-flat-field with kernel cols/8, values in [0, 1].
nn::Tensor<float> preprocess_radiograph(const Image& image);

// Volume to occupancy tensor [R, R, R] in [0, 1] (divided by `density_scale`).
nn::Tensor<float> volume_to_occupancy(const DensityVolume& v, double density_scale);

// Machine-readable run report: hashes of every artifact found in run_dir,
// stage timings passed by the caller, and a deterministic report hash that
// excludes the timing block. Throws if a referenced file vanishes mid-write.
std::string build_report(const std::string& run_dir,
                         const std::vector<std::pair<std::string, double>>& timings,
                         const std::string& tool_version);

// Hash of a report's deterministic content (everything except "timings").
std::uint64_t report_hash(const std::string& report_json);

}  // namespace shellforge

#include "shellforge/pipeline.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <mutex>
#include <filesystem>
#include <fstream>
#include <map>
#include <stdexcept>

#include <json.hpp>

#include "shellforge/hash.hpp"
#include "shellforge/parallel.hpp"
#include "shellforge/rng.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace shellforge {

namespace {

void check_range(const ParamRange& r, const char* name) {
    if (!(r.min <= r.max))
        throw std::invalid_argument(std::string("range ") + name + ": min > max");
}

json range_to_json(const ParamRange& r) { return {{"min", r.min}, {"max", r.max}}; }

ParamRange range_from_json(const json& j, ParamRange fallback) {
    if (j.is_null()) return fallback;
    return {j.at("min").get<double>(), j.at("max").get<double>()};
}

std::string sample_stem(int index) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "sample_%04d", index);
    return buf;
}

}  // namespace

void DatasetSpec::validate() const {
    if (count < 1) throw std::invalid_argument("dataset count must be >= 1");
    check_range(outer_radius, "outer_radius");
    check_range(outer_thickness, "outer_thickness");
    check_range(outer_density, "outer_density");
    check_range(inner_radius, "inner_radius");
    check_range(inner_thickness, "inner_thickness");
    check_range(inner_density, "inner_density");
    check_range(legendre_a1, "legendre_a1");
    check_range(legendre_a2, "legendre_a2");
    check_range(joint_size, "joint_size");
    check_range(fill_tube_radius, "fill_tube_radius");
    check_range(shear_xy, "shear_xy");
    if (train_fraction <= 0.0 || train_fraction > 1.0)
        throw std::invalid_argument("train_fraction must be in (0, 1]");
    if (supersample < 1) throw std::invalid_argument("supersample must be >= 1");
    grid.validate();
    geometry.validate();
    material.validate();
    degrade.validate();
}

ShellModel sample_model(const DatasetSpec& spec, int index, int attempt) {
    // One stream per (index, attempt); attempts are capped well below 2^16.
    RngStream rng(spec.seed,
                  (static_cast<std::uint64_t>(index) << 16) |
                      static_cast<std::uint64_t>(attempt));
    auto draw = [&](const ParamRange& r) { return rng.uniform(r.min, r.max); };

    ShellModel m;
    ShellLayer outer;
    outer.density = draw(spec.outer_density);
    outer.coeffs = {draw(spec.outer_radius), draw(spec.legendre_a1),
                    draw(spec.legendre_a2)};
    outer.thickness = draw(spec.outer_thickness);
    ShellLayer inner;
    inner.density = draw(spec.inner_density);
    inner.coeffs = {draw(spec.inner_radius)};
    inner.thickness = draw(spec.inner_thickness);
    m.layers = {outer, inner};
    m.joint_size = draw(spec.joint_size);
    m.fill_tube_radius = draw(spec.fill_tube_radius);
    m.shear[0][1] = draw(spec.shear_xy);
    return m;
}

DatasetSample draw_sample(const DatasetSpec& spec, int index) {
    DatasetSample out;
    out.index = index;
    const int max_attempts = 32;  // > 90% rejection over 32 tries aborts
    for (int attempt = 0; attempt < max_attempts; ++attempt) {
        ShellModel m = sample_model(spec, index, attempt);
        try {
            m.validate();
            m.check_nesting();
        } catch (const std::invalid_argument&) {
            ++out.rejections;
            continue;
        }
        out.model = std::move(m);
        return out;
    }
    throw std::runtime_error(
        "sample " + std::to_string(index) + ": rejection rate above 90% (" +
        std::to_string(out.rejections) + " rejects); widen the parameter ranges");
}

DatasetResult generate_dataset(const DatasetSpec& spec, const std::string& out_dir) {
    spec.validate();
    fs::create_directories(out_dir);

    DatasetResult result;
    result.samples.resize(spec.count);
    std::atomic<int> rejections{0};
    std::atomic<bool> failed{false};
    std::string failure;
    std::mutex failure_mutex;

    parallel_for(spec.count, [&](int i) {
        try {
            DatasetSample s = draw_sample(spec, i);
            rejections += s.rejections;

            DensityVolume vol = voxelize(s.model, spec.grid, spec.supersample);
            Radiograph clean = project(vol, spec.geometry, spec.material);
            DegradeParams dp = spec.degrade;
            dp.seed = RngStream(spec.seed, 0xde600000ULL + i).next_u64();
            Radiograph noisy = clean;
            noisy.pixels = degrade(clean.pixels, dp);

            std::string stem = (fs::path(out_dir) / sample_stem(i)).string();
            save_model(s.model, stem + ".model.json");
            save_volume(vol, stem + ".vol.raw");
            save_radiograph(clean, stem + ".clean.raw");
            save_radiograph(noisy, stem + ".rad.raw");
            save_pgm16(noisy.pixels, stem + ".rad.pgm");
            result.samples[i] = std::move(s);
        } catch (const std::exception& e) {
            std::lock_guard<std::mutex> lock(failure_mutex);
            failed = true;
            failure = e.what();
        }
    });
    if (failed) throw std::runtime_error("dataset generation failed: " + failure);
    result.total_rejections = rejections;

    json manifest;
    manifest["spec"] = json::parse(dataset_spec_to_json(spec));
    manifest["total_rejections"] = result.total_rejections;
    json samples = json::array();
    int train_count = std::min<int>(
        spec.count,
        static_cast<int>(std::lround(spec.train_fraction * spec.count)));
    json train_idx = json::array(), val_idx = json::array();
    for (int i = 0; i < spec.count; ++i) {
        const DatasetSample& s = result.samples[i];
        std::string stem = sample_stem(i);
        json files = json::array({stem + ".model.json", stem + ".vol.raw",
                                  stem + ".vol.raw.json", stem + ".clean.raw",
                                  stem + ".clean.raw.json", stem + ".rad.raw",
                                  stem + ".rad.raw.json", stem + ".rad.pgm"});
        samples.push_back({{"index", i},
                           {"rejections", s.rejections},
                           {"model", json::parse(model_to_json(s.model))},
                           {"files", files}});
        (i < train_count ? train_idx : val_idx).push_back(i);
    }
    manifest["samples"] = samples;
    manifest["split"] = {{"train", train_idx}, {"val", val_idx}};

    result.manifest_path = (fs::path(out_dir) / "manifest.json").string();
    std::ofstream out(result.manifest_path);
    if (!out) throw std::runtime_error("cannot write " + result.manifest_path);
    out << manifest.dump(2) << "\n";
    return result;
}

std::string dataset_spec_to_json(const DatasetSpec& spec) {
    json j;
    j["count"] = spec.count;
    j["ranges"] = {{"outer_radius", range_to_json(spec.outer_radius)},
                   {"outer_thickness", range_to_json(spec.outer_thickness)},
                   {"outer_density", range_to_json(spec.outer_density)},
                   {"inner_radius", range_to_json(spec.inner_radius)},
                   {"inner_thickness", range_to_json(spec.inner_thickness)},
                   {"inner_density", range_to_json(spec.inner_density)},
                   {"legendre_a1", range_to_json(spec.legendre_a1)},
                   {"legendre_a2", range_to_json(spec.legendre_a2)},
                   {"joint_size", range_to_json(spec.joint_size)},
                   {"fill_tube_radius", range_to_json(spec.fill_tube_radius)},
                   {"shear_xy", range_to_json(spec.shear_xy)}};
    j["grid"] = {{"resolution", spec.grid.resolution},
                 {"extent", spec.grid.extent},
                 {"origin", spec.grid.origin}};
    j["geometry"] = {{"rows", spec.geometry.rows},
                     {"cols", spec.geometry.cols},
                     {"pitch", spec.geometry.pitch},
                     {"kind", spec.geometry.kind == BeamKind::Cone ? "cone"
                                                                   : "parallel"},
                     {"source_distance", spec.geometry.source_distance},
                     {"detector_distance", spec.geometry.detector_distance}};
    j["material"] = {{"mass_attenuation", spec.material.mass_attenuation}};
    j["degrade"] = json::parse(degrade_params_to_json(spec.degrade));
    j["seed"] = spec.seed;
    j["train_fraction"] = spec.train_fraction;
    j["supersample"] = spec.supersample;
    return j.dump(2);
}

DatasetSpec dataset_spec_from_json(const std::string& text) {
    json j = json::parse(text);
    DatasetSpec s;
    s.count = j.value("count", s.count);
    json r = j.value("ranges", json::object());
    s.outer_radius = range_from_json(r.value("outer_radius", json()), s.outer_radius);
    s.outer_thickness =
        range_from_json(r.value("outer_thickness", json()), s.outer_thickness);
    s.outer_density =
        range_from_json(r.value("outer_density", json()), s.outer_density);
    s.inner_radius = range_from_json(r.value("inner_radius", json()), s.inner_radius);
    s.inner_thickness =
        range_from_json(r.value("inner_thickness", json()), s.inner_thickness);
    s.inner_density =
        range_from_json(r.value("inner_density", json()), s.inner_density);
    s.legendre_a1 = range_from_json(r.value("legendre_a1", json()), s.legendre_a1);
    s.legendre_a2 = range_from_json(r.value("legendre_a2", json()), s.legendre_a2);
    s.joint_size = range_from_json(r.value("joint_size", json()), s.joint_size);
    s.fill_tube_radius =
        range_from_json(r.value("fill_tube_radius", json()), s.fill_tube_radius);
    s.shear_xy = range_from_json(r.value("shear_xy", json()), s.shear_xy);
    if (j.contains("grid")) {
        const json& g = j["grid"];
        s.grid.resolution = g.value("resolution", s.grid.resolution);
        s.grid.extent = g.value("extent", s.grid.extent);
        if (g.contains("origin")) {
            auto o = g["origin"].get<std::vector<double>>();
            s.grid.origin = {o.at(0), o.at(1), o.at(2)};
        }
    }
    if (j.contains("geometry")) {
        const json& g = j["geometry"];
        s.geometry.rows = g.value("rows", s.geometry.rows);
        s.geometry.cols = g.value("cols", s.geometry.cols);
        s.geometry.pitch = g.value("pitch", s.geometry.pitch);
        s.geometry.kind = g.value("kind", std::string("parallel")) == "cone"
                              ? BeamKind::Cone
                              : BeamKind::Parallel;
        s.geometry.source_distance =
            g.value("source_distance", s.geometry.source_distance);
        s.geometry.detector_distance =
            g.value("detector_distance", s.geometry.detector_distance);
    }
    if (j.contains("material"))
        s.material.mass_attenuation =
            j["material"].value("mass_attenuation", s.material.mass_attenuation);
    if (j.contains("degrade"))
        s.degrade = degrade_params_from_json(j["degrade"].dump());
    s.seed = j.value("seed", s.seed);
    s.train_fraction = j.value("train_fraction", s.train_fraction);
    s.supersample = j.value("supersample", s.supersample);
    return s;
}

DatasetSpec load_dataset_spec(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot read dataset spec " + path);
    std::string text((std::istreambuf_iterator<char>(in)),
                     std::istreambuf_iterator<char>());
    return dataset_spec_from_json(text);
}

nn::Tensor<float> preprocess_radiograph(const Image& image) {
    Image clamped = image;
    for (float& v : clamped.v) v = std::max(v, 1e-4f);
    Image flat = pseudo_flat_field(clamped, std::max(2.0, image.cols / 8.0));
    return nn::Tensor<float>({image.rows, image.cols}, flat.v);
}

nn::Tensor<float> volume_to_occupancy(const DensityVolume& v, double density_scale) {
    if (density_scale <= 0.0)
        throw std::invalid_argument("density_scale must be positive");
    const int r = v.grid.resolution;
    nn::Tensor<float> t({r, r, r});
    for (std::size_t i = 0; i < v.values.size(); ++i)
        t.v[i] = std::min(1.0f, static_cast<float>(v.values[i] / density_scale));
    return t;
}

std::string build_report(const std::string& run_dir,
                         const std::vector<std::pair<std::string, double>>& timings,
                         const std::string& tool_version) {
    json artifacts = json::array();
    std::vector<fs::path> files;
    for (const auto& entry : fs::recursive_directory_iterator(run_dir))
        if (entry.is_regular_file() &&
            entry.path().filename() != "report.json" &&
            entry.path().filename() != "timings.jsonl")
            files.push_back(entry.path());
    std::sort(files.begin(), files.end());
    for (const auto& p : files) {
        // Hashing doubles as the existence check the report contract demands.
        artifacts.push_back(
            {{"file", fs::relative(p, run_dir).generic_string()},
             {"fnv1a64", hex64(hash_file(p.string()))}});
    }

    json j;
    j["tool_version"] = tool_version;
    j["run_dir"] = fs::path(run_dir).filename().generic_string();
    j["artifacts"] = artifacts;
    json t = json::array();
    for (const auto& [stage, seconds] : timings)
        t.push_back({{"stage", stage}, {"seconds", seconds}});
    j["timings"] = t;
    j["report_hash"] = "";
    j["report_hash"] = hex64(report_hash(j.dump()));
    return j.dump(2);
}

std::uint64_t report_hash(const std::string& report_json) {
    json j = json::parse(report_json);
    j.erase("timings");
    j["report_hash"] = "";
    return fnv1a64(j.dump());
}

}  // namespace shellforge

// shellforge command-line front end: dataset generation, projection,
// degradation, training, reconstruction, feature extraction, and reporting.
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "shellforge/degrade.hpp"
#include "shellforge/feat/extract.hpp"
#include "shellforge/hash.hpp"
#include "shellforge/nn/checkpoint.hpp"
#include "shellforge/nn/train.hpp"
#include "shellforge/parallel.hpp"
#include "shellforge/pipeline.hpp"
#include "shellforge/projector.hpp"
#include "shellforge/shell_model.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace shellforge;

namespace {

constexpr const char* kVersion = "shellforge 1.0.0";

class DataError : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

double now_seconds() {
    return std::chrono::duration<double>(
               std::chrono::steady_clock::now().time_since_epoch())
        .count();
}

void append_timing(const std::string& dir, const std::string& stage,
                   double seconds) {
    std::ofstream out(fs::path(dir) / "timings.jsonl", std::ios::app);
    out << json{{"stage", stage}, {"seconds", seconds}}.dump() << "\n";
}

std::string read_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot read " + path);
    return std::string((std::istreambuf_iterator<char>(in)),
                       std::istreambuf_iterator<char>());
}

json net_config_to_json(const nn::NetworkConfig& c) {
    return {{"input_size", c.input_size},
            {"encoder_channels", c.encoder_channels},
            {"bottleneck_dim", c.bottleneck_dim},
            {"head_resolutions", c.head_resolutions},
            {"activation", c.activation},
            {"output_nonlinearity", c.output_nonlinearity}};
}

nn::NetworkConfig net_config_from_json(const json& j) {
    nn::NetworkConfig c;
    c.input_size = j.value("input_size", c.input_size);
    c.encoder_channels = j.value("encoder_channels", c.encoder_channels);
    c.bottleneck_dim = j.value("bottleneck_dim", c.bottleneck_dim);
    c.head_resolutions = j.value("head_resolutions", c.head_resolutions);
    c.activation = j.value("activation", c.activation);
    c.output_nonlinearity = j.value("output_nonlinearity", c.output_nonlinearity);
    return c;
}

nn::TrainConfig train_config_from_json(const json& j) {
    nn::TrainConfig c;
    c.loss = j.value("loss", c.loss);
    c.lambda = j.value("lambda", c.lambda);
    c.learning_rate = j.value("learning_rate", c.learning_rate);
    c.batch_size = j.value("batch_size", c.batch_size);
    c.epochs = j.value("epochs", c.epochs);
    c.seed = j.value("seed", c.seed);
    c.optimizer = j.value("optimizer", c.optimizer);
    return c;
}

struct LoadedDataset {
    std::vector<nn::Sample<float>> train, val;
    double density_scale = 0.0;
    GridSpec grid;
};

// Reads (degraded radiograph, volume) pairs listed in a dataset manifest and
// converts them to network samples at `truth_resolution`.
LoadedDataset load_dataset(const std::string& dir, int truth_resolution) {
    json manifest = json::parse(read_file((fs::path(dir) / "manifest.json").string()));
    std::vector<DensityVolume> volumes;
    std::vector<nn::Tensor<float>> images;
    for (const auto& s : manifest.at("samples")) {
        std::string stem = "sample_";
        char buf[16];
        std::snprintf(buf, sizeof buf, "%04d", s.at("index").get<int>());
        stem += buf;
        Radiograph rad = load_radiograph((fs::path(dir) / (stem + ".rad.raw")).string());
        images.push_back(preprocess_radiograph(rad.pixels));
        volumes.push_back(load_volume((fs::path(dir) / (stem + ".vol.raw")).string()));
    }
    LoadedDataset out;
    if (volumes.empty()) throw DataError("dataset manifest lists no samples");
    out.grid = volumes.front().grid;
    for (const auto& v : volumes)
        out.density_scale = std::max(out.density_scale,
                                     static_cast<double>(v.max_value()));
    if (out.density_scale <= 0.0) throw DataError("dataset volumes are all empty");
    int res = out.grid.resolution;
    if (res % truth_resolution != 0)
        throw DataError("volume resolution " + std::to_string(res) +
                        " is not a multiple of the largest head resolution " +
                        std::to_string(truth_resolution));
    auto to_sample = [&](std::size_t i) {
        nn::Sample<float> s;
        s.image = images[i];
        s.truth = nn::downsample(volume_to_occupancy(volumes[i], out.density_scale),
                                 res / truth_resolution);
        return s;
    };
    for (const auto& idx : manifest.at("split").at("train"))
        out.train.push_back(to_sample(idx.get<int>()));
    for (const auto& idx : manifest.at("split").at("val"))
        out.val.push_back(to_sample(idx.get<int>()));
    if (out.train.empty()) throw DataError("empty training split");
    return out;
}

int run_selftest() {
    // 1. Beer-Lambert central ray through an analytic sphere.
    {
        ShellModel m;
        m.layers = {{2.0, {0.25}, 0.5}};  // solid ball R = 0.5
        GridSpec g;
        g.resolution = 64;
        DensityVolume v = voxelize(m, g, 2);
        Ray central{{0.0, 0.0, -5.0}, {0.0, 0.0, 1.0}};
        double path = radiological_path(v, central);
        double expect = 2.0 * 0.5 * 2.0;
        if (std::abs(path - expect) / expect > 0.01)
            throw DataError("selftest: sphere path " + std::to_string(path) +
                            " deviates from " + std::to_string(expect));
        std::cout << "selftest: projection oracle OK\n";
    }
    // 2. Finite-difference gradient of a small dense layer.
    {
        auto x = nn::make_leaf(nn::Tensor<double>({3}, {0.2, -0.4, 0.7}), true);
        auto w = nn::make_leaf(
            nn::Tensor<double>({2, 3}, {0.1, 0.3, -0.2, 0.5, -0.1, 0.4}), true);
        auto b = nn::make_leaf(nn::Tensor<double>({2}, {0.05, -0.03}), true);
        nn::Tensor<double> y({2}, {0.7, 0.2});
        auto build = [&] { return nn::bce_loss(nn::sigmoid(nn::linear(x, w, b)), y); };
        nn::backward(build());
        double h = 1e-5;
        for (auto& leaf : {x, w, b})
            for (std::size_t i = 0; i < leaf->val.v.size(); ++i) {
                double saved = leaf->val.v[i];
                leaf->val.v[i] = saved + h;
                double lp = build()->val.v[0];
                leaf->val.v[i] = saved - h;
                double lm = build()->val.v[0];
                leaf->val.v[i] = saved;
                double fd = (lp - lm) / (2.0 * h);
                if (std::abs(fd - leaf->grad.v[i]) > 1e-6)
                    throw DataError("selftest: gradient check failed");
            }
        std::cout << "selftest: gradient oracle OK\n";
    }
    // 3. Constant-radius surface recovers c00 = sqrt(4 pi) r.
    {
        std::vector<Vec3> pts;
        for (int i = 0; i < 200; ++i) {
            double z = 1.0 - 2.0 * (i + 0.5) / 200.0;
            double phi = 2.399963229728653 * i;  // golden-angle spiral
            double s = std::sqrt(1.0 - z * z);
            pts.push_back({1.5 * s * std::cos(phi), 1.5 * s * std::sin(phi), 1.5 * z});
        }
        SurfaceFit fit =
            fit_spherical_harmonics(to_spherical(pts, {0.0, 0.0, 0.0}), 2);
        double expect = std::sqrt(4.0 * M_PI) * 1.5;
        if (std::abs(fit.coeff(0, 0) - expect) > 1e-8 || fit.residual_rms > 1e-8)
            throw DataError("selftest: spherical-harmonic oracle failed");
        std::cout << "selftest: spherical-harmonic oracle OK\n";
    }
    std::cout << "selftest: all checks passed\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"shellforge: synthetic radiography, reconstruction, and 3D "
                 "feature extraction"};
    app.set_version_flag("--version", kVersion);
    app.require_subcommand(1);

    int threads = 0;
    app.add_option("--threads", threads, "worker thread count (0 = auto)");

    // generate
    auto* gen = app.add_subcommand("generate", "generate a seeded dataset");
    std::string gen_config, gen_out = "dataset";
    std::uint64_t gen_seed = 0;
    bool gen_seed_set = false;
    int gen_count = 0, gen_resolution = 0;
    gen->add_option("--config", gen_config, "DatasetSpec JSON");
    gen->add_option("--out", gen_out, "output directory")->required();
    gen->add_option("--seed", gen_seed, "seed override")
        ->each([&](const std::string&) { gen_seed_set = true; });
    gen->add_option("--count", gen_count, "sample count override");
    gen->add_option("--resolution", gen_resolution, "grid resolution override");

    // project
    auto* proj = app.add_subcommand("project", "model/volume -> radiograph");
    std::string proj_model, proj_volume, proj_out, proj_pgm;
    int proj_rows = 128, proj_cols = 128, proj_resolution = 64, proj_ss = 2;
    double proj_pitch = 0.0, proj_mu = 1.0, proj_extent = 1.0;
    double proj_src = 0.0, proj_det = 0.0;
    bool proj_cone = false;
    proj->add_option("--model", proj_model, "ShellModel JSON to voxelize");
    proj->add_option("--volume", proj_volume, "existing density volume (.raw)");
    proj->add_option("--out", proj_out, "output radiograph (.raw)")->required();
    proj->add_option("--pgm", proj_pgm, "also export a 16-bit PGM");
    proj->add_option("--rows", proj_rows);
    proj->add_option("--cols", proj_cols);
    proj->add_option("--pitch", proj_pitch, "cm per pixel (0 = fit)");
    proj->add_option("--mu", proj_mu, "mass attenuation, cm^2/g");
    proj->add_option("--resolution", proj_resolution, "voxelization resolution");
    proj->add_option("--extent", proj_extent, "grid half-width, cm");
    proj->add_option("--supersample", proj_ss);
    proj->add_flag("--cone", proj_cone, "cone beam instead of parallel");
    proj->add_option("--source-distance", proj_src);
    proj->add_option("--detector-distance", proj_det);

    // degrade
    auto* deg = app.add_subcommand("degrade", "apply blur/noise/gain to a radiograph");
    std::string deg_in, deg_out, deg_config, deg_pgm;
    std::uint64_t deg_seed = 0;
    bool deg_seed_set = false;
    deg->add_option("--in", deg_in)->required();
    deg->add_option("--out", deg_out)->required();
    deg->add_option("--config", deg_config, "DegradeParams JSON");
    deg->add_option("--pgm", deg_pgm);
    deg->add_option("--seed", deg_seed)
        ->each([&](const std::string&) { deg_seed_set = true; });

    // flatfield
    auto* flat = app.add_subcommand("flatfield", "pseudo-flat-field correction");
    std::string flat_in, flat_out;
    double flat_sigma = 0.0;
    flat->add_option("--in", flat_in)->required();
    flat->add_option("--out", flat_out)->required();
    flat->add_option("--sigma", flat_sigma, "kernel sigma, pixels (0 = cols/8)");

    // train
    auto* tr = app.add_subcommand("train", "train the reconstruction network");
    std::string tr_data, tr_out = "run", tr_config;
    std::uint64_t tr_seed = 0;
    bool tr_seed_set = false;
    tr->add_option("--data", tr_data, "dataset directory")->required();
    tr->add_option("--out", tr_out, "output directory");
    tr->add_option("--config", tr_config, "{network:{...}, train:{...}} JSON");
    tr->add_option("--seed", tr_seed)
        ->each([&](const std::string&) { tr_seed_set = true; });

    // reconstruct
    auto* rec = app.add_subcommand("reconstruct", "radiograph -> density volume");
    std::string rec_train, rec_in, rec_out;
    rec->add_option("--train", rec_train, "training output directory")->required();
    rec->add_option("--in", rec_in, "input radiograph (.raw)")->required();
    rec->add_option("--out", rec_out, "output volume (.raw)")->required();

    // extract
    auto* ext = app.add_subcommand("extract", "volume -> mesh, clusters, SH fits");
    std::string ext_in, ext_out = "features";
    double ext_iso = 0.0, ext_eps = 0.0;
    int ext_min_pts = 8, ext_degree = 4;
    ext->add_option("--in", ext_in, "density volume (.raw)")->required();
    ext->add_option("--out", ext_out, "output directory");
    ext->add_option("--iso", ext_iso, "isosurface level (0 = half max)");
    ext->add_option("--eps", ext_eps, "DBSCAN radius, cm (0 = 2 voxels)");
    ext->add_option("--min-pts", ext_min_pts);
    ext->add_option("--degree", ext_degree, "spherical-harmonic degree");

    // report
    auto* rep = app.add_subcommand("report", "hash run artifacts into a report");
    std::string rep_run, rep_out;
    rep->add_option("--run", rep_run, "run directory")->required();
    rep->add_option("--out", rep_out, "report path (default <run>/report.json)");

    app.add_subcommand("selftest", "run built-in analytic oracles");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0) return app.exit(e);  // --help / --version
        app.exit(e);
        return 1;
    }

    try {
        if (threads > 0) set_thread_count(threads);

        if (gen->parsed()) {
            DatasetSpec spec;
            if (!gen_config.empty()) spec = load_dataset_spec(gen_config);
            if (gen_seed_set) spec.seed = gen_seed;
            if (gen_count > 0) spec.count = gen_count;
            if (gen_resolution > 0) spec.grid.resolution = gen_resolution;
            double t0 = now_seconds();
            DatasetResult res = generate_dataset(spec, gen_out);
            append_timing(gen_out, "generate", now_seconds() - t0);
            std::cout << "generated " << res.samples.size() << " samples ("
                      << res.total_rejections << " rejections) in " << gen_out
                      << "\n";
        } else if (proj->parsed()) {
            if (proj_model.empty() == proj_volume.empty())
                throw DataError("project needs exactly one of --model / --volume");
            DensityVolume vol;
            if (!proj_volume.empty()) {
                vol = load_volume(proj_volume);
            } else {
                ShellModel m = load_model(proj_model);
                GridSpec g;
                g.resolution = proj_resolution;
                g.extent = proj_extent;
                vol = voxelize(m, g, proj_ss);
            }
            BeamGeometry geo;
            geo.rows = proj_rows;
            geo.cols = proj_cols;
            geo.pitch = proj_pitch;
            geo.kind = proj_cone ? BeamKind::Cone : BeamKind::Parallel;
            geo.source_distance = proj_src;
            geo.detector_distance = proj_det;
            Radiograph r = project(vol, geo, MaterialSpec{proj_mu});
            save_radiograph(r, proj_out);
            if (!proj_pgm.empty()) save_pgm16(r.pixels, proj_pgm);
            std::cout << "wrote " << proj_out << "\n";
        } else if (deg->parsed()) {
            Radiograph r = load_radiograph(deg_in);
            DegradeParams p;
            if (!deg_config.empty())
                p = degrade_params_from_json(read_file(deg_config));
            if (deg_seed_set) p.seed = deg_seed;
            r.pixels = degrade(r.pixels, p);
            save_radiograph(r, deg_out);
            if (!deg_pgm.empty()) save_pgm16(r.pixels, deg_pgm);
            std::cout << "wrote " << deg_out << "\n";
        } else if (flat->parsed()) {
            Image img = load_image_raw(flat_in);
            double sigma = flat_sigma > 0.0 ? flat_sigma
                                            : std::max(2.0, img.cols / 8.0);
            Image out = pseudo_flat_field(img, sigma);
            save_image_raw(out, flat_out);
            std::cout << "wrote " << flat_out << "\n";
        } else if (tr->parsed()) {
            json cfg = json::object();
            if (!tr_config.empty()) cfg = json::parse(read_file(tr_config));
            nn::NetworkConfig nc =
                net_config_from_json(cfg.value("network", json::object()));
            nn::TrainConfig tc =
                train_config_from_json(cfg.value("train", json::object()));
            if (tr_seed_set) tc.seed = tr_seed;

            double t0 = now_seconds();
            LoadedDataset data =
                load_dataset(tr_data, nc.head_resolutions.back());
            if (data.train.front().image.shape[0] != nc.input_size)
                throw DataError("network input_size " +
                                std::to_string(nc.input_size) +
                                " does not match radiograph size " +
                                std::to_string(data.train.front().image.shape[0]));
            fs::create_directories(tr_out);
            nn::Network<float> net(nc, tc.seed);
            auto hist = nn::train(net, tc, data.train, data.val,
                                  (fs::path(tr_out) / "train_log.jsonl").string());
            nn::save_checkpoint(net, (fs::path(tr_out) / "checkpoint.bin").string());
            json meta = {{"network", net_config_to_json(nc)},
                         {"density_scale", data.density_scale},
                         {"grid", {{"resolution", nc.head_resolutions.back()},
                                   {"extent", data.grid.extent}}},
                         {"loss", tc.loss}};
            std::ofstream((fs::path(tr_out) / "train_meta.json").string())
                << meta.dump(2) << "\n";
            append_timing(tr_out, "train", now_seconds() - t0);
            std::cout << "trained " << hist.size() << " epochs; final combined loss "
                      << (hist.empty() ? 0.0 : hist.back().combined) << "\n";
        } else if (rec->parsed()) {
            json meta = json::parse(
                read_file((fs::path(rec_train) / "train_meta.json").string()));
            nn::NetworkConfig nc = net_config_from_json(meta.at("network"));
            nn::Network<float> net(nc, 0);
            nn::load_checkpoint(net,
                                (fs::path(rec_train) / "checkpoint.bin").string());
            Radiograph r = load_radiograph(rec_in);
            GridSpec grid;
            grid.resolution = meta.at("grid").at("resolution").get<int>();
            grid.extent = meta.at("grid").at("extent").get<double>();
            DensityVolume v = reconstruct(net, preprocess_radiograph(r.pixels),
                                          meta.at("density_scale").get<double>(),
                                          grid);
            save_volume(v, rec_out);
            std::cout << "wrote " << rec_out << "\n";
        } else if (ext->parsed()) {
            DensityVolume v = load_volume(ext_in);
            ExtractOptions opts;
            opts.iso = ext_iso;
            opts.eps = ext_eps;
            opts.min_pts = ext_min_pts;
            opts.degree = ext_degree;
            opts.warn = [](const std::string& msg) {
                std::cerr << "extract: " << msg << "\n";
            };
            double t0 = now_seconds();
            ExtractResult res = extract_features(v, opts);
            fs::create_directories(ext_out);
            save_obj(res.mesh, (fs::path(ext_out) / "mesh.obj").string());
            save_cluster_labels(res.labels,
                                (fs::path(ext_out) / "labels.txt").string());
            save_surface_fits(res.fits, (fs::path(ext_out) / "fits.json").string());
            append_timing(ext_out, "extract", now_seconds() - t0);
            std::cout << "extracted " << res.fits.size() << " surface fits ("
                      << res.labels.cluster_count << " clusters) into " << ext_out
                      << "\n";
        } else if (rep->parsed()) {
            std::vector<std::pair<std::string, double>> timings;
            std::ifstream tin(fs::path(rep_run) / "timings.jsonl");
            std::string line;
            while (std::getline(tin, line)) {
                json j = json::parse(line);
                timings.emplace_back(j.at("stage").get<std::string>(),
                                     j.at("seconds").get<double>());
            }
            std::string report = build_report(rep_run, timings, kVersion);
            std::string out_path = rep_out.empty()
                                       ? (fs::path(rep_run) / "report.json").string()
                                       : rep_out;
            std::ofstream out(out_path);
            if (!out) throw DataError("cannot write " + out_path);
            out << report << "\n";
            std::cout << "report hash "
                      << json::parse(report).at("report_hash").get<std::string>()
                      << " -> " << out_path << "\n";
        } else {  // selftest
            return run_selftest();
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return 0;
}

#include "shellforge/projector.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <stdexcept>

#include <json.hpp>

#include "shellforge/parallel.hpp"

namespace shellforge {

namespace {

Vec3 normalize(const Vec3& d) {
    double n = std::sqrt(d[0] * d[0] + d[1] * d[1] + d[2] * d[2]);
    if (n == 0.0) throw std::invalid_argument("ray direction must be non-zero");
    return {d[0] / n, d[1] / n, d[2] / n};
}

Vec3 cross(const Vec3& a, const Vec3& b) {
    return {a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2],
            a[0] * b[1] - a[1] * b[0]};
}

// Orthonormal in-plane detector axes for a view direction.
void detector_basis(const Vec3& w, Vec3& u, Vec3& v) {
    Vec3 ref{0.0, 0.0, 1.0};
    if (std::abs(w[2]) > 0.9) ref = {1.0, 0.0, 0.0};
    u = normalize(cross(ref, w));
    v = cross(w, u);
}

}  // namespace

void BeamGeometry::validate() const {
    if (rows <= 0 || cols <= 0)
        throw std::invalid_argument("detector needs positive rows and cols");
    if (pitch < 0.0) throw std::invalid_argument("pixel pitch must be >= 0");
    if (kind == BeamKind::Cone) {
        if (!(source_distance > 0.0))
            throw std::invalid_argument("cone beam needs source_distance > 0");
        if (detector_distance < 0.0)
            throw std::invalid_argument("detector_distance must be >= 0");
    }
}

void MaterialSpec::validate() const {
    if (!(mass_attenuation > 0.0))
        throw std::invalid_argument("mass attenuation must be > 0");
}

double radiological_path(const DensityVolume& volume, const Ray& ray) {
    const GridSpec& g = volume.grid;
    const Vec3 d = normalize(ray.direction);
    const Vec3& o = ray.origin;
    const double h = g.voxel_size();
    const int res = g.resolution;

    Vec3 lo{g.origin[0] - g.extent, g.origin[1] - g.extent, g.origin[2] - g.extent};
    Vec3 hi{g.origin[0] + g.extent, g.origin[1] + g.extent, g.origin[2] + g.extent};

    // Slab clipping of the half-line t >= 0 against the grid box.
    double tmin = 0.0;
    double tmax = std::numeric_limits<double>::infinity();
    for (int i = 0; i < 3; ++i) {
        if (std::abs(d[i]) < 1e-300) {
            if (o[i] < lo[i] || o[i] > hi[i]) return 0.0;
            continue;
        }
        double t0 = (lo[i] - o[i]) / d[i];
        double t1 = (hi[i] - o[i]) / d[i];
        if (t0 > t1) std::swap(t0, t1);
        tmin = std::max(tmin, t0);
        tmax = std::min(tmax, t1);
    }
    if (!(tmin < tmax)) return 0.0;

    // Entry voxel, nudged off the boundary.
    double t_entry = tmin + 1e-12 * (tmax - tmin);
    int idx[3];
    for (int i = 0; i < 3; ++i) {
        double p = o[i] + t_entry * d[i];
        idx[i] = std::clamp(static_cast<int>(std::floor((p - lo[i]) / h)), 0, res - 1);
    }

    int step[3];
    double t_next[3], t_delta[3];
    for (int i = 0; i < 3; ++i) {
        if (std::abs(d[i]) < 1e-300) {
            step[i] = 0;
            t_next[i] = std::numeric_limits<double>::infinity();
            t_delta[i] = std::numeric_limits<double>::infinity();
        } else if (d[i] > 0.0) {
            step[i] = 1;
            t_next[i] = (lo[i] + (idx[i] + 1) * h - o[i]) / d[i];
            t_delta[i] = h / d[i];
        } else {
            step[i] = -1;
            t_next[i] = (lo[i] + idx[i] * h - o[i]) / d[i];
            t_delta[i] = -h / d[i];
        }
    }

    double acc = 0.0;
    double t = tmin;
    while (t < tmax) {
        int axis = 0;
        if (t_next[1] < t_next[axis]) axis = 1;
        if (t_next[2] < t_next[axis]) axis = 2;
        double t_exit = std::min(t_next[axis], tmax);
        double len = t_exit - t;
        if (len > 0.0) acc += len * volume.at(idx[0], idx[1], idx[2]);
        t = t_exit;
        if (t >= tmax) break;
        idx[axis] += step[axis];
        if (idx[axis] < 0 || idx[axis] >= res) break;
        t_next[axis] += t_delta[axis];
    }
    return acc;
}

Radiograph project(const DensityVolume& volume, const BeamGeometry& geometry,
                   const MaterialSpec& material) {
    geometry.validate();
    material.validate();
    const GridSpec& g = volume.grid;

    BeamGeometry geo = geometry;
    Vec3 w = normalize(geo.view_axis);
    Vec3 u, v;
    detector_basis(w, u, v);

    double bounding = std::sqrt(3.0) * g.extent;
    double mag = 1.0;
    Vec3 source{};
    if (geo.kind == BeamKind::Cone) {
        if (geo.source_distance <= bounding)
            throw std::invalid_argument(
                "cone-beam source lies inside the volume bounding sphere");
        mag = (geo.source_distance + geo.detector_distance) / geo.source_distance;
        source = {g.origin[0] - geo.source_distance * w[0],
                  g.origin[1] - geo.source_distance * w[1],
                  g.origin[2] - geo.source_distance * w[2]};
    }
    if (geo.pitch == 0.0)
        geo.pitch = 2.0 * g.extent * mag / std::min(geo.rows, geo.cols);

    Radiograph out;
    out.geometry = geo;
    out.pixels = Image(geo.rows, geo.cols, 1.0f);
    const double back = geo.kind == BeamKind::Cone ? geo.detector_distance
                                                   : 2.0 * bounding;

    parallel_for(geo.rows, [&](int r) {
        double voff = (r - 0.5 * (geo.rows - 1)) * geo.pitch;
        for (int c = 0; c < geo.cols; ++c) {
            double uoff = (c - 0.5 * (geo.cols - 1)) * geo.pitch;
            Ray ray;
            if (geo.kind == BeamKind::Parallel) {
                ray.origin = {g.origin[0] + uoff * u[0] + voff * v[0] - back * w[0],
                              g.origin[1] + uoff * u[1] + voff * v[1] - back * w[1],
                              g.origin[2] + uoff * u[2] + voff * v[2] - back * w[2]};
                ray.direction = w;
            } else {
                Vec3 pix = {g.origin[0] + back * w[0] + uoff * u[0] + voff * v[0],
                            g.origin[1] + back * w[1] + uoff * u[1] + voff * v[1],
                            g.origin[2] + back * w[2] + uoff * u[2] + voff * v[2]};
                ray.origin = source;
                ray.direction = {pix[0] - source[0], pix[1] - source[1],
                                 pix[2] - source[2]};
            }
            double path = radiological_path(volume, ray);
            out.pixels.at(r, c) =
                static_cast<float>(std::exp(-material.mass_attenuation * path));
        }
    });
    return out;
}

Image absorption_image(const Radiograph& radiograph) {
    Image out(radiograph.pixels.rows, radiograph.pixels.cols);
    for (std::size_t i = 0; i < out.v.size(); ++i) {
        float t = radiograph.pixels.v[i];
        if (!(t > 0.0f))
            throw std::invalid_argument("absorption image needs positive pixels");
        out.v[i] = -std::log(t);
    }
    return out;
}

void save_radiograph(const Radiograph& r, const std::string& path) {
    std::ofstream raw(path, std::ios::binary);
    if (!raw) throw std::runtime_error("cannot write radiograph: " + path);
    raw.write(reinterpret_cast<const char*>(r.pixels.v.data()),
              static_cast<std::streamsize>(r.pixels.v.size() * sizeof(float)));

    nlohmann::json side;
    side["rows"] = r.geometry.rows;
    side["cols"] = r.geometry.cols;
    side["pitch"] = r.geometry.pitch;
    side["kind"] = r.geometry.kind == BeamKind::Cone ? "cone" : "parallel";
    side["source_distance"] = r.geometry.source_distance;
    side["detector_distance"] = r.geometry.detector_distance;
    side["view_axis"] = {r.geometry.view_axis[0], r.geometry.view_axis[1],
                         r.geometry.view_axis[2]};
    std::ofstream js(path + ".json");
    js << side.dump(2) << "\n";
}

Radiograph load_radiograph(const std::string& path) {
    std::ifstream js(path + ".json");
    if (!js) throw std::runtime_error("missing radiograph sidecar: " + path + ".json");
    nlohmann::json side = nlohmann::json::parse(js);

    Radiograph r;
    r.geometry.rows = side.at("rows").get<int>();
    r.geometry.cols = side.at("cols").get<int>();
    r.geometry.pitch = side.at("pitch").get<double>();
    r.geometry.kind = side.at("kind").get<std::string>() == "cone"
                          ? BeamKind::Cone
                          : BeamKind::Parallel;
    r.geometry.source_distance = side.at("source_distance").get<double>();
    r.geometry.detector_distance = side.at("detector_distance").get<double>();
    if (side.contains("view_axis")) {
        auto a = side["view_axis"];
        r.geometry.view_axis = {a.at(0).get<double>(), a.at(1).get<double>(),
                                a.at(2).get<double>()};
    }
    r.pixels = Image(r.geometry.rows, r.geometry.cols);
    std::ifstream raw(path, std::ios::binary);
    if (!raw) throw std::runtime_error("cannot read radiograph: " + path);
    raw.read(reinterpret_cast<char*>(r.pixels.v.data()),
             static_cast<std::streamsize>(r.pixels.v.size() * sizeof(float)));
    if (static_cast<std::size_t>(raw.gcount()) != r.pixels.v.size() * sizeof(float))
        throw std::runtime_error("radiograph payload truncated: " + path);
    return r;
}

}  // namespace shellforge

#include "shellforge/shell_model.hpp"

#include <cmath>
#include <fstream>
#include <stdexcept>

#include <json.hpp>

#include "shellforge/parallel.hpp"

namespace shellforge {

namespace {

// sum a_n P_n(x) with x = cos(theta), Bonnet recurrence.
double legendre_series(double x, const std::vector<double>& coeffs) {
    double pm1 = 1.0;  // P_0
    double acc = coeffs[0];
    if (coeffs.size() == 1) return acc;
    double p = x;  // P_1
    acc += coeffs[1] * p;
    for (std::size_t n = 1; n + 1 < coeffs.size(); ++n) {
        double pnext = ((2.0 * n + 1.0) * x * p - n * pm1) / (n + 1.0);
        pm1 = p;
        p = pnext;
        acc += coeffs[n + 1] * p;
    }
    return acc;
}

struct Mat3 {
    double m[3][3];
};

Mat3 invert(const ShearMatrix& s) {
    const auto& a = s;
    double det = a[0][0] * (a[1][1] * a[2][2] - a[1][2] * a[2][1]) -
                 a[0][1] * (a[1][0] * a[2][2] - a[1][2] * a[2][0]) +
                 a[0][2] * (a[1][0] * a[2][1] - a[1][1] * a[2][0]);
    if (std::abs(det) < 1e-12)
        throw std::invalid_argument("shear matrix is singular");
    double inv = 1.0 / det;
    Mat3 r;
    r.m[0][0] = (a[1][1] * a[2][2] - a[1][2] * a[2][1]) * inv;
    r.m[0][1] = (a[0][2] * a[2][1] - a[0][1] * a[2][2]) * inv;
    r.m[0][2] = (a[0][1] * a[1][2] - a[0][2] * a[1][1]) * inv;
    r.m[1][0] = (a[1][2] * a[2][0] - a[1][0] * a[2][2]) * inv;
    r.m[1][1] = (a[0][0] * a[2][2] - a[0][2] * a[2][0]) * inv;
    r.m[1][2] = (a[0][2] * a[1][0] - a[0][0] * a[1][2]) * inv;
    r.m[2][0] = (a[1][0] * a[2][1] - a[1][1] * a[2][0]) * inv;
    r.m[2][1] = (a[0][1] * a[2][0] - a[0][0] * a[2][1]) * inv;
    r.m[2][2] = (a[0][0] * a[1][1] - a[0][1] * a[1][0]) * inv;
    return r;
}

Vec3 mat_apply(const Mat3& m, const Vec3& p) {
    return {m.m[0][0] * p[0] + m.m[0][1] * p[1] + m.m[0][2] * p[2],
            m.m[1][0] * p[0] + m.m[1][1] * p[1] + m.m[1][2] * p[2],
            m.m[2][0] * p[0] + m.m[2][1] * p[1] + m.m[2][2] * p[2]};
}

// Density at a point already pulled back to model coordinates.
double density_at_model_point(const Vec3& q, const ShellModel& model) {
    double x = q[0], y = q[1], z = q[2];

    if (model.fill_tube_radius > 0.0 && z > 0.0 &&
        std::sqrt(x * x + y * y) < model.fill_tube_radius)
        return model.fill_tube_density;

    double r = std::sqrt(x * x + y * y + z * z);
    double cos_theta = r > 0.0 ? z / r : 1.0;

    // Joint band carves the outer shell only.
    if (!model.layers.empty() && model.joint_size > 0.0 &&
        std::abs(z) <= 0.5 * model.joint_size) {
        const ShellLayer& outer = model.layers.front();
        double mid = legendre_series(cos_theta, outer.coeffs);
        if (r >= mid - 0.5 * outer.thickness && r <= mid + 0.5 * outer.thickness)
            return 0.0;
    }

    // Innermost matching layer wins.
    for (auto it = model.layers.rbegin(); it != model.layers.rend(); ++it) {
        double mid = legendre_series(cos_theta, it->coeffs);
        if (r >= mid - 0.5 * it->thickness && r <= mid + 0.5 * it->thickness)
            return it->density;
    }
    return 0.0;
}

}  // namespace

void ShellLayer::validate() const {
    if (!(density >= 0.0)) throw std::invalid_argument("layer density must be >= 0");
    if (!(thickness > 0.0)) throw std::invalid_argument("layer thickness must be > 0");
    if (coeffs.empty() || coeffs.size() > 9)
        throw std::invalid_argument("layer needs 1..9 Legendre coefficients (N <= 8)");
}

void ShellModel::validate() const {
    for (const auto& l : layers) l.validate();
    if (!(joint_size >= 0.0)) throw std::invalid_argument("joint_size must be >= 0");
    if (!(fill_tube_radius >= 0.0))
        throw std::invalid_argument("fill_tube_radius must be >= 0");
    for (int i = 0; i < 3; ++i)
        if (shear[i][i] != 1.0)
            throw std::invalid_argument("shear matrix must have a unit diagonal");
}

void ShellModel::check_nesting() const {
    // 32 polar samples; interfaces are azimuthally symmetric so the nominal
    // 32x64 angular grid collapses to its theta axis.
    constexpr int kTheta = 32;
    for (std::size_t k = 0; k + 1 < layers.size(); ++k) {
        for (int it = 0; it < kTheta; ++it) {
            double theta = M_PI * (it + 0.5) / kTheta;
            double x = std::cos(theta);
            double inner_k = legendre_series(x, layers[k].coeffs) -
                             0.5 * layers[k].thickness;
            double outer_next = legendre_series(x, layers[k + 1].coeffs) +
                                0.5 * layers[k + 1].thickness;
            if (!(inner_k > outer_next))
                throw std::invalid_argument(
                    "layers not nested: layer " + std::to_string(k + 1) +
                    " reaches into layer " + std::to_string(k));
        }
    }
    for (std::size_t k = 0; k < layers.size(); ++k) {
        for (int it = 0; it < kTheta; ++it) {
            double theta = M_PI * (it + 0.5) / kTheta;
            double inner = legendre_series(std::cos(theta), layers[k].coeffs) -
                           0.5 * layers[k].thickness;
            if (!(inner >= 0.0))
                throw std::invalid_argument("layer " + std::to_string(k) +
                                            " has a negative inner radius");
        }
    }
}

double legendre_radius(double theta, const std::vector<double>& coeffs) {
    if (coeffs.empty()) throw std::invalid_argument("empty coefficient list");
    return legendre_series(std::cos(theta), coeffs);
}

Vec3 apply_shear(const Vec3& p, const ShellModel& model) {
    const auto& s = model.shear;
    return {s[0][0] * p[0] + s[0][1] * p[1] + s[0][2] * p[2],
            s[1][0] * p[0] + s[1][1] * p[1] + s[1][2] * p[2],
            s[2][0] * p[0] + s[2][1] * p[1] + s[2][2] * p[2]};
}

double evaluate_density(const Vec3& p, const ShellModel& model) {
    Mat3 inv = invert(model.shear);
    return density_at_model_point(mat_apply(inv, p), model);
}

DensityVolume voxelize(const ShellModel& model, const GridSpec& grid,
                       int supersample) {
    if (supersample < 1) throw std::invalid_argument("supersample must be >= 1");
    grid.validate();
    model.validate();
    model.check_nesting();

    Mat3 inv = invert(model.shear);
    DensityVolume out(grid);
    const int res = grid.resolution;
    const double h = grid.voxel_size();
    const double sub = h / supersample;
    const double norm = 1.0 / (supersample * supersample * supersample);

    parallel_for(res, [&](int iz) {
        for (int iy = 0; iy < res; ++iy) {
            for (int ix = 0; ix < res; ++ix) {
                Vec3 base = {grid.origin[0] - grid.extent + ix * h,
                             grid.origin[1] - grid.extent + iy * h,
                             grid.origin[2] - grid.extent + iz * h};
                double acc = 0.0;
                for (int sz = 0; sz < supersample; ++sz)
                    for (int sy = 0; sy < supersample; ++sy)
                        for (int sx = 0; sx < supersample; ++sx) {
                            Vec3 p = {base[0] + (sx + 0.5) * sub,
                                      base[1] + (sy + 0.5) * sub,
                                      base[2] + (sz + 0.5) * sub};
                            acc += density_at_model_point(mat_apply(inv, p), model);
                        }
                out.at(ix, iy, iz) = static_cast<float>(acc * norm);
            }
        }
    });
    return out;
}

std::string model_to_json(const ShellModel& model) {
    nlohmann::json j;
    j["layers"] = nlohmann::json::array();
    for (const auto& l : model.layers) {
        nlohmann::json jl;
        jl["density"] = l.density;
        jl["coeffs"] = l.coeffs;
        jl["thickness"] = l.thickness;
        j["layers"].push_back(jl);
    }
    j["joint_size"] = model.joint_size;
    j["fill_tube_radius"] = model.fill_tube_radius;
    if (model.fill_tube_density != 0.0)
        j["fill_tube_density"] = model.fill_tube_density;
    j["shear"] = {{model.shear[0][0], model.shear[0][1], model.shear[0][2]},
                  {model.shear[1][0], model.shear[1][1], model.shear[1][2]},
                  {model.shear[2][0], model.shear[2][1], model.shear[2][2]}};
    return j.dump(2);
}

ShellModel model_from_json(const std::string& json_text) {
    nlohmann::json j = nlohmann::json::parse(json_text);
    ShellModel m;
    for (const auto& jl : j.at("layers")) {
        ShellLayer l;
        l.density = jl.at("density").get<double>();
        l.coeffs = jl.at("coeffs").get<std::vector<double>>();
        l.thickness = jl.at("thickness").get<double>();
        m.layers.push_back(std::move(l));
    }
    m.joint_size = j.value("joint_size", 0.0);
    m.fill_tube_radius = j.value("fill_tube_radius", 0.0);
    m.fill_tube_density = j.value("fill_tube_density", 0.0);
    if (j.contains("shear")) {
        for (int r = 0; r < 3; ++r)
            for (int c = 0; c < 3; ++c)
                m.shear[r][c] = j["shear"].at(r).at(c).get<double>();
    }
    m.validate();
    return m;
}

void save_model(const ShellModel& model, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write model: " + path);
    out << model_to_json(model) << "\n";
}

ShellModel load_model(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot read model: " + path);
    std::string text((std::istreambuf_iterator<char>(in)),
                     std::istreambuf_iterator<char>());
    return model_from_json(text);
}

}  // namespace shellforge

#include "shellforge/feat/mesh.hpp"

#include <cmath>
#include <cstdint>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <utility>
#include <unordered_map>

namespace shellforge {

namespace {

Vec3 sub(const Vec3& a, const Vec3& b) {
    return {a[0] - b[0], a[1] - b[1], a[2] - b[2]};
}

double triangle_area(const Vec3& a, const Vec3& b, const Vec3& c) {
    Vec3 u = sub(b, a), v = sub(c, a);
    double cx = u[1] * v[2] - u[2] * v[1];
    double cy = u[2] * v[0] - u[0] * v[2];
    double cz = u[0] * v[1] - u[1] * v[0];
    return 0.5 * std::sqrt(cx * cx + cy * cy + cz * cz);
}

}  // namespace

Vec3 mesh_center(const Mesh& mesh) {
    if (mesh.faces.empty())
        throw std::invalid_argument("mesh_center needs a non-empty mesh");
    Vec3 acc{0.0, 0.0, 0.0};
    double total_area = 0.0;
    for (const auto& f : mesh.faces) {
        const Vec3& a = mesh.vertices[f[0]];
        const Vec3& b = mesh.vertices[f[1]];
        const Vec3& c = mesh.vertices[f[2]];
        double area = triangle_area(a, b, c);
        for (int i = 0; i < 3; ++i)
            acc[i] += area * (a[i] + b[i] + c[i]) / 3.0;
        total_area += area;
    }
    if (total_area <= 0.0)
        throw std::invalid_argument("mesh_center: degenerate mesh (zero area)");
    return {acc[0] / total_area, acc[1] / total_area, acc[2] / total_area};
}

bool mesh_is_closed(const Mesh& mesh) {
    std::unordered_map<std::uint64_t, int> edge_count;
    auto key = [](int a, int b) {
        if (a > b) std::swap(a, b);
        return (static_cast<std::uint64_t>(a) << 32) | static_cast<std::uint32_t>(b);
    };
    for (const auto& f : mesh.faces) {
        ++edge_count[key(f[0], f[1])];
        ++edge_count[key(f[1], f[2])];
        ++edge_count[key(f[2], f[0])];
    }
    for (const auto& [k, n] : edge_count)
        if (n != 2) return false;
    return !mesh.faces.empty();
}

void save_obj(const Mesh& mesh, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write mesh: " + path);
    out.precision(9);
    for (const auto& v : mesh.vertices)
        out << "v " << v[0] << " " << v[1] << " " << v[2] << "\n";
    for (const auto& f : mesh.faces)
        out << "f " << f[0] + 1 << " " << f[1] + 1 << " " << f[2] + 1 << "\n";
}

Mesh load_obj(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot read mesh: " + path);
    Mesh mesh;
    std::string line;
    while (std::getline(in, line)) {
        std::istringstream ss(line);
        std::string tag;
        ss >> tag;
        if (tag == "v") {
            Vec3 v;
            ss >> v[0] >> v[1] >> v[2];
            mesh.vertices.push_back(v);
        } else if (tag == "f") {
            std::array<int, 3> f;
            ss >> f[0] >> f[1] >> f[2];
            mesh.faces.push_back({f[0] - 1, f[1] - 1, f[2] - 1});
        }
    }
    return mesh;
}

}  // namespace shellforge

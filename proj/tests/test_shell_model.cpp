#include <doctest.h>

#include <cmath>
#include <stdexcept>
#include <utility>

#include "shellforge/shell_model.hpp"

using namespace shellforge;

namespace {

ShellModel single_sphere(double radius, double density, double thickness) {
    ShellModel m;
    ShellLayer l;
    l.density = density;
    l.coeffs = {radius};
    l.thickness = thickness;
    m.layers = {l};
    return m;
}

// A solid ball of radius R is a "shell" whose wall spans [0, R].
ShellModel solid_sphere(double radius, double density) {
    return single_sphere(radius / 2.0, density, radius);
}

}  // namespace

TEST_CASE("legendre_radius closed forms") {
    CHECK(legendre_radius(0.37, {1.0}) == doctest::Approx(1.0));
    CHECK(legendre_radius(2.2, {1.0}) == doctest::Approx(1.0));
    // P_n(1) = 1 for all n.
    CHECK(legendre_radius(0.0, {1.0, 0.0, 0.1}) == doctest::Approx(1.1));
    // P_2(0) = -1/2.
    CHECK(legendre_radius(M_PI / 2.0, {1.0, 0.0, 0.1}) == doctest::Approx(0.95));
    // P_1 = cos(theta).
    CHECK(legendre_radius(1.0, {0.0, 2.0}) == doctest::Approx(2.0 * std::cos(1.0)));
    CHECK_THROWS(legendre_radius(0.0, {}));
}

TEST_CASE("apply_shear matrix rows and columns") {
    ShellModel m = single_sphere(0.5, 1.0, 0.1);
    Vec3 p{1.0, 2.0, 3.0};
    Vec3 q = apply_shear(p, m);
    CHECK(q[0] == 1.0);
    CHECK(q[1] == 2.0);
    CHECK(q[2] == 3.0);

    m.shear[0][1] = 0.5;  // s_xy
    q = apply_shear({0.0, 1.0, 0.0}, m);
    CHECK(q[0] == 0.5);
    CHECK(q[1] == 1.0);
    CHECK(q[2] == 0.0);

    m.shear = identity_shear();
    m.shear[1][0] = 0.3;  // s_yx
    m.shear[2][0] = 0.2;  // s_zx
    q = apply_shear({1.0, 0.0, 0.0}, m);
    CHECK(q[0] == 1.0);
    CHECK(q[1] == doctest::Approx(0.3));
    CHECK(q[2] == doctest::Approx(0.2));
}

TEST_CASE("evaluate_density layer, joint and tube cases") {
    ShellModel m = single_sphere(0.5, 3.0, 0.2);  // wall [0.4, 0.6]
    CHECK(evaluate_density({5.0, 5.0, 5.0}, m) == 0.0);
    CHECK(evaluate_density({0.5, 0.0, 0.0}, m) == 3.0);
    CHECK(evaluate_density({0.0, 0.0, 0.0}, m) == 0.0);

    SUBCASE("joint band zeroes the outer wall near the equator") {
        m.joint_size = 0.1;
        CHECK(evaluate_density({0.5, 0.0, 0.0}, m) == 0.0);       // z = 0 in band
        CHECK(evaluate_density({0.0, 0.0, 0.5}, m) == 3.0);       // |z| > s/2
        CHECK(evaluate_density({0.5, 0.0, 0.04}, m) == 0.0);      // inside band
        CHECK(evaluate_density({0.49, 0.0, 0.07}, m) == 3.0);     // past band
    }

    SUBCASE("fill tube carves a half-cylinder for z > 0") {
        m.fill_tube_radius = 0.05;
        CHECK(evaluate_density({0.0, 0.0, 0.5}, m) == 0.0);       // inside tube
        CHECK(evaluate_density({0.0, 0.0, -0.5}, m) == 3.0);      // tube is one-sided
        m.fill_tube_density = 0.7;
        CHECK(evaluate_density({0.0, 0.0, 0.5}, m) == 0.7);
    }

    SUBCASE("innermost matching layer wins") {
        ShellLayer inner;
        inner.density = 9.0;
        inner.coeffs = {0.2};
        inner.thickness = 0.1;
        m.layers.push_back(inner);
        CHECK(evaluate_density({0.2, 0.0, 0.0}, m) == 9.0);
        CHECK(evaluate_density({0.5, 0.0, 0.0}, m) == 3.0);
    }
}

TEST_CASE("voxelize basics") {
    GridSpec g;
    g.resolution = 64;
    g.extent = 1.0;

    SUBCASE("empty model gives an all-zero volume") {
        ShellModel m;
        DensityVolume v = voxelize(m, g, 1);
        for (float x : v.values) CHECK(x == 0.0f);
    }

    SUBCASE("solid sphere mass matches the analytic volume within 1%") {
        double R = 0.5;
        DensityVolume v = voxelize(solid_sphere(R, 1.0), g, 4);
        double expected = 4.0 / 3.0 * M_PI * R * R * R;
        CHECK(v.total_mass() == doctest::Approx(expected).epsilon(0.01));
    }

    SUBCASE("values are non-negative") {
        DensityVolume v = voxelize(single_sphere(0.5, 2.0, 0.2), g, 2);
        for (float x : v.values) CHECK(x >= 0.0f);
    }

    SUBCASE("joint band voxels inside the wall are exactly zero") {
        ShellModel m = single_sphere(0.5, 3.0, 0.2);
        m.joint_size = 0.25;
        DensityVolume v = voxelize(m, g, 2);
        double h = g.voxel_size();
        int hits = 0;
        for (int iz = 0; iz < g.resolution; ++iz)
            for (int iy = 0; iy < g.resolution; ++iy)
                for (int ix = 0; ix < g.resolution; ++ix) {
                    Vec3 p = g.voxel_center(ix, iy, iz);
                    if (std::abs(p[2]) > 0.5 * m.joint_size - h) continue;
                    double r = std::sqrt(p[0] * p[0] + p[1] * p[1] + p[2] * p[2]);
                    // Stay a voxel diagonal clear of the wall boundary.
                    double margin = h * std::sqrt(3.0);
                    if (r < 0.4 + margin || r > 0.6 - margin) continue;
                    CHECK(v.at(ix, iy, iz) == 0.0f);
                    ++hits;
                }
        CHECK(hits > 0);
    }

    SUBCASE("non-nested layers are rejected with the layer index") {
        ShellModel m = single_sphere(0.5, 1.0, 0.2);
        ShellLayer inner;
        inner.coeffs = {0.45};  // outer surface 0.5 overlaps wall inner 0.4
        inner.thickness = 0.1;
        m.layers.push_back(inner);
        CHECK_THROWS_WITH_AS(voxelize(m, g, 1), doctest::Contains("layer 1"),
                             std::invalid_argument);
    }

    SUBCASE("supersample must be positive") {
        CHECK_THROWS(voxelize(single_sphere(0.5, 1.0, 0.1), g, 0));
    }
}

TEST_CASE("shear pull-back consistency at supersample=1") {
    GridSpec g;
    g.resolution = 32;
    g.extent = 1.0;
    ShellModel sheared = single_sphere(0.5, 2.0, 0.2);
    sheared.shear[0][1] = 0.4;
    sheared.shear[2][0] = -0.15;
    ShellModel plain = sheared;
    plain.shear = identity_shear();

    // Independent route: solve S q = p by Gaussian elimination, then sample
    // the unsheared model at q.
    auto solve = [&](Vec3 p) {
        double a[3][4] = {
            {sheared.shear[0][0], sheared.shear[0][1], sheared.shear[0][2], p[0]},
            {sheared.shear[1][0], sheared.shear[1][1], sheared.shear[1][2], p[1]},
            {sheared.shear[2][0], sheared.shear[2][1], sheared.shear[2][2], p[2]}};
        for (int col = 0; col < 3; ++col) {
            int piv = col;
            for (int r = col + 1; r < 3; ++r)
                if (std::abs(a[r][col]) > std::abs(a[piv][col])) piv = r;
            std::swap(a[col], a[piv]);
            for (int r = 0; r < 3; ++r) {
                if (r == col) continue;
                double f = a[r][col] / a[col][col];
                for (int c = col; c < 4; ++c) a[r][c] -= f * a[col][c];
            }
        }
        return Vec3{a[0][3] / a[0][0], a[1][3] / a[1][1], a[2][3] / a[2][2]};
    };

    DensityVolume v = voxelize(sheared, g, 1);
    for (int iz = 0; iz < g.resolution; iz += 3)
        for (int iy = 0; iy < g.resolution; iy += 3)
            for (int ix = 0; ix < g.resolution; ix += 3) {
                Vec3 q = solve(g.voxel_center(ix, iy, iz));
                CHECK(v.at(ix, iy, iz) ==
                      doctest::Approx(evaluate_density(q, plain)).epsilon(1e-12));
            }
}

TEST_CASE("azimuthal symmetry without shear, joint or tube") {
    ShellModel m = single_sphere(0.5, 2.0, 0.2);
    m.layers[0].coeffs = {0.5, 0.0, 0.03};  // P2 perturbation, still symmetric in phi
    for (double theta : {0.3, 1.0, 1.8, 2.8}) {
        for (double r : {0.45, 0.5, 0.55}) {
            double d0 = evaluate_density(
                {r * std::sin(theta), 0.0, r * std::cos(theta)}, m);
            for (double phi : {0.7, 2.1, -2.9}) {
                Vec3 p = {r * std::sin(theta) * std::cos(phi),
                          r * std::sin(theta) * std::sin(phi),
                          r * std::cos(theta)};
                CHECK(evaluate_density(p, m) == d0);
            }
        }
    }
}

TEST_CASE("monotone layer transitions along rays from the origin") {
    ShellModel m = single_sphere(0.6, 1.0, 0.1);
    ShellLayer mid, core;
    mid.density = 2.0;
    mid.coeffs = {0.4};
    mid.thickness = 0.1;
    core.density = 3.0;
    core.coeffs = {0.1};
    core.thickness = 0.2;
    m.layers = {m.layers[0], mid, core};
    m.check_nesting();

    for (double theta : {0.2, 1.1, 2.4}) {
        for (double phi : {0.0, 1.3, -2.0}) {
            int last_layer = 3;  // innermost index, walking outward must not rise
            bool ok = true;
            for (double r = 0.01; r < 1.0; r += 0.004) {
                Vec3 p = {r * std::sin(theta) * std::cos(phi),
                          r * std::sin(theta) * std::sin(phi),
                          r * std::cos(theta)};
                double d = evaluate_density(p, m);
                int layer = d == 3.0 ? 3 : d == 2.0 ? 2 : d == 1.0 ? 1 : -1;
                if (layer > 0) {
                    if (layer > last_layer) ok = false;
                    last_layer = layer;
                }
            }
            CHECK(ok);
        }
    }
}

TEST_CASE("model JSON round trip") {
    ShellModel m = single_sphere(0.5, 3.0, 0.2);
    m.joint_size = 0.05;
    m.fill_tube_radius = 0.02;
    m.shear[0][1] = 0.25;
    std::string text = model_to_json(m);
    ShellModel back = model_from_json(text);
    CHECK(back.layers.size() == 1);
    CHECK(back.layers[0].density == 3.0);
    CHECK(back.layers[0].coeffs == m.layers[0].coeffs);
    CHECK(back.joint_size == 0.05);
    CHECK(back.fill_tube_radius == 0.02);
    CHECK(back.shear[0][1] == 0.25);
}

TEST_CASE("validation rejects bad fields") {
    ShellLayer l;
    l.thickness = 0.0;
    CHECK_THROWS(l.validate());
    l.thickness = 0.1;
    l.coeffs.assign(10, 0.1);  // N = 9 > 8
    CHECK_THROWS(l.validate());

    ShellModel m;
    m.shear[1][1] = 2.0;
    CHECK_THROWS(m.validate());
}

#include "doctest.h"

#include <cmath>
#include <numbers>
#include <sstream>

#include "stochflow/grid_field.hpp"
#include "stochflow/rng.hpp"

using namespace stochflow;

namespace {

constexpr double kPi = std::numbers::pi;

GridField<2> torus_sample(std::size_t n) {
    auto g = GridField<2>::torus(Domain<2>::torus(2 * kPi), {n, n}, 1);
    g.fill([](const Vec2& x) { return std::array<double, 1>{std::sin(x[0]) * std::cos(2 * x[1])}; });
    return g;
}

double max_grad_error(const GridField<2>& g) {
    PhiloxStream rng({21, 0});
    double err = 0.0;
    for (int i = 0; i < 200; ++i) {
        const Vec2 x{{2 * kPi * rng.uniform(), 2 * kPi * rng.uniform()}};
        double v;
        Vec2 gr;
        g.interpolate(x, std::span<double>(&v, 1), std::span<Vec2>(&gr, 1));
        const Vec2 exact{{std::cos(x[0]) * std::cos(2 * x[1]), -2 * std::sin(x[0]) * std::sin(2 * x[1])}};
        err = std::max(err, norm(gr - exact));
    }
    return err;
}

}  // namespace

TEST_CASE("grid interpolation reproduces node values exactly") {
    const auto g = torus_sample(16);
    for (std::size_t i = 0; i < g.node_count(); ++i) CHECK(g.value(g.node(i)) == g.at(i, 0));
    auto b = GridField<3>::box(Vec3{{-1, -1, -1}}, Vec3{{1, 1, 1}}, {5, 6, 7}, 2);
    b.fill([](const Vec3& x) { return std::array<double, 2>{x[0] * x[1] + x[2], std::exp(x[0])}; });
    for (std::size_t i = 0; i < b.node_count(); ++i) {
        CHECK(b.value(b.node(i), 0) == doctest::Approx(b.at(i, 0)).epsilon(1e-14));
        CHECK(b.value(b.node(i), 1) == doctest::Approx(b.at(i, 1)).epsilon(1e-14));
    }
}

TEST_CASE("interpolated gradient converges at second order or better") {
    const double e1 = max_grad_error(torus_sample(16));
    const double e2 = max_grad_error(torus_sample(32));
    const double e3 = max_grad_error(torus_sample(64));
    const double order1 = std::log2(e1 / e2), order2 = std::log2(e2 / e3);
    CHECK(order1 > 1.8);
    CHECK(order2 > 1.8);
}

TEST_CASE("free-space grids vanish outside the box and wrap on a torus") {
    auto b = GridField<2>::box(Vec2{{0, 0}}, Vec2{{1, 1}}, {5, 5}, 1);
    b.fill([](const Vec2&) { return std::array<double, 1>{1.0}; });
    CHECK(b.value(Vec2{{3.0, 0.5}}) == 0.0);
    const auto t = torus_sample(16);
    const Vec2 x{{0.37, 1.2}};
    CHECK(t.value(x) == doctest::Approx(t.value(x + Vec2{{2 * kPi, -4 * kPi}})).epsilon(1e-12));
}

TEST_CASE("serialization round-trips bit-exactly") {
    auto g = GridField<3>::box(Vec3{{-1.5, 0.1, 2}}, Vec3{{1.25, 0.7, 3}}, {4, 3, 5}, 3);
    PhiloxStream rng({22, 0});
    for (auto& v : g.values()) v = rng.normal() * 1e-3 + 1.0 / 3.0;
    std::stringstream ss;
    g.write(ss);
    const auto r = GridField<3>::read(ss);
    CHECK(r == g);

    const auto t = torus_sample(8);
    std::stringstream s2;
    t.write(s2);
    CHECK(GridField<2>::read(s2) == t);
}

TEST_CASE("grid adapters expose values and gradients") {
    auto g = GridField<2>::torus(Domain<2>::torus(2 * kPi), {32, 32}, 2);
    g.fill([](const Vec2& x) { return std::array<double, 2>{std::sin(x[1]), -std::sin(x[0])}; });
    const auto u = velocity_from_grid(g);
    const Vec2 x{{0.4, 0.9}};
    CHECK(u.value(0.0, x)[0] == doctest::Approx(std::sin(0.9)).epsilon(1e-3));
    CHECK(u.gradient(0.0, x)(0, 1) == doctest::Approx(std::cos(0.9)).epsilon(1e-2));

    auto h = g;
    for (auto& v : h.values()) v *= 3.0;
    const auto lerp = velocity_between(g, 0.0, h, 2.0);
    CHECK(lerp.value(1.0, x)[0] == doctest::Approx(2.0 * u.value(0.0, x)[0]).epsilon(1e-12));
}

#include "doctest.h"

#include <cmath>
#include <numbers>

#include "stochflow/grid_field.hpp"
#include "stochflow/spectral.hpp"

using namespace stochflow;

namespace {

constexpr double kPi = std::numbers::pi;

double max_abs(const GridField<2>& g) {
    double m = 0.0;
    for (double v : g.values()) m = std::max(m, std::abs(v));
    return m;
}

double max_diff(const GridField<2>& a, const GridField<2>& b) {
    double m = 0.0;
    for (std::size_t i = 0; i < a.values().size(); ++i) m = std::max(m, std::abs(a.values()[i] - b.values()[i]));
    return m;
}

const Domain<2> kTorus = Domain<2>::torus(2 * kPi);

// φ = sin(x)cos(2y) + cos(3x): gradient part. w = ∇⊥(cos x sin y): solenoidal part.
Vec2 grad_phi(const Vec2& x) { return {{std::cos(x[0]) * std::cos(2 * x[1]) - 3 * std::sin(3 * x[0]), -2 * std::sin(x[0]) * std::sin(2 * x[1])}}; }
Vec2 solenoidal(const Vec2& x) { return {{std::cos(x[0]) * std::cos(x[1]), std::sin(x[0]) * std::sin(x[1])}}; }

}  // namespace

TEST_CASE("projection fixes divergence-free fields and kills gradients") {
    const auto like = GridField<2>::torus(kTorus, {32, 32}, 2);
    const auto w = sample_vector<2>(like, solenoidal);
    const auto g = sample_vector<2>(like, grad_phi);
    CHECK(max_diff(spectral::project_div_free(w), w) < 1e-12);
    CHECK(max_abs(spectral::project_div_free(g)) < 1e-12);
    const auto mixed = sample_vector<2>(like, [](const Vec2& x) { return grad_phi(x) + solenoidal(x); });
    CHECK(max_diff(spectral::project_div_free(mixed), w) < 1e-10);
}

TEST_CASE("projection is idempotent and leaves no divergence") {
    auto v = GridField<2>::torus(kTorus, {24, 24}, 2);
    v.fill([](const Vec2& x) {
        return std::array<double, 2>{std::exp(std::sin(x[0])) * std::cos(x[1]), std::sin(x[0] + 2 * x[1])};
    });
    const auto p1 = spectral::project_div_free(v);
    const auto p2 = spectral::project_div_free(p1);
    CHECK(max_diff(p1, p2) < 1e-12);
    CHECK(max_abs(spectral::divergence(p1)) < 1e-11);

    auto v3 = GridField<3>::torus(Domain<3>::torus(2 * kPi), {12, 12, 12}, 3);
    v3.fill([](const Vec3& x) { return std::array<double, 3>{std::sin(x[0]), std::cos(x[1] + x[2]), std::sin(x[0] * 2)}; });
    const auto q = spectral::project_div_free(v3);
    double d = 0.0;
    for (double x : spectral::divergence(q).values()) d = std::max(d, std::abs(x));
    CHECK(d < 1e-11);
}

TEST_CASE("free-space grids are rejected") {
    const auto b = GridField<2>::box(Vec2{{0, 0}}, Vec2{{1, 1}}, {8, 8}, 2);
    CHECK_THROWS_AS(spectral::project_div_free(b), UnsupportedDomainError);
    CHECK_THROWS_AS(spectral::biot_savart(GridField<2>::box(Vec2{{0, 0}}, Vec2{{1, 1}}, {8, 8}, 1)),
                    UnsupportedDomainError);
}

TEST_CASE("Biot-Savart inverts the curl on mean-free vorticity") {
    // Taylor–Green: ω = −2 cos x cos y gives u = (cos x sin y, −sin x cos y).
    auto w = GridField<2>::torus(kTorus, {32, 32}, 1);
    w.fill([](const Vec2& x) { return std::array<double, 1>{-2 * std::cos(x[0]) * std::cos(x[1])}; });
    const auto u = spectral::biot_savart(w);
    const auto exact = sample_vector<2>(u, [](const Vec2& x) {
        return Vec2{{std::cos(x[0]) * std::sin(x[1]), -std::sin(x[0]) * std::cos(x[1])}};
    });
    CHECK(max_diff(u, exact) < 1e-12);
    CHECK(max_diff(spectral::curl(u), w) < 1e-12);

    auto w3 = GridField<3>::torus(Domain<3>::torus(2 * kPi), {16, 16, 16}, 3);
    // ABC(1,1,1) is its own curl, so Biot–Savart returns it.
    w3.fill([](const Vec3& x) {
        return std::array<double, 3>{std::sin(x[2]) + std::cos(x[1]), std::sin(x[0]) + std::cos(x[2]),
                                     std::sin(x[1]) + std::cos(x[0])};
    });
    const auto u3 = spectral::biot_savart(w3);
    double m = 0.0;
    for (std::size_t i = 0; i < u3.values().size(); ++i) m = std::max(m, std::abs(u3.values()[i] - w3.values()[i]));
    CHECK(m < 1e-12);
}

TEST_CASE("heat flow damps modes by exp(-nu k^2 t) and interpolation is exact for band-limited data") {
    auto f = GridField<2>::torus(kTorus, {16, 16}, 1);
    f.fill([](const Vec2& x) { return std::array<double, 1>{std::cos(x[0]) + std::sin(2 * x[1])}; });
    const auto h = spectral::heat(f, 0.1, 1.0);
    const std::vector<Vec2> pts{Vec2{{0.3, 1.7}}, Vec2{{5.1, 2.2}}};
    const auto vals = spectral::interpolate(h, 0, pts);
    for (std::size_t i = 0; i < pts.size(); ++i) {
        const double exact = std::exp(-0.1) * std::cos(pts[i][0]) + std::exp(-0.4) * std::sin(2 * pts[i][1]);
        CHECK(vals[i] == doctest::Approx(exact).epsilon(1e-12));
    }
}

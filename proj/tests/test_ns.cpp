#include "doctest.h"

#include <cmath>
#include <numbers>

#include "stochflow/ns.hpp"

using namespace stochflow;

namespace {

constexpr double kPi = std::numbers::pi;

GridField<2> torus_layout(std::size_t n) {
    return GridField<2>::torus(Domain<2>::torus(2 * kPi), {n, n}, 1);
}

NSParams params(double nu, double dtau, std::size_t paths, double max_dt) {
    NSParams p;
    p.nu = nu;
    p.dtau = dtau;
    p.mc.n_paths = paths;
    p.mc.max_dt = max_dt;
    p.mc.seed = 11;
    return p;
}

double decay_rate(const std::vector<NSState<2>>& run) {
    double mt = 0, ml = 0;
    for (const auto& s : run) {
        mt += s.time;
        ml += std::log(s.diagnostics.kinetic_energy);
    }
    mt /= static_cast<double>(run.size());
    ml /= static_cast<double>(run.size());
    double sxy = 0, sxx = 0;
    for (const auto& s : run) {
        sxy += (s.time - mt) * (std::log(s.diagnostics.kinetic_energy) - ml);
        sxx += (s.time - mt) * (s.time - mt);
    }
    return -sxy / sxx;
}

}  // namespace

TEST_CASE("zero vorticity is a fixed point") {
    const auto p = params(0.1, 0.1, 8, 0.05);
    const auto s0 = initial_state(catalog::constant_scalar<2>(0.0), torus_layout(16), p);
    for (const auto& s : run(s0, 0.3, p)) {
        for (double v : s.velocity.values()) CHECK(v == 0.0);
        for (double v : s.vorticity.values()) CHECK(v == 0.0);
    }
}

TEST_CASE("T = 0 returns the initial state unchanged") {
    const auto p = params(0.1, 0.1, 8, 0.05);
    const auto s0 = initial_state(catalog::taylor_green_vorticity(0.0, 0.0), torus_layout(16), p);
    const auto r = run(s0, 0.0, p);
    REQUIRE(r.size() == 1);
    CHECK(r[0].vorticity == s0.vorticity);
    CHECK(r[0].velocity == s0.velocity);
    CHECK(r[0].time == 0.0);
}

TEST_CASE("run shortens the last step to land on T") {
    const auto p = params(0.1, 0.1, 8, 0.05);
    const auto s0 = initial_state(catalog::taylor_green_vorticity(0.0, 0.0), torus_layout(16), p);
    const auto r = run(s0, 0.25, p);
    REQUIRE(r.size() == 4);
    CHECK(r.back().time == doctest::Approx(0.25).epsilon(1e-14));
    CHECK(r.back().step_index == 3);
}

TEST_CASE("Taylor-Green kinetic energy decays at rate 4 nu") {
    const auto p = params(0.1, 0.05, 100, 0.01);
    const auto s0 = initial_state(catalog::taylor_green_vorticity(0.0, 0.0), torus_layout(32), p);
    CHECK(s0.diagnostics.kinetic_energy == doctest::Approx(kPi * kPi).epsilon(1e-10));
    const auto r = run(s0, 0.3, p);
    CHECK(decay_rate(r) == doctest::Approx(0.4).epsilon(0.05));
    double circ_var = 0.0;
    for (const auto& s : r) {
        // Spectral rebuild inverts every mode except Nyquist, which holds only MC noise.
        CHECK(s.diagnostics.curl_residual <= 4.0 * s.diagnostics.mc_stderr_max + 1e-10);
        CHECK(s.diagnostics.divergence_max < 1e-10);
        // Circulation stays zero within the accumulated MC error; the maximum
        // principle holds per estimator.
        circ_var += s.diagnostics.circulation_stderr * s.diagnostics.circulation_stderr;
        CHECK(std::abs(s.diagnostics.circulation) <= 4.0 * std::sqrt(circ_var) + 1e-10);
        if (s.step_index > 0) {
            CHECK(s.diagnostics.sample_min >= -2.0);
            CHECK(s.diagnostics.sample_max <= 2.0);
        }
    }
}

TEST_CASE("Taylor-Green energy-rate error shrinks as dtau halves and N doubles") {
    double prev = 1e9;
    std::size_t paths = 25;
    for (double dt : {0.1, 0.05, 0.025}) {
        const auto p = params(0.1, dt, paths, dt);
        const auto s0 = initial_state(catalog::taylor_green_vorticity(0.0, 0.0), torus_layout(32), p);
        const double err = std::abs(decay_rate(run(s0, 0.5, p)) - 0.4);
        CHECK(err < prev);
        prev = err;
        paths *= 2;
    }
}

TEST_CASE("Lamb-Oseen peak decays as 1/(4 pi nu (t0 + tau)) in free space") {
    const double nu = 0.05, t0 = 1.0;
    auto p = params(nu, 0.1, 100, 0.02);
    const auto layout = GridField<2>::box(Vec2{{-3, -3}}, Vec2{{3, 3}}, {37, 37}, 1);
    const auto s0 = initial_state(catalog::lamb_oseen_vorticity(1.0, nu, t0), layout, p);
    const auto r = run(s0, 0.3, p);
    for (const auto& s : r) {
        const double exact = 1.0 / (4 * kPi * nu * (t0 + s.time));
        CHECK(s.diagnostics.max_vorticity == doctest::Approx(exact).epsilon(0.05));
        CHECK(s.diagnostics.circulation == doctest::Approx(1.0).epsilon(0.02));
    }
}

TEST_CASE("two co-rotating blobs conserve circulation") {
    auto p = params(0.02, 0.1, 60, 0.01);
    p.velocity_method = VelocityMethod::BiotSavart;
    const auto layout = GridField<2>::box(Vec2{{-3, -3}}, Vec2{{3, 3}}, {31, 31}, 1);
    VortexBlobInit init{{{Vec2{{-0.5, 0.0}}, 0.4, 1.0}, {Vec2{{0.5, 0.0}}, 0.4, 1.0}}};
    const auto s0 = initial_state(init, layout, p);
    const double c0 = s0.diagnostics.circulation;
    CHECK(c0 == doctest::Approx(2.0).epsilon(1e-3));
    double var = 0.0;
    for (const auto& s : run(s0, 0.5, p)) {
        var += s.diagnostics.circulation_stderr * s.diagnostics.circulation_stderr;
        CHECK(std::abs(s.diagnostics.circulation - c0) <= 4.0 * std::sqrt(var));
    }
}

TEST_CASE("enstrophy decreases monotonically at large viscosity") {
    // Rough, mean-free initial data: a sharp dipole on the torus.
    VortexBlobInit init{{{Vec2{{2.5, 3.1}}, 0.3, 1.0}, {Vec2{{3.8, 3.1}}, 0.3, -1.0}}};
    const auto p = params(1.0, 0.05, 60, 0.025);
    const auto s0 = initial_state(init, torus_layout(32), p);
    const auto r = run(s0, 0.3, p);
    for (std::size_t k = 1; k < r.size(); ++k) {
        const double slack = 4.0 * r[k].diagnostics.mc_stderr_max * std::sqrt(2.0 * r[k].diagnostics.enstrophy) *
                             2 * kPi;
        CHECK(r[k].diagnostics.enstrophy < r[k - 1].diagnostics.enstrophy + slack);
    }
    CHECK(r.back().diagnostics.enstrophy < 0.5 * r.front().diagnostics.enstrophy);
}

TEST_CASE("Picard iterations report their count and stay close to the split step") {
    auto p = params(0.1, 0.1, 40, 0.05);
    const auto s0 = initial_state(catalog::taylor_green_vorticity(0.0, 0.0), torus_layout(16), p);
    const auto one = step(s0, p);
    p.picard_max = 3;
    p.picard_tol = 1e-12;
    const auto three = step(s0, p);
    CHECK(one.diagnostics.picard_iterations == 1);
    CHECK(three.diagnostics.picard_iterations == 3);
    double diff = 0.0;
    for (std::size_t i = 0; i < one.velocity.values().size(); ++i)
        diff = std::max(diff, std::abs(one.velocity.values()[i] - three.velocity.values()[i]));
    CHECK(diff < 0.05);
}

TEST_CASE("configuration errors name the offending field") {
    const auto layout = torus_layout(16);
    const auto p = params(0.1, 0.1, 8, 0.05);
    try {
        initial_state(VortexBlobInit{{{Vec2{{1, 1}}, 0.0, 1.0}}}, layout, p);
        FAIL("expected ConfigError");
    } catch (const ConfigError& e) {
        CHECK(e.field() == "init.blobs[0].radius");
    }
    try {
        initial_state(VortexBlobInit{{{Vec2{{1, 1}}, 0.5, 1.0}}}, layout, p);
        FAIL("expected ConfigError");
    } catch (const ConfigError& e) {
        CHECK(e.field() == "init.blobs");
    }
    const auto s0 = initial_state(catalog::taylor_green_vorticity(0.0, 0.0), layout, p);
    auto bad = p;
    bad.dtau = 0.0;
    CHECK_THROWS_AS(step(s0, bad), ConfigError);
    bad = p;
    bad.picard_max = 6;
    CHECK_THROWS_AS(step(s0, bad), ConfigError);
}

TEST_CASE("3D: a uniform vorticity stays put on the torus") {
    auto p = params(0.1, 0.1, 8, 0.05);
    const auto layout = GridField<3>::torus(Domain<3>::torus(2 * kPi), {8, 8, 8}, 3);
    const auto s0 = initial_state(catalog::constant_vector<3>(Vec3{{0, 0, 1.5}}), layout, p);
    const auto r = run(s0, 0.2, p);
    for (std::size_t i = 0; i < layout.node_count(); ++i) {
        CHECK(r.back().vorticity.at(i, 2) == doctest::Approx(1.5).epsilon(1e-12));
        CHECK(std::abs(r.back().velocity.at(i, 0)) < 1e-12);
    }
}

TEST_CASE("Picard non-contraction raises a step-size error") {
    auto p = params(0.01, 1.0, 20, 0.05);
    p.picard_max = 5;
    p.picard_tol = 1e-14;
    VortexBlobInit init{{{Vec2{{2.5, 3.1}}, 0.5, 20.0}, {Vec2{{3.8, 3.1}}, 0.5, -20.0}}};
    const auto s0 = initial_state(init, torus_layout(16), p);
    CHECK_THROWS_AS(step(s0, p), StepSizeError);
    p.dtau = 0.01;
    p.picard_tol = 1e-6;
    CHECK_NOTHROW(step(s0, p));
}

#include "doctest.h"

#include <cmath>
#include <numbers>

#include "fd_induction.hpp"
#include "oracles.hpp"
#include "stochflow/fields.hpp"
#include "stochflow/parallel.hpp"
#include "stochflow/transport.hpp"

using namespace stochflow;

namespace {

constexpr double kPi = std::numbers::pi;

McParams mc(std::size_t n, std::uint64_t seed, double max_dt = 0.01) {
    McParams m;
    m.n_paths = n;
    m.seed = seed;
    m.max_dt = max_dt;
    return m;
}

std::vector<Vec2> probe_ring() {
    std::vector<Vec2> p;
    for (double x : {-0.8, 0.0, 0.8})
        for (double y : {-0.8, 0.0, 0.8}) p.push_back(Vec2{{x, y}});
    return p;
}

}  // namespace

TEST_CASE("zero velocity reduces transport to the heat kernel") {
    TransportQuery2 q;
    q.tau = 1.0;
    q.nu = 0.1;
    q.velocity = catalog::zero_velocity<2>();
    q.initial = catalog::gaussian_scalar<2>(1.0, 0.5);
    q.targets = probe_ring();
    q.mc = mc(20000, 1, 1.0);
    const auto r = solve_vorticity_2d(q);
    for (std::size_t j = 0; j < r.size(); ++j) {
        const double exact = oracle::heat_gaussian(1.0, 0.5, 0.1, 1.0, dot(q.targets[j], q.targets[j]), 2);
        CHECK(std::abs(r[j].estimate - exact) < 4.0 * r[j].stderr_);
        // Maximum principle, per path and for the mean.
        CHECK(r[j].sample_min >= 0.0);
        CHECK(r[j].sample_max <= 1.0);
        CHECK(r[j].estimate >= r[j].sample_min);
        CHECK(r[j].estimate <= r[j].sample_max);
    }
}

TEST_CASE("Lamb-Oseen vortex transports onto itself") {
    const double gamma = 1.0, nu = 0.1, t0 = 1.0, tau = 1.0;
    TransportQuery2 q;
    q.tau = tau;
    q.nu = nu;
    q.velocity = catalog::lamb_oseen_velocity(gamma, nu, t0);
    q.initial = catalog::lamb_oseen_vorticity(gamma, nu, t0);
    q.targets = {Vec2{{0.0, 0.0}}, Vec2{{0.5, 0.0}}, Vec2{{0.0, 1.0}}, Vec2{{-1.4, 1.4}}};
    q.mc = mc(20000, 2, 0.02);
    const auto r = solve_vorticity_2d(q);
    for (std::size_t j = 0; j < r.size(); ++j) {
        const double exact = oracle::lamb_oseen_vorticity(gamma, nu, t0 + tau, norm(q.targets[j]));
        CHECK(std::abs(r[j].estimate - exact) < 4.0 * r[j].stderr_);
    }
}

TEST_CASE("constant initial vorticity is reproduced exactly") {
    TransportQuery2 q;
    q.tau = 0.7;
    q.nu = 0.3;
    q.velocity = catalog::taylor_green_velocity(0.3);
    q.initial = catalog::constant_scalar<2>(2.5);
    q.targets = {Vec2{{0.1, 0.2}}, Vec2{{3.0, -1.0}}};
    q.mc = mc(200, 3);
    for (const auto& e : solve_vorticity_2d(q)) {
        CHECK(e.estimate == 2.5);
        CHECK(e.stderr_ == 0.0);
    }
}

TEST_CASE("uniform translation leaves a constant 3D vorticity unchanged") {
    TransportQuery3 q;
    q.tau = 1.0;
    q.nu = 0.2;
    q.velocity = catalog::uniform_velocity<3>(Vec3{{1.0, -0.5, 2.0}});
    q.initial = catalog::constant_vector<3>(Vec3{{0.3, 1.0, -2.0}});
    q.targets = {Vec3{}, Vec3{{1, 2, 3}}};
    q.mc = mc(100, 4);
    for (const auto& e : solve_vorticity_3d(q)) {
        CHECK(norm(e.estimate - Vec3{{0.3, 1.0, -2.0}}) < 1e-14);
        CHECK(e.max_det_error < 1e-14);
    }
}

TEST_CASE("constant strain stretches vorticity like the vorticity PDE") {
    // Two strains: the diagonal one from the reference problem and a
    // non-symmetric one that tells ∇u from its transpose.
    Mat3 diag;
    diag(0, 0) = 0.25;
    diag(1, 1) = 0.25;
    diag(2, 2) = -0.5;
    Mat3 shear;
    shear(0, 1) = 0.6;
    shear(1, 2) = -0.3;
    shear(0, 0) = 0.2;
    shear(2, 2) = -0.2;
    const double nu = 0.1, tau = 0.5;
    const Vec3 c{{0.4, -0.7, 1.0}};
    for (const Mat3& a : {diag, shear}) {
        TransportQuery3 q;
        q.tau = tau;
        q.nu = nu;
        q.velocity = catalog::constant_strain<3>(a);
        q.initial = catalog::constant_vector<3>(c);
        q.targets = {Vec3{{0.5, 0.5, 0.5}}};
        q.mc = mc(50, 5, 0.01);
        const auto r = solve_vorticity_3d(q)[0];

        oracle::FdInduction fd(
            32, nu, [a](const oracle::FdInduction::V3& x) { const Vec3 v = a * Vec3{{x[0], x[1], x[2]}}; return oracle::FdInduction::V3{v[0], v[1], v[2]}; },
            [a](const oracle::FdInduction::V3&) {
                oracle::FdInduction::M3 g;
                for (int i = 0; i < 3; ++i)
                    for (int j = 0; j < 3; ++j) g[i][j] = a(i, j);
                return g;
            },
            [c](const oracle::FdInduction::V3&) { return oracle::FdInduction::V3{c[0], c[1], c[2]}; });
        fd.advance_to(tau, 0.01);
        const auto ref = fd.at(4, 4, 4);
        const Vec3 refv{{ref[0], ref[1], ref[2]}};
        CHECK(norm(r.estimate - refv) <= 0.05 * norm(refv));
        CHECK(r.max_det_error < 1e-8);
        // The literal reading exp(−τA)c must be rejected by the oracle.
        if (&a == &shear) CHECK(norm(expm(a * -tau) * c - refv) > 0.05 * norm(refv));
    }
}

TEST_CASE("heat-dominated limit tends to the spatial mean") {
    TransportQuery3 q;
    q.tau = 1.0;
    q.nu = 10.0;
    const auto abc = catalog::abc_flow(1.0, 1.0, 1.0);
    q.velocity.value = [abc](double t, const Vec3& x) { return abc.value(t, x) * 0.01; };
    q.velocity.gradient = [abc](double t, const Vec3& x) { return abc.gradient(t, x) * 0.01; };
    VectorField<3> w;
    w.value = [](const Vec3& x) { return Vec3{{0.0, 0.0, 1.0 + std::cos(x[0])}}; };
    q.initial = w;
    q.targets = {Vec3{}, Vec3{{kPi, 0, 0}}};
    q.mc = mc(4000, 6, 0.01);
    for (const auto& e : solve_vorticity_3d(q)) {
        // Remaining mode amplitude e^{−10} is far below MC error.
        CHECK(std::abs(e.estimate[2] - 1.0) < 4.0 * e.stderr_[2] + 1e-3);
    }
}

TEST_CASE("circulation on the torus is conserved within combined error") {
    const double nu = 0.05;
    TransportQuery2 q;
    q.tau = 0.5;
    q.nu = nu;
    q.velocity = catalog::taylor_green_velocity(nu);
    ScalarField<2> w0;
    w0.value = [](const Vec2& x) { return 1.0 + std::sin(x[0]) * std::sin(2 * x[1]) + 0.5 * std::cos(3 * x[0]); };
    q.initial = w0;
    const int n = 12;
    const double h = 2 * kPi / n;
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) q.targets.push_back(Vec2{{i * h, j * h}});
    q.mc = mc(400, 7, 0.05);
    const auto r = solve_vorticity_2d(q);
    std::vector<double> vals, var, init;
    for (std::size_t k = 0; k < r.size(); ++k) {
        vals.push_back(r[k].estimate * h * h);
        var.push_back(r[k].stderr_ * r[k].stderr_ * h * h * h * h);
        init.push_back(w0.value(q.targets[k]) * h * h);
    }
    const double circ = pairwise_sum(vals), circ0 = pairwise_sum(init);
    CHECK(std::abs(circ - circ0) < 4.0 * std::sqrt(pairwise_sum(var)) + 1e-9);
    CHECK(circ0 == doctest::Approx(4 * kPi * kPi).epsilon(1e-12));
}

TEST_CASE("standard error shrinks with more paths and antithetics stay unbiased") {
    TransportQuery2 q;
    q.tau = 1.0;
    q.nu = 0.1;
    q.velocity = catalog::zero_velocity<2>();
    q.initial = catalog::gaussian_scalar<2>(1.0, 0.5);
    q.targets = {Vec2{{0.3, 0.0}}};
    double prev = INFINITY;
    for (std::size_t n : {500, 5000, 50000}) {
        q.mc = mc(n, 8, 1.0);
        const auto e = solve_vorticity_2d(q)[0];
        CHECK(e.stderr_ < prev);
        prev = e.stderr_;
    }
    q.mc = mc(20000, 9, 1.0);
    q.mc.antithetic = true;
    const auto e = solve_vorticity_2d(q)[0];
    const double exact = oracle::heat_gaussian(1.0, 0.5, 0.1, 1.0, 0.09, 2);
    CHECK(std::abs(e.estimate - exact) < 4.0 * e.stderr_);
}

TEST_CASE("invalid parameters are rejected with the field name") {
    TransportQuery2 q;
    q.tau = 1.0;
    q.nu = -0.1;
    q.velocity = catalog::zero_velocity<2>();
    q.initial = catalog::constant_scalar<2>(1.0);
    q.targets = {Vec2{}};
    try {
        solve_vorticity_2d(q);
        FAIL("expected a ConfigError");
    } catch (const ConfigError& e) {
        CHECK(e.field() == "nu");
    }
}

TEST_CASE("results do not depend on the worker count") {
    TransportQuery2 q;
    q.tau = 0.5;
    q.nu = 0.1;
    q.velocity = catalog::taylor_green_velocity(0.1);
    q.initial = catalog::taylor_green_vorticity(0.1, 0.0);
    q.targets = probe_ring();
    q.mc = mc(300, 10, 0.05);
    const auto a = solve_vorticity_2d(q);
    set_worker_count(4);
    const auto b = solve_vorticity_2d(q);
    set_worker_count(1);
    for (std::size_t j = 0; j < a.size(); ++j) {
        CHECK(a[j].estimate == b[j].estimate);
        CHECK(a[j].stderr_ == b[j].stderr_);
    }
}

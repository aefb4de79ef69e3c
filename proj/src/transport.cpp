#include "stochflow/transport.hpp"

#include <algorithm>
#include <cmath>

#include "stochflow/parallel.hpp"

namespace stochflow {

namespace {

template <int N, class Initial>
void validate(const TransportQuery<N, Initial>& q) {
    if (!(q.tau > 0.0)) throw ConfigError("tau", "target time must be positive");
    if (!(q.nu > 0.0)) throw ConfigError("nu", "viscosity must be positive");
    if (q.mc.n_paths == 0) throw ConfigError("n_paths", "need at least one path");
    if (!(q.mc.max_dt > 0.0)) throw ConfigError("max_dt", "time step must be positive");
    if (!q.velocity.value) throw ConfigError("velocity", "velocity field is empty");
    if (!q.initial.value) throw ConfigError("initial", "initial field is empty");
}

template <int N>
ItoSDESpec<N> backward_spec(const VelocityField<N>& u, double tau, double nu) {
    ItoSDESpec<N> spec;
    auto value = u.value;
    spec.drift = [value, tau](double s, const Vec<N>& x) { return -value(tau - s, x); };
    spec.sigma = std::sqrt(2.0 * nu);
    return spec;
}

SimulationOptions options_for(const McParams& mc) {
    SimulationOptions opt;
    opt.source = {mc.seed, mc.stream_offset};
    opt.antithetic = mc.antithetic;
    opt.max_invalid_fraction = mc.max_invalid_fraction;
    return opt;
}

}  // namespace

std::vector<ScalarEstimate> solve_vorticity_2d(const TransportQuery2& q) {
    validate(q);
    const auto spec = backward_spec<2>(q.velocity, q.tau, q.nu);
    const TimeGrid grid = TimeGrid::with_max_step(0.0, q.tau, q.mc.max_dt);
    SimulationOptions opt = options_for(q.mc);
    std::vector<ScalarEstimate> out(q.targets.size());

    parallel_for(q.targets.size(), [&](std::size_t j) {
        SimulationOptions local = opt;
        local.source.stream_id = transport_stream(q.mc, j, 0);
        std::vector<double> samples;
        samples.reserve(q.mc.n_paths);
        double lo = INFINITY, hi = -INFINITY;
        for (std::size_t p = 0; p < q.mc.n_paths; ++p) {
            const auto end = integrate_path<2>(spec, nullptr, q.targets[j], grid, path_stream(local, p), 1, 0.0);
            if (!end.valid) continue;
            const double v = q.initial.value(end.position);
            if (!std::isfinite(v)) continue;
            samples.push_back(v);
            lo = std::min(lo, v);
            hi = std::max(hi, v);
        }
        const auto m = mean_and_stderr(samples);
        out[j] = {m.mean, m.stderr_, q.mc.n_paths, q.mc.n_paths - samples.size(), lo, hi};
    });

    std::size_t excluded = 0, total = 0;
    for (const auto& e : out) {
        excluded += e.n_excluded;
        total += e.n_paths;
    }
    enforce_invalid_policy(excluded, total, q.mc.max_invalid_fraction);
    return out;
}

std::vector<VectorEstimate3> solve_vorticity_3d(const TransportQuery3& q) {
    validate(q);
    if (!q.velocity.gradient) throw Error("transport: 3D needs the velocity gradient");
    const auto spec = backward_spec<3>(q.velocity, q.tau, q.nu);
    const double tau = q.tau;
    auto grad_u = q.velocity.gradient;
    const std::function<Mat3(double, const Vec3&)> grad = [grad_u, tau](double s, const Vec3& x) {
        return grad_u(tau - s, x);
    };
    const TimeGrid grid = TimeGrid::with_max_step(0.0, q.tau, q.mc.max_dt);
    SimulationOptions opt = options_for(q.mc);
    std::vector<VectorEstimate3> out(q.targets.size());

    parallel_for(q.targets.size(), [&](std::size_t j) {
        SimulationOptions local = opt;
        local.source.stream_id = transport_stream(q.mc, j, 0);
        std::array<std::vector<double>, 3> samples;
        for (auto& s : samples) s.reserve(q.mc.n_paths);
        double det_err = 0.0;
        for (std::size_t p = 0; p < q.mc.n_paths; ++p) {
            const auto end = integrate_path<3>(spec, &grad, q.targets[j], grid, path_stream(local, p), 1,
                                               opt.jacobian_overflow);
            if (!end.valid) continue;
            const Vec3 w = adjugate(end.jacobian) * q.initial.value(end.position);
            if (!finite(w)) continue;
            for (int c = 0; c < 3; ++c) samples[c].push_back(w[c]);
            det_err = std::max(det_err, std::abs(det(end.jacobian) - 1.0));
        }
        VectorEstimate3 e;
        for (int c = 0; c < 3; ++c) {
            const auto m = mean_and_stderr(samples[c]);
            e.estimate[c] = m.mean;
            e.stderr_[c] = m.stderr_;
        }
        e.n_paths = q.mc.n_paths;
        e.n_excluded = q.mc.n_paths - samples[0].size();
        e.max_det_error = det_err;
        out[j] = e;
    });

    std::size_t excluded = 0, total = 0;
    for (const auto& e : out) {
        excluded += e.n_excluded;
        total += e.n_paths;
    }
    enforce_invalid_policy(excluded, total, q.mc.max_invalid_fraction);
    return out;
}

}  // namespace stochflow

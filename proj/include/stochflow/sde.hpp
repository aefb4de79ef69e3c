#pragma once

/// @file sde.hpp
/// @brief Euler–Maruyama, Heun–Stratonovich and Jacobian-flow integrators.
///
/// Paths never wrap: periodic fields are evaluated at unwrapped coordinates,
/// so displacements stay meaningful. Each path draws its Wiener increments
/// from its own counter-based stream (stream_base + path, or path/2 with
/// antithetic pairing), so results do not depend on evaluation order.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "stochflow/errors.hpp"
#include "stochflow/frame.hpp"
#include "stochflow/linalg.hpp"
#include "stochflow/rng.hpp"

namespace stochflow {

/// Uniform grid t0 < t0+dt < … < t1 with exactly n_steps steps.
struct TimeGrid {
    double t0 = 0.0;
    double t1 = 0.0;
    double dt = 0.0;
    std::size_t n_steps = 0;

    static TimeGrid uniform(double t0, double t1, std::size_t n_steps);
    /// Smallest grid on [t0, t1] whose step does not exceed max_dt.
    static TimeGrid with_max_step(double t0, double t1, double max_dt);

    double time(std::size_t k) const {
        return k == n_steps ? t1 : t0 + static_cast<double>(k) * dt;
    }
};

/// dx = drift(s, x) ds + sigma dW.
template <int N>
struct ItoSDESpec {
    std::function<Vec<N>(double, const Vec<N>&)> drift;
    double sigma = 0.0;
};

/// Path-store policy: every step, or only start and end.
enum class PathStorage { Full, Endpoints };

struct SimulationOptions {
    RandomSource source{};
    bool antithetic = false;
    /// Each step's increment is the sum of this many sub-increments drawn in
    /// sequence. A run with n steps and 2 substeps sees the same Brownian path
    /// as a run with 2n steps and 1 substep, which couples dt-refinement runs.
    int increment_substeps = 1;
    PathStorage storage = PathStorage::Full;
    /// Abort threshold for the fraction of excluded paths.
    double max_invalid_fraction = 0.01;
    /// Jacobian entries beyond this norm flag the path.
    double jacobian_overflow = 1e12;
};

template <int N>
struct PathEnsemble {
    TimeGrid grid{};
    RandomSource source{};
    std::size_t n_paths = 0;
    std::size_t stored = 0;  ///< positions per path: n_steps + 1 or 2
    std::vector<Vec<N>> positions;
    std::vector<Mat<N>> jacobians;  ///< same layout as positions when filled
    std::vector<std::uint8_t> valid;
    std::size_t n_invalid = 0;

    const Vec<N>& position(std::size_t path, std::size_t slot) const { return positions[path * stored + slot]; }
    const Vec<N>& start(std::size_t path) const { return position(path, 0); }
    const Vec<N>& end(std::size_t path) const { return position(path, stored - 1); }
    const Mat<N>& jacobian_end(std::size_t path) const { return jacobians[path * stored + stored - 1]; }
    bool full() const { return stored == grid.n_steps + 1; }
};

/// Per-path sign and stream under the antithetic convention.
struct PathStream {
    RandomSource source;
    double sign = 1.0;
};

inline PathStream path_stream(const SimulationOptions& opt, std::size_t path) {
    if (opt.antithetic) return {opt.source.with_stream(opt.source.stream_id + path / 2), (path % 2) ? -1.0 : 1.0};
    return {opt.source.with_stream(opt.source.stream_id + path), 1.0};
}

/// Draws one step's Wiener increment (variance dt per component).
template <int N>
Vec<N> wiener_increment(PhiloxStream& rng, double dt, int substeps, double sign) {
    Vec<N> dw{};
    const double sub = std::sqrt(dt / substeps);
    for (int s = 0; s < substeps; ++s)
        for (int i = 0; i < N; ++i) dw[i] += rng.normal();
    return dw * (sub * sign);
}

/// Increments for m-dimensional noise (frames with m ≥ N).
inline void wiener_increment(PhiloxStream& rng, double dt, int substeps, double sign, std::span<double> out) {
    for (double& d : out) d = 0.0;
    const double sub = std::sqrt(dt / substeps);
    for (int s = 0; s < substeps; ++s)
        for (double& d : out) d += rng.normal();
    for (double& d : out) d *= sub * sign;
}

/// Exponential-midpoint Jacobian step J ← exp(−dt·A)·J. det J is preserved
/// exactly when A is trace-free.
template <int N>
Mat<N> jacobian_step(const Mat<N>& jac, const Mat<N>& grad_mid, double dt) {
    return expm(grad_mid * (-dt)) * jac;
}

template <int N>
bool finite(const Vec<N>& x) {
    for (int i = 0; i < N; ++i)
        if (!std::isfinite(x[i])) return false;
    return true;
}

template <int N>
bool jacobian_ok(const Mat<N>& m, double limit) {
    for (double v : m.a)
        if (!std::isfinite(v)) return false;
    return norm_inf(m) <= limit;
}

/// Throws NumericalError when more than the allowed fraction is invalid.
void enforce_invalid_policy(std::size_t n_invalid, std::size_t n_paths, double max_fraction);

/// Euler–Maruyama ensemble. `starts` holds one point (shared by every path)
/// or exactly n_paths points (field mode).
template <int N>
PathEnsemble<N> simulate_ito(const ItoSDESpec<N>& spec, std::span<const Vec<N>> starts, const TimeGrid& grid,
                             std::size_t n_paths, const SimulationOptions& opt);

/// Fills per-path Jacobians solving dJ/ds = −A(s, x_s)·J, J(0) = I, along
/// stored full paths with the exponential midpoint rule (A at the midpoint
/// in time and position).
template <int N>
PathEnsemble<N> simulate_jacobian(PathEnsemble<N> ensemble,
                                  const std::function<Mat<N>(double, const Vec<N>&)>& grad_drift,
                                  const SimulationOptions& opt);

/// Heun predictor-corrector for dx = scale·K(x)∘dW (no drift).
template <int N>
PathEnsemble<N> simulate_stratonovich(const FrameField<N>& frame, const Vec<N>& start, const TimeGrid& grid,
                                      std::size_t n_paths, const SimulationOptions& opt);

/// Result of integrating one path with its Jacobian, without storage.
template <int N>
struct PathEnd {
    Vec<N> position{};
    Mat<N> jacobian = Mat<N>::identity();
    bool valid = true;
};

/// Streams one Euler–Maruyama path from x0 and, when `grad` is set, its
/// exponential-midpoint Jacobian. This is the kernel behind simulate_ito /
/// simulate_jacobian, exposed for estimators that only need endpoints.
template <int N>
PathEnd<N> integrate_path(const ItoSDESpec<N>& spec, const std::function<Mat<N>(double, const Vec<N>&)>* grad,
                          const Vec<N>& x0, const TimeGrid& grid, const PathStream& stream, int substeps,
                          double overflow) {
    PhiloxStream rng(stream.source);
    PathEnd<N> out;
    Vec<N> x = x0;
    for (std::size_t k = 0; k < grid.n_steps; ++k) {
        const double s = grid.time(k);
        const Vec<N> dw = wiener_increment<N>(rng, grid.dt, substeps, stream.sign);
        Vec<N> next = x + spec.drift(s, x) * grid.dt + dw * spec.sigma;
        if (!finite(next)) {
            out.valid = false;
            break;
        }
        if (grad) {
            const Mat<N> a = (*grad)(s + 0.5 * grid.dt, (x + next) * 0.5);
            out.jacobian = jacobian_step(out.jacobian, a, grid.dt);
            if (!jacobian_ok(out.jacobian, overflow)) {
                out.valid = false;
                break;
            }
        }
        x = next;
    }
    out.position = x;
    return out;
}

}  // namespace stochflow

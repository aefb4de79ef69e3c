#pragma once

/// @file transport.hpp
/// @brief Backward-path (Feynman–Kac) solution of the vorticity equation.
///
/// For a target (τ, x), paths solve dx_s = −u(τ−s, x_s) ds + √(2ν) dW_s from
/// x₀ = x over s ∈ [0, τ]. In 2D the estimate is the mean of Ω̃₀(x_τ). In 3D
/// each path also carries the Jacobian ṽ (dṽ = −∇u(τ−s, x_s) ṽ ds, ṽ₀ = I);
/// the initial 2-form pulled back by Λ²ṽ acts on the adjoint vector through
/// the adjugate, so the per-path sample is adj(ṽ_τ)·Ω̃₀(x_τ), which equals
/// ṽ_τ⁻¹·Ω̃₀(x_τ) for divergence-free u. This reproduces
/// ∂Ω̃ = −(u·∇)Ω̃ + (Ω̃·∇)u + ν△Ω̃.

#include <cstdint>
#include <vector>

#include "stochflow/domain.hpp"
#include "stochflow/fields.hpp"
#include "stochflow/sde.hpp"

namespace stochflow {

/// Monte Carlo controls shared by the path estimators.
struct McParams {
    std::size_t n_paths = 1000;
    std::uint64_t seed = 0;
    std::uint64_t stream_offset = 0;
    bool antithetic = false;
    double max_dt = 0.01;
    double max_invalid_fraction = 0.01;
};

template <int N, class Initial>
struct TransportQuery {
    double tau = 0.0;
    std::vector<Vec<N>> targets;
    double nu = 0.0;
    VelocityField<N> velocity;
    Initial initial;
    McParams mc;
};

using TransportQuery2 = TransportQuery<2, ScalarField<2>>;
using TransportQuery3 = TransportQuery<3, VectorField<3>>;

struct ScalarEstimate {
    double estimate = 0.0;
    double stderr_ = 0.0;
    std::size_t n_paths = 0;
    std::size_t n_excluded = 0;
    double sample_min = 0.0;  ///< smallest single-path value
    double sample_max = 0.0;
};

struct VectorEstimate3 {
    Vec3 estimate{};
    Vec3 stderr_{};
    std::size_t n_paths = 0;
    std::size_t n_excluded = 0;
    double max_det_error = 0.0;  ///< max |det ṽ − 1| over valid paths
};

std::vector<ScalarEstimate> solve_vorticity_2d(const TransportQuery2& q);
std::vector<VectorEstimate3> solve_vorticity_3d(const TransportQuery3& q);

/// Stream id of (target j, path p) under the shared layout.
inline std::uint64_t transport_stream(const McParams& mc, std::size_t target, std::size_t path) {
    return mc.stream_offset + static_cast<std::uint64_t>(target) * mc.n_paths + path;
}

}  // namespace stochflow

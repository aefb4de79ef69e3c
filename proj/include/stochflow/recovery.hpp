#pragma once

/// @file recovery.hpp
/// @brief Velocity from vorticity: Brownian-expectation routes and direct
/// Biot–Savart quadrature.
///
/// With W_s ~ N(0, s·I) and P_s Ω̃(x) = E[Ω̃(x + W_s)], the velocity is
///   2D:  u(x) = ∫₀^∞ ½ ∇⊥ P_s Ω̃(x) ds = ∫₀^∞ (1/2s) E[Ω̃(x+W_s) W_s⊥] ds
///   3D:  u(x) = ∫₀^∞ ½ curl P_s Ω̃(x) ds = −∫₀^∞ (1/2s) E[Ω̃(x+W_s) × W_s] ds
/// where W⊥ = (W², −W¹) and the s-derivative-free forms come from the
/// Bismut–Elworthy identity ∂ᵢ P_s f = E[f(x+W_s) W_sⁱ]/s. The 2D sign is
/// the planar reduction of the 3D formula and yields curl u = Ω̃.

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "stochflow/domain.hpp"
#include "stochflow/fields.hpp"

namespace stochflow {

/// Log-spaced nodes s_min … s_max, trapezoid rule in log s.
struct SQuadrature {
    double s_min = 0.0;
    double s_max = 0.0;
    std::size_t n_nodes = 40;

    std::vector<double> nodes() const;
    /// Weights w_i with ∫_{s_min}^{s_max} f ds ≈ Σ w_i f(s_i).
    std::vector<double> weights() const;
};

template <int N, class Vorticity>
struct RecoveryQuery {
    Vorticity vorticity;
    std::vector<Vec<N>> targets;
    Domain<N> domain = Domain<N>::free_space();
    /// Unset: chosen from the domain and the vorticity support.
    std::optional<SQuadrature> quadrature;
    std::size_t n_samples = 10000;  ///< per s-node and target
    std::uint64_t seed = 0;
    std::uint64_t stream_offset = 0;
    /// Per-node regression on zero-mean controls built from Ω̃(x) (and,
    /// for the gradient route, the likelihood-ratio difference).
    bool centered = true;
    /// Relative tail tolerance used to pick s_max and to raise warnings.
    double tail_tolerance = 1e-3;
    bool keep_node_means = false;
};

using RecoveryQuery2 = RecoveryQuery<2, ScalarField<2>>;
using RecoveryQuery3 = RecoveryQuery<3, VectorField<3>>;

template <int N>
struct RecoveryEstimate {
    Vec<N> velocity{};
    Vec<N> stderr_{};
    double tail_bound = 0.0;  ///< bound on the truncated ∫_{s_max}^∞ part
    bool tail_warning = false;
    std::size_t n_samples = 0;
    std::vector<Vec<N>> node_means;  ///< s-integrand per node (optional)
    std::vector<Vec<N>> node_stderr;
};

std::vector<RecoveryEstimate<2>> recover_velocity_2d(const RecoveryQuery2& q);
std::vector<RecoveryEstimate<3>> recover_velocity_3d(const RecoveryQuery3& q);

/// Same integral with ∇P_sΩ̃ taken by central differences of the smoothed
/// estimate at x ± h·eᵢ under common random numbers.
std::vector<RecoveryEstimate<2>> recover_velocity_gradform(const RecoveryQuery2& q);
std::vector<RecoveryEstimate<3>> recover_velocity_gradform(const RecoveryQuery3& q);

/// Quadrature chosen by default for a query (exposed for reporting).
SQuadrature default_quadrature(const RecoveryQuery2& q);
SQuadrature default_quadrature(const RecoveryQuery3& q);

struct BiotSavartOptions {
    double tolerance = 1e-9;      ///< free space: adaptive refinement target
    std::size_t max_level = 7;    ///< free space: refinement doublings
    std::size_t torus_modes = 64; ///< torus: Fourier modes per axis
};

/// Deterministic reference velocity. Free space: polar (2D) / spherical
/// (3D) quadrature centered on each target, which removes the kernel
/// singularity; needs vorticity support. Torus: Fourier inversion of
/// −△u = curl Ω̃ evaluated exactly at the targets.
std::vector<Vec2> biot_savart_direct(const ScalarField<2>& vorticity, const std::vector<Vec2>& targets,
                                     const Domain<2>& domain, const BiotSavartOptions& opt = {});
std::vector<Vec3> biot_savart_direct(const VectorField<3>& vorticity, const std::vector<Vec3>& targets,
                                     const Domain<3>& domain, const BiotSavartOptions& opt = {});

/// Integral of |Ω̃| over its support by midpoint quadrature.
double vorticity_l1(const ScalarField<2>& w, std::size_t cells_per_axis = 128);
double vorticity_l1(const VectorField<3>& w, std::size_t cells_per_axis = 48);

}  // namespace stochflow

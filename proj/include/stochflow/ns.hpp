#pragma once

/// @file ns.hpp
/// @brief Navier–Stokes by operator splitting: backward-path vorticity
/// transport over each step, then velocity reconstruction from vorticity.
///
/// One step over [τ, τ+dτ]:
///   1. transport the grid vorticity with the velocity frozen at τ;
///   2. rebuild u from the new vorticity (spectral Biot–Savart on a torus,
///      Brownian recovery or direct quadrature in free space);
///   3. optionally repeat 1–2 with u interpolated linearly in time between
///      u(τ) and the latest u(τ+dτ) (Picard) until successive velocities
///      agree to `picard_tol` in the sup norm.
/// The coupling frequency is a choice of this implementation.

#include <cstdint>
#include <optional>
#include <vector>

#include "stochflow/fields.hpp"
#include "stochflow/grid_field.hpp"
#include "stochflow/transport.hpp"

namespace stochflow {

enum class VelocityMethod { Auto, Spectral, Brownian, BiotSavart };

struct NSParams {
    double nu = 0.0;
    double dtau = 0.0;
    McParams mc;  ///< per-node paths; max_dt sets the transport sub-step
    int picard_max = 1;
    double picard_tol = 1e-3;
    VelocityMethod velocity_method = VelocityMethod::Auto;
    std::size_t recovery_samples = 400;  ///< per s-node, free-space Brownian route
    std::size_t recovery_nodes = 24;
    double direct_tolerance = 1e-6;  ///< direct Biot–Savart refinement target
};

struct NSDiagnostics {
    double time = 0.0;
    double kinetic_energy = 0.0;  ///< ½∫|u|²
    double enstrophy = 0.0;       ///< ½∫|Ω̃|²
    double max_vorticity = 0.0;
    double circulation = 0.0;     ///< ∫Ω̃ (2D), ∫|Ω̃| (3D)
    double mc_stderr_max = 0.0;
    double mc_stderr_mean = 0.0;
    double circulation_stderr = 0.0;  ///< MC error this step adds to the circulation
    double curl_residual = 0.0;   ///< max |curl u − Ω̃| (mean-free Ω̃ on a torus)
    double divergence_max = 0.0;
    double vorticity_min = 0.0;   ///< range of the first vorticity component
    double vorticity_max = 0.0;
    double sample_min = 0.0;      ///< 2D: extreme single-path samples of the step
    double sample_max = 0.0;
    int picard_iterations = 0;
    std::size_t n_excluded = 0;
};

template <int N>
struct NSState {
    double time = 0.0;
    std::uint64_t step_index = 0;
    GridField<N> velocity;   ///< N components
    GridField<N> vorticity;  ///< 1 component in 2D, 3 in 3D
    NSDiagnostics diagnostics;
};

/// Many-vortices initial condition.
struct VortexBlobInit {
    std::vector<VortexBlob> blobs;
};

/// Builds the initial 2D state on `layout` (torus or free-space box).
NSState<2> initial_state(const VortexBlobInit& init, const GridField<2>& layout, const NSParams& p);
/// Builds the initial state from an analytic vorticity field.
NSState<2> initial_state(const ScalarField<2>& vorticity, const GridField<2>& layout, const NSParams& p);
NSState<3> initial_state(const VectorField<3>& vorticity, const GridField<3>& layout, const NSParams& p);

NSState<2> step(const NSState<2>& state, const NSParams& p);
NSState<3> step(const NSState<3>& state, const NSParams& p);

/// Steps until time T (the last step is shortened to land on T). Returns
/// every state including the initial one; T = 0 returns just the input.
std::vector<NSState<2>> run(const NSState<2>& init, double t_end, const NSParams& p);
std::vector<NSState<3>> run(const NSState<3>& init, double t_end, const NSParams& p);

/// Diagnostics of a state (no MC fields).
NSDiagnostics diagnose(const NSState<2>& s);
NSDiagnostics diagnose(const NSState<3>& s);

}  // namespace stochflow

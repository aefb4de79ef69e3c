#pragma once

/// @file dynamo.hpp
/// @brief Kinematic dynamo: passive transport of the magnetic field by a
/// prescribed flow with magnetic diffusivity ν^m.
///
/// The magnetic field is transported exactly like vorticity (same backward
/// paths, same Jacobian action), with ν^m in place of ν.

#include <cstdint>
#include <vector>

#include "stochflow/fields.hpp"
#include "stochflow/transport.hpp"

namespace stochflow {

template <int N, class Initial>
struct DynamoQuery {
    double nu_m = 0.0;
    VelocityField<N> velocity;
    Initial initial;  ///< 3D: B̃₀ as a vector; 2D: the scalar dual
    double horizon = 0.0;
    std::vector<Vec<N>> probes;
    McParams mc;
};

using DynamoQuery2 = DynamoQuery<2, ScalarField<2>>;
using DynamoQuery3 = DynamoQuery<3, VectorField<3>>;

std::vector<ScalarEstimate> transport_magnetic(const DynamoQuery2& q);
std::vector<VectorEstimate3> transport_magnetic(const DynamoQuery3& q);

struct GrowthSample {
    double time = 0.0;
    double energy = 0.0;         ///< mean over probes of |B|², bias-corrected
    double energy_stderr = 0.0;
};

struct GrowthRate {
    /// Field growth exponent: B ~ e^{rate·τ}, i.e. half the slope of
    /// log energy.
    double rate = 0.0;
    double ci_low = 0.0;   ///< 95% interval from MC resampling
    double ci_high = 0.0;
    std::vector<GrowthSample> samples;
};

struct GrowthOptions {
    std::size_t n_times = 5;        ///< horizons spread evenly over the window
    std::size_t n_resamples = 400;
    std::uint64_t resample_seed = 0x5eed;
};

/// Least-squares slope of log energy against τ over [t1, t2]. Every horizon
/// reuses the same path streams. Throws IndeterminateRateError when an
/// energy estimate is within two standard errors of zero.
GrowthRate growth_rate(const DynamoQuery2& q, double t1, double t2, const GrowthOptions& opt = {});
GrowthRate growth_rate(const DynamoQuery3& q, double t1, double t2, const GrowthOptions& opt = {});

}  // namespace stochflow

#pragma once

#include <functional>
#include <span>
#include <string>

#include "stochflow/linalg.hpp"

namespace stochflow {

/// Diffusion frame K: R^N → R^{N×m}, handed out column by column.
///
/// The Stratonovich flow it drives is dx = scale·K(x)∘dW with W in R^m.
template <int N>
struct FrameField {
    std::string name;
    int fiber_dim = N;  ///< m ≥ N
    double scale = 1.0;
    /// Writes the m columns K₁(x) … K_m(x) into `cols` (size fiber_dim).
    std::function<void(const Vec<N>&, std::span<Vec<N>>)> columns;
    /// Optional angle θ(x) and its gradient for 2D rotation frames.
    std::function<double(const Vec<N>&)> angle;
    std::function<Vec<N>(const Vec<N>&)> angle_gradient;
};

}  // namespace stochflow

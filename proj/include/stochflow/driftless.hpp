#pragma once

/// @file driftless.hpp
/// @brief Driftless Stratonovich representation of drifted diffusions.
///
/// In 2D a rotation frame K(x) = R(θ(x)) satisfies KKᵀ = I and
/// Σᵢ(Kᵢ·∇)Kᵢ = J∇θ with J the quarter turn (x, y) ↦ (−y, x). The
/// Stratonovich flow dx = σK∘dW therefore has generator ½σ²△ + b·∇ with
/// b = ½σ²J∇θ. A divergence-free drift b = ∇⊥ψ (unit σ) is encoded by
/// θ = −2ψ, since J∇ψ = −∇⊥ψ.

#include <functional>
#include <string>
#include <vector>

#include "stochflow/fields.hpp"
#include "stochflow/frame.hpp"
#include "stochflow/sde.hpp"

namespace stochflow {

/// Rotation frame whose unit-scale Stratonovich flow has Ito drift ∇⊥ψ.
FrameField<2> build_rotation_frame_2d(const ScalarField<2>& stream);

/// Same, after checking that `drift` is divergence-free and equals ∇⊥ψ at
/// `probes` (central differences of step h). Throws UnsupportedDriftError
/// when either residual exceeds `tol`.
FrameField<2> build_rotation_frame_2d(const ScalarField<2>& stream, const std::function<Vec2(const Vec2&)>& drift,
                                      const std::vector<Vec2>& probes, double tol = 1e-6, double h = 1e-4);

/// Frame for the Lagrangian NS flow dx = −u ds + √(2ν) dW at a frozen
/// time t: scale √(2ν), θ = ψ_u/ν, where u = ∇⊥ψ_u.
FrameField<2> navier_stokes_frame_2d(const VelocityField<2>& u, double t, double nu);

/// Frame with θ multiplied by `factor`; used to exercise the checks.
FrameField<2> scale_angle(const FrameField<2>& frame, double factor);

FrameField<2> identity_frame_2d();
FrameField<3> identity_frame_3d();

struct FrameReport {
    double isotropy_residual = 0.0;  ///< max |KKᵀ − I|
    double drift_residual = 0.0;     ///< max |½σ²Σ(Kᵢ·∇)Kᵢ − b|
    double drift_scale = 0.0;        ///< max |b|
    bool analytic_gradient = false;
    bool pass(double tol) const { return isotropy_residual <= tol && drift_residual <= tol; }
};

struct FrameCheckOptions {
    /// Use the frame's analytic θ-gradient when available.
    bool prefer_analytic = true;
    double fd_step = 1e-5;
};

/// Generator-matching residuals at `points`. The drift compared is the
/// Ito drift of dx = σK∘dW, so σ = frame.scale enters squared.
template <int N>
FrameReport verify_frame_conditions(const FrameField<N>& frame, const std::function<Vec<N>(const Vec<N>&)>& drift,
                                    const std::vector<Vec<N>>& points, const FrameCheckOptions& opt = {});

/// Drift 1-form data for the 3D wedge-torsion construction. Only carried
/// and validated; no 3D frame is constructed.
struct TorsionSpec {
    int dimension = 3;
    std::function<Vec3(const Vec3&)> drift_form;  ///< Q, here −u/2ν
    void validate() const;
};

struct MomentZ {
    std::vector<int> powers;  ///< exponent per coordinate of x_τ − x₀
    int order = 0;
    double mean_a = 0.0;
    double mean_b = 0.0;
    double z = 0.0;
};

struct LawComparison {
    std::vector<MomentZ> moments;
    double max_abs_z = 0.0;
    double threshold = 4.0;
    bool pass() const { return max_abs_z < threshold; }
};

/// Per-moment z-scores of the displacement x_τ − x₀ between two ensembles,
/// for every monomial of total degree 1 … max_order.
template <int N>
LawComparison compare_laws(const PathEnsemble<N>& a, const PathEnsemble<N>& b, int max_order = 4,
                           double threshold = 4.0);

}  // namespace stochflow

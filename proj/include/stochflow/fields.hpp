#pragma once

/// @file fields.hpp
/// @brief Velocity, vorticity and magnetic fields with first derivatives.
///
/// Conventions used throughout the library:
///   - gradient(i, j) = ∂u^i/∂x^j, so (ω·∇)u = gradient * ω.
///   - 2D curl is ∂₁u² − ∂₂u¹; 3D curl is the usual rotational.
///   - ∇⊥f = (∂₂f, −∂₁f); a 2D stream function ψ gives u = ∇⊥ψ and
///     curl u = −△ψ.
///   - 3D vorticity and magnetic fields are stored as their adjoint vectors;
///     the 2-forms are never built.

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "stochflow/domain.hpp"
#include "stochflow/errors.hpp"
#include "stochflow/linalg.hpp"

namespace stochflow {

/// Ball outside of which a field is negligible (free-space quadrature).
template <int N>
struct Support {
    Vec<N> center{};
    double radius = 0.0;
};

/// Time-dependent velocity u(t, x) with its gradient.
template <int N>
struct VelocityField {
    std::string name;
    std::function<Vec<N>(double, const Vec<N>&)> value;
    std::function<Mat<N>(double, const Vec<N>&)> gradient;
    /// 2D only: ψ with u = ∇⊥ψ.
    std::function<double(double, const Vec<N>&)> stream;
};

/// Scalar field at a fixed time (2D vorticity, 2D magnetic potential).
template <int N>
struct ScalarField {
    std::string name;
    std::function<double(const Vec<N>&)> value;
    std::function<Vec<N>(const Vec<N>&)> gradient;
    std::optional<Support<N>> support;
};

/// Vector field at a fixed time (3D adjoint vorticity, magnetic field).
template <int N>
struct VectorField {
    std::string name;
    std::function<Vec<N>(const Vec<N>&)> value;
    std::function<Mat<N>(const Vec<N>&)> gradient;
    std::optional<Support<N>> support;
};

using VorticityField2 = ScalarField<2>;
using VorticityField3 = VectorField<3>;

// ---------------------------------------------------------------------------
// Vector calculus

inline double curl(const VelocityField<2>& u, double t, const Vec2& x) {
    const Mat2 g = u.gradient(t, x);
    return g(1, 0) - g(0, 1);
}

inline Vec3 curl(const VelocityField<3>& u, double t, const Vec3& x) {
    const Mat3 g = u.gradient(t, x);
    return {{g(2, 1) - g(1, 2), g(0, 2) - g(2, 0), g(1, 0) - g(0, 1)}};
}

inline Vec3 curl(const VectorField<3>& f, const Vec3& x) {
    const Mat3 g = f.gradient(x);
    return {{g(2, 1) - g(1, 2), g(0, 2) - g(2, 0), g(1, 0) - g(0, 1)}};
}

template <int N>
double divergence(const VelocityField<N>& u, double t, const Vec<N>& x) {
    return trace(u.gradient(t, x));
}

template <int N>
double divergence(const VectorField<N>& f, const Vec<N>& x) {
    return trace(f.gradient(x));
}

/// ∇⊥f = (∂₂f, −∂₁f). Only defined in 2D.
template <int N>
Vec2 perp_grad(const ScalarField<N>& f, const Vec<N>& x) {
    if constexpr (N != 2) {
        throw DimensionError("perp_grad is only defined in two dimensions");
    } else {
        return perp(f.gradient(x));
    }
}

/// Central-difference gradient of a scalar function; used by oracles and
/// by fields that only supply values.
template <int N, class F>
Vec<N> fd_gradient(const F& f, const Vec<N>& x, double h) {
    Vec<N> g{};
    for (int j = 0; j < N; ++j) {
        Vec<N> xp = x, xm = x;
        xp[j] += h;
        xm[j] -= h;
        g[j] = (f(xp) - f(xm)) / (2.0 * h);
    }
    return g;
}

/// Central-difference Jacobian of a vector function, (i, j) = ∂f^i/∂x^j.
template <int N, class F>
Mat<N> fd_jacobian(const F& f, const Vec<N>& x, double h) {
    Mat<N> g{};
    for (int j = 0; j < N; ++j) {
        Vec<N> xp = x, xm = x;
        xp[j] += h;
        xm[j] -= h;
        const Vec<N> d = (f(xp) - f(xm)) * (1.0 / (2.0 * h));
        for (int i = 0; i < N; ++i) g(i, j) = d[i];
    }
    return g;
}

/// Fills a missing gradient with central differences of step h.
template <int N>
ScalarField<N> with_fd_gradient(ScalarField<N> f, double h = 1e-5) {
    if (!f.gradient) {
        auto v = f.value;
        f.gradient = [v, h](const Vec<N>& x) { return fd_gradient<N>(v, x, h); };
    }
    return f;
}

template <int N>
VectorField<N> with_fd_gradient(VectorField<N> f, double h = 1e-5) {
    if (!f.gradient) {
        auto v = f.value;
        f.gradient = [v, h](const Vec<N>& x) { return fd_jacobian<N>(v, x, h); };
    }
    return f;
}

/// Freezes a time-dependent velocity at time t.
template <int N>
VectorField<N> snapshot(const VelocityField<N>& u, double t) {
    VectorField<N> f;
    f.name = u.name;
    auto val = u.value;
    auto grad = u.gradient;
    f.value = [val, t](const Vec<N>& x) { return val(t, x); };
    if (grad) f.gradient = [grad, t](const Vec<N>& x) { return grad(t, x); };
    return f;
}

/// Linear combination a·f + b·g of two vector fields.
template <int N>
VectorField<N> combine(double a, const VectorField<N>& f, double b, const VectorField<N>& g) {
    VectorField<N> r;
    r.name = "combination";
    r.value = [=](const Vec<N>& x) { return a * f.value(x) + b * g.value(x); };
    if (f.gradient && g.gradient) r.gradient = [=](const Vec<N>& x) { return a * f.gradient(x) + b * g.gradient(x); };
    return r;
}

template <int N>
ScalarField<N> combine(double a, const ScalarField<N>& f, double b, const ScalarField<N>& g) {
    ScalarField<N> r;
    r.name = "combination";
    r.value = [=](const Vec<N>& x) { return a * f.value(x) + b * g.value(x); };
    if (f.gradient && g.gradient) r.gradient = [=](const Vec<N>& x) { return a * f.gradient(x) + b * g.gradient(x); };
    return r;
}

// ---------------------------------------------------------------------------
// Analytic catalog

/// One Gaussian vortex blob: vorticity Γ/(πρ²)·exp(−|x−c|²/ρ²). ρ = 0 is a
/// point vortex (velocity only).
struct VortexBlob {
    Vec2 center{};
    double radius = 0.0;
    double circulation = 0.0;
};

namespace catalog {

/// Lamb–Oseen vortex at absolute time t0 + t; its core is 4ν(t0 + t).
VelocityField<2> lamb_oseen_velocity(double circulation, double nu, double t0, Vec2 center = {});
VorticityField2 lamb_oseen_vorticity(double circulation, double nu, double t, Vec2 center = {});
/// Azimuthal speed Γ/(2πr)·(1 − exp(−r²/4νt)).
double lamb_oseen_speed(double circulation, double nu, double t, double r);
/// Peak vorticity Γ/(4πνt).
double lamb_oseen_peak(double circulation, double nu, double t);

/// u = (cos x sin y, −sin x cos y)·e^{−2νt}; ψ = −cos x cos y·e^{−2νt}.
VelocityField<2> taylor_green_velocity(double nu);
VorticityField2 taylor_green_vorticity(double nu, double t);

/// Arnold–Beltrami–Childress flow (steady, curl u = u).
VelocityField<3> abc_flow(double a, double b, double c);

/// u = A·x with constant gradient A.
template <int N>
VelocityField<N> constant_strain(const Mat<N>& a) {
    VelocityField<N> u;
    u.name = "constant_strain";
    u.value = [a](double, const Vec<N>& x) { return a * x; };
    u.gradient = [a](double, const Vec<N>&) { return a; };
    return u;
}

template <int N>
VelocityField<N> uniform_velocity(const Vec<N>& c) {
    VelocityField<N> u;
    u.name = "uniform";
    u.value = [c](double, const Vec<N>&) { return c; };
    u.gradient = [](double, const Vec<N>&) { return Mat<N>::zero(); };
    if constexpr (N == 2) u.stream = [c](double, const Vec<N>& x) { return c[0] * x[1] - c[1] * x[0]; };
    return u;
}

template <int N>
VelocityField<N> zero_velocity() { return uniform_velocity<N>(Vec<N>{}); }

template <int N>
ScalarField<N> constant_scalar(double c) {
    ScalarField<N> f;
    f.name = "constant";
    f.value = [c](const Vec<N>&) { return c; };
    f.gradient = [](const Vec<N>&) { return Vec<N>{}; };
    return f;
}

template <int N>
VectorField<N> constant_vector(const Vec<N>& c) {
    VectorField<N> f;
    f.name = "constant";
    f.value = [c](const Vec<N>&) { return c; };
    f.gradient = [](const Vec<N>&) { return Mat<N>::zero(); };
    return f;
}

/// Isotropic Gaussian amplitude·exp(−|x−c|²/(2σ²)).
template <int N>
ScalarField<N> gaussian_scalar(double amplitude, double sigma, const Vec<N>& center = {}) {
    ScalarField<N> f;
    f.name = "gaussian";
    const double inv = 1.0 / (2.0 * sigma * sigma);
    f.value = [=](const Vec<N>& x) { return amplitude * std::exp(-dot(x - center, x - center) * inv); };
    f.gradient = [=](const Vec<N>& x) {
        const Vec<N> d = x - center;
        return d * (-2.0 * inv * amplitude * std::exp(-dot(d, d) * inv));
    };
    f.support = Support<N>{center, 10.0 * sigma};
    return f;
}

/// Linear scalar c·x + offset.
template <int N>
ScalarField<N> linear_scalar(const Vec<N>& c, double offset = 0.0) {
    ScalarField<N> f;
    f.name = "linear";
    f.value = [=](const Vec<N>& x) { return dot(c, x) + offset; };
    f.gradient = [=](const Vec<N>&) { return c; };
    return f;
}

/// Single Fourier mode amplitude·cos(k·x + phase) along `direction`
/// (direction must be orthogonal to k for a solenoidal field).
VectorField<3> fourier_mode(const Vec3& k, const Vec3& direction, double phase = 0.0);

/// Sum of Gaussian blobs ("many vortices"). On a torus each blob is taken
/// at its minimal image.
VorticityField2 blob_vorticity(const std::vector<VortexBlob>& blobs, const Domain<2>& domain);
/// Free-space velocity of the blobs (exact Lamb–Oseen profile per blob,
/// point-vortex kernel when radius = 0).
VelocityField<2> blob_velocity(const std::vector<VortexBlob>& blobs);

/// Straight Gaussian vortex tube along z with the Lamb–Oseen cross-section.
VorticityField3 gaussian_tube_z(double circulation, double core, Vec2 center = {});

}  // namespace catalog
}  // namespace stochflow

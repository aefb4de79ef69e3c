#pragma once

/// @file spectral.hpp
/// @brief Fourier-space operators on periodic grids (FFTW backend).

#include <vector>

#include "stochflow/grid_field.hpp"

namespace stochflow::spectral {

/// Leray projection onto divergence-free fields: û ← û − k(k·û)/|k|².
/// Throws UnsupportedDomainError on free-space grids.
GridField<2> project_div_free(const GridField<2>& v);
GridField<3> project_div_free(const GridField<3>& v);

/// Periodic Biot–Savart: solves −△ψ = ω and returns u = ∇⊥ψ (2D) or
/// u = curl A with −△A = ω (3D). The mean vorticity mode is dropped.
GridField<2> biot_savart(const GridField<2>& vorticity);
GridField<3> biot_savart(const GridField<3>& vorticity);

/// Spectral curl: scalar grid in 2D, 3-component grid in 3D.
GridField<2> curl(const GridField<2>& u);
GridField<3> curl(const GridField<3>& u);

/// Spectral divergence of an N-component grid (scalar result).
template <int N>
GridField<N> divergence(const GridField<N>& u);

/// Exact heat flow e^{ν t △} applied to every component.
template <int N>
GridField<N> heat(const GridField<N>& f, double nu, double t);

/// Trigonometric interpolation of one component at arbitrary points (the
/// Fourier series of the grid data, Nyquist modes dropped).
template <int N>
std::vector<double> interpolate(const GridField<N>& f, int comp, const std::vector<Vec<N>>& points);

}  // namespace stochflow::spectral

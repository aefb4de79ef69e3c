#pragma once

/// @file grid_field.hpp
/// @brief Uniform-grid fields with C¹ cubic (Catmull–Rom) interpolation.
///
/// Node (i₀, …, i_{N−1}) sits at origin + i·spacing. Storage is row-major
/// with the last axis fastest and components innermost. On a torus the grid
/// covers one period and indices wrap; in free space the field is taken to
/// vanish outside the node box.

#include <array>
#include <cmath>
#include <cstddef>
#include <functional>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "stochflow/domain.hpp"
#include "stochflow/errors.hpp"
#include "stochflow/fields.hpp"
#include "stochflow/linalg.hpp"

namespace stochflow {

template <int N>
class GridField {
public:
    using Index = std::array<std::size_t, N>;

    GridField() = default;

    /// Periodic grid of `shape` nodes covering one period of `domain`.
    static GridField torus(const Domain<N>& domain, const Index& shape, int components) {
        if (!domain.periodic()) throw UnsupportedDomainError("GridField::torus needs a periodic domain");
        GridField g;
        g.kind_ = DomainKind::Torus;
        g.shape_ = shape;
        g.components_ = components;
        for (int a = 0; a < N; ++a) g.spacing_[a] = domain.period[a] / static_cast<double>(shape[a]);
        g.values_.assign(g.node_count() * static_cast<std::size_t>(components), 0.0);
        return g;
    }

    /// Free-space grid whose nodes span [lo, hi] inclusive.
    static GridField box(const Vec<N>& lo, const Vec<N>& hi, const Index& shape, int components) {
        GridField g;
        g.kind_ = DomainKind::FreeSpace;
        g.shape_ = shape;
        g.components_ = components;
        g.origin_ = lo;
        for (int a = 0; a < N; ++a) g.spacing_[a] = (hi[a] - lo[a]) / static_cast<double>(shape[a] - 1);
        g.values_.assign(g.node_count() * static_cast<std::size_t>(components), 0.0);
        return g;
    }

    DomainKind kind() const { return kind_; }
    const Index& shape() const { return shape_; }
    const Vec<N>& origin() const { return origin_; }
    const Vec<N>& spacing() const { return spacing_; }
    int components() const { return components_; }
    std::span<const double> values() const { return values_; }
    std::span<double> values() { return values_; }

    Domain<N> domain() const {
        Domain<N> d;
        d.kind = kind_;
        if (kind_ == DomainKind::Torus)
            for (int a = 0; a < N; ++a) d.period[a] = spacing_[a] * static_cast<double>(shape_[a]);
        return d;
    }

    std::size_t node_count() const {
        std::size_t n = 1;
        for (auto s : shape_) n *= s;
        return n;
    }

    Index unflatten(std::size_t flat) const {
        Index idx{};
        for (int a = N - 1; a >= 0; --a) {
            idx[a] = flat % shape_[a];
            flat /= shape_[a];
        }
        return idx;
    }

    std::size_t flatten(const Index& idx) const {
        std::size_t flat = 0;
        for (int a = 0; a < N; ++a) flat = flat * shape_[a] + idx[a];
        return flat;
    }

    Vec<N> node(std::size_t flat) const {
        const Index idx = unflatten(flat);
        Vec<N> x;
        for (int a = 0; a < N; ++a) x[a] = origin_[a] + spacing_[a] * static_cast<double>(idx[a]);
        return x;
    }

    double& at(std::size_t flat, int comp) { return values_[flat * static_cast<std::size_t>(components_) + comp]; }
    double at(std::size_t flat, int comp) const {
        return values_[flat * static_cast<std::size_t>(components_) + comp];
    }

    /// Sets every node from f(x) → array of `components` values.
    template <class F>
    void fill(F&& f) {
        for (std::size_t n = 0; n < node_count(); ++n) {
            const auto v = f(node(n));
            for (int c = 0; c < components_; ++c) at(n, c) = v[static_cast<std::size_t>(c)];
        }
    }

    /// Cubic interpolation of every component and its gradient at x.
    /// `grads` may be empty when only values are needed.
    void interpolate(const Vec<N>& x, std::span<double> vals, std::span<Vec<N>> grads) const {
        std::array<std::array<double, 4>, N> w{}, dw{};
        std::array<std::array<long, 4>, N> idx{};
        std::array<std::array<bool, 4>, N> inside{};
        for (int a = 0; a < N; ++a) {
            double s = (x[a] - origin_[a]) / spacing_[a];
            // Snap round-off so node positions reproduce node values exactly.
            if (const double r = std::round(s); std::abs(s - r) < 1e-10) s = r;
            const double base = std::floor(s);
            const double t = s - base;
            const double t2 = t * t, t3 = t2 * t;
            w[a] = {0.5 * (-t3 + 2.0 * t2 - t), 0.5 * (3.0 * t3 - 5.0 * t2 + 2.0), 0.5 * (-3.0 * t3 + 4.0 * t2 + t),
                    0.5 * (t3 - t2)};
            const double inv = 1.0 / spacing_[a];
            dw[a] = {0.5 * (-3.0 * t2 + 4.0 * t - 1.0) * inv, 0.5 * (9.0 * t2 - 10.0 * t) * inv,
                     0.5 * (-9.0 * t2 + 8.0 * t + 1.0) * inv, 0.5 * (3.0 * t2 - 2.0 * t) * inv};
            const long n = static_cast<long>(shape_[a]);
            const long b = static_cast<long>(base);
            for (int k = 0; k < 4; ++k) {
                long i = b - 1 + k;
                if (kind_ == DomainKind::Torus) {
                    i %= n;
                    if (i < 0) i += n;
                    inside[a][k] = true;
                } else {
                    inside[a][k] = (i >= 0 && i < n);
                }
                idx[a][k] = i;
            }
        }
        for (int c = 0; c < components_; ++c) vals[c] = 0.0;
        for (std::size_t c = 0; c < grads.size(); ++c) grads[c] = Vec<N>{};

        const std::size_t nc = static_cast<std::size_t>(components_);
        if constexpr (N == 2) {
            for (int i = 0; i < 4; ++i) {
                if (!inside[0][i]) continue;
                for (int j = 0; j < 4; ++j) {
                    if (!inside[1][j]) continue;
                    const std::size_t flat = static_cast<std::size_t>(idx[0][i]) * shape_[1] + idx[1][j];
                    const double* v = &values_[flat * nc];
                    const double ww = w[0][i] * w[1][j];
                    for (std::size_t c = 0; c < nc; ++c) vals[c] += ww * v[c];
                    if (!grads.empty()) {
                        const double gx = dw[0][i] * w[1][j], gy = w[0][i] * dw[1][j];
                        for (std::size_t c = 0; c < nc; ++c) {
                            grads[c][0] += gx * v[c];
                            grads[c][1] += gy * v[c];
                        }
                    }
                }
            }
        } else {
            for (int i = 0; i < 4; ++i) {
                if (!inside[0][i]) continue;
                for (int j = 0; j < 4; ++j) {
                    if (!inside[1][j]) continue;
                    const double wij = w[0][i] * w[1][j];
                    const double gxij = dw[0][i] * w[1][j], gyij = w[0][i] * dw[1][j];
                    for (int k = 0; k < 4; ++k) {
                        if (!inside[2][k]) continue;
                        const std::size_t flat =
                            (static_cast<std::size_t>(idx[0][i]) * shape_[1] + idx[1][j]) * shape_[2] + idx[2][k];
                        const double* v = &values_[flat * nc];
                        const double ww = wij * w[2][k];
                        for (std::size_t c = 0; c < nc; ++c) vals[c] += ww * v[c];
                        if (!grads.empty()) {
                            const double gx = gxij * w[2][k], gy = gyij * w[2][k], gz = wij * dw[2][k];
                            for (std::size_t c = 0; c < nc; ++c) {
                                grads[c][0] += gx * v[c];
                                grads[c][1] += gy * v[c];
                                grads[c][2] += gz * v[c];
                            }
                        }
                    }
                }
            }
        }
    }

    double value(const Vec<N>& x, int comp = 0) const {
        std::array<double, 8> v{};
        interpolate(x, std::span<double>(v.data(), static_cast<std::size_t>(components_)), {});
        return v[static_cast<std::size_t>(comp)];
    }

    /// Writes the text container: one JSON header line, then one CSV row per
    /// node (components in order). Values use shortest round-trip form.
    void write(std::ostream& os) const;
    static GridField read(std::istream& is);

    bool operator==(const GridField&) const = default;

private:
    DomainKind kind_ = DomainKind::Torus;
    Index shape_{};
    Vec<N> origin_{};
    Vec<N> spacing_{};
    int components_ = 1;
    std::vector<double> values_;
};

/// Adapters from grids to the field types the solvers consume.
VelocityField<2> velocity_from_grid(const GridField<2>& g);
VelocityField<3> velocity_from_grid(const GridField<3>& g);
ScalarField<2> scalar_from_grid(const GridField<2>& g);
VectorField<3> vector_from_grid(const GridField<3>& g);

/// Velocity varying linearly in time between two grid slices at t0 and t1.
VelocityField<2> velocity_between(const GridField<2>& a, double t0, const GridField<2>& b, double t1);
VelocityField<3> velocity_between(const GridField<3>& a, double t0, const GridField<3>& b, double t1);

/// Samples a scalar field on a grid with the layout of `like` (1 component).
template <int N>
GridField<N> sample_scalar(const GridField<N>& like, const ScalarField<N>& f) {
    GridField<N> g = like.kind() == DomainKind::Torus
                         ? GridField<N>::torus(like.domain(), like.shape(), 1)
                         : GridField<N>::box(like.origin(), like.node(like.node_count() - 1), like.shape(), 1);
    g.fill([&](const Vec<N>& x) { return std::array<double, 1>{f.value(x)}; });
    return g;
}

template <int N>
GridField<N> sample_vector(const GridField<N>& like, const std::function<Vec<N>(const Vec<N>&)>& f) {
    GridField<N> g = like.kind() == DomainKind::Torus
                         ? GridField<N>::torus(like.domain(), like.shape(), N)
                         : GridField<N>::box(like.origin(), like.node(like.node_count() - 1), like.shape(), N);
    g.fill([&](const Vec<N>& x) { return f(x).v; });
    return g;
}

}  // namespace stochflow

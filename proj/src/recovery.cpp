#include "stochflow/recovery.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "stochflow/grid_field.hpp"
#include "stochflow/parallel.hpp"
#include "stochflow/quadrature.hpp"
#include "stochflow/rng.hpp"
#include "stochflow/spectral.hpp"

namespace stochflow {

constexpr double kPi = std::numbers::pi;

std::vector<double> SQuadrature::nodes() const {
    if (!(s_min > 0.0) || !(s_max > s_min) || n_nodes < 2)
        throw Error("SQuadrature: need 0 < s_min < s_max and at least two nodes");
    std::vector<double> s(n_nodes);
    const double h = std::log(s_max / s_min) / static_cast<double>(n_nodes - 1);
    for (std::size_t i = 0; i < n_nodes; ++i) s[i] = s_min * std::exp(h * static_cast<double>(i));
    s.back() = s_max;
    return s;
}

std::vector<double> SQuadrature::weights() const {
    const auto s = nodes();
    const double h = std::log(s_max / s_min) / static_cast<double>(n_nodes - 1);
    std::vector<double> w(n_nodes);
    for (std::size_t i = 0; i < n_nodes; ++i) {
        const double trap = (i == 0 || i + 1 == n_nodes) ? 0.5 * h : h;
        w[i] = trap * s[i];
    }
    // [0, s_min]: the integrand is bounded at s → 0, take it constant there.
    w[0] += s_min;
    return w;
}

namespace {

/// Max over targets of (distance to support center + support radius).
template <int N>
double reach(const Support<N>& sup, const std::vector<Vec<N>>& targets) {
    double d = 0.0;
    for (const auto& x : targets) d = std::max(d, norm(x - sup.center) + sup.radius);
    return d;
}

template <int N, class Field>
double sup_abs(const Field& f, const Domain<N>& dom) {
    const std::size_t m = N == 2 ? 32 : 16;
    double best = 0.0;
    std::array<std::size_t, N> idx{};
    std::size_t total = 1;
    for (int a = 0; a < N; ++a) total *= m;
    for (std::size_t flat = 0; flat < total; ++flat) {
        std::size_t r = flat;
        Vec<N> x;
        for (int a = 0; a < N; ++a) {
            idx[a] = r % m;
            r /= m;
            x[a] = dom.period[a] * static_cast<double>(idx[a]) / static_cast<double>(m);
        }
        if constexpr (std::is_same_v<Field, ScalarField<N>>)
            best = std::max(best, std::abs(f.value(x)));
        else
            best = std::max(best, norm(f.value(x)));
    }
    return best;
}

template <int N, class Field>
SQuadrature default_quadrature_impl(const RecoveryQuery<N, Field>& q) {
    SQuadrature quad;
    quad.n_nodes = 40;
    if (q.domain.periodic()) {
        const double l = q.domain.scale();
        quad.s_min = 1e-3 * l * l;
        quad.s_max = l * l;
        return quad;
    }
    quad.s_min = 1e-3;
    if (!q.vorticity.support) {
        quad.s_max = 1e4;
        return quad;
    }
    const double d = std::max(reach(*q.vorticity.support, q.targets), 1e-6);
    // Far-field bound (see tail_bound) set against the velocity scale
    // ‖Ω‖₁/(2πd) in 2D or ‖Ω‖₁/(4πd²) in 3D.
    if constexpr (N == 2) {
        quad.s_max = d * d / (2.0 * q.tail_tolerance);
    } else {
        const double c = 4.0 * kPi * d * d * d / (3.0 * std::pow(2.0 * kPi, 1.5) * q.tail_tolerance);
        quad.s_max = std::pow(c, 2.0 / 3.0);
    }
    quad.s_max = std::max(quad.s_max, 10.0 * quad.s_min);
    return quad;
}

/// Upper bound on |∫_{S}^∞ ½∇P_sΩ̃ ds| at x, using |∇p_s(z)| ≤ d/s·(2πs)^{−N/2}
/// for |z| ≤ d (free space), or the lowest torus mode otherwise.
template <int N, class Field>
double tail_bound(const RecoveryQuery<N, Field>& q, const Vec<N>& x, double s_max, double l1, double sup) {
    if (q.domain.periodic()) {
        const double k = 2.0 * kPi / q.domain.scale();
        return sup / k * std::exp(-0.5 * s_max * k * k);
    }
    if (!q.vorticity.support) return std::nan("");
    const double d = norm(x - q.vorticity.support->center) + q.vorticity.support->radius;
    return 0.5 * l1 * d * std::pow(2.0 * kPi, -0.5 * N) * (2.0 / N) * std::pow(s_max, -0.5 * N);
}

/// Per-component regression on up to K zero-mean controls:
/// mean(Y) − βᵀmean(Z) with β from the sample covariances. Controls with
/// no sample variance are dropped.
template <std::size_t K>
MeanEstimate regress(const std::vector<double>& y, const std::array<std::vector<double>, K>& z, std::size_t k_used) {
    const std::size_t n = y.size();
    const double dn = static_cast<double>(n);
    double my = 0.0;
    std::array<double, K> mz{};
    for (std::size_t i = 0; i < n; ++i) {
        my += y[i];
        for (std::size_t k = 0; k < k_used; ++k) mz[k] += z[k][i];
    }
    my /= dn;
    for (auto& m : mz) m /= dn;
    std::array<std::array<double, K>, K> czz{};
    std::array<double, K> czy{};
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t k = 0; k < k_used; ++k) {
            const double dz = z[k][i] - mz[k];
            czy[k] += dz * (y[i] - my);
            for (std::size_t l = 0; l < k_used; ++l) czz[k][l] += dz * (z[l][i] - mz[l]);
        }
    std::array<double, K> beta{};
    std::array<bool, K> keep{};
    for (std::size_t k = 0; k < k_used; ++k) keep[k] = czz[k][k] > 1e-300 * std::max(1.0, std::abs(czy[k]));
    if constexpr (K >= 2) {
        if (k_used == 2 && keep[0] && keep[1]) {
            const double det = czz[0][0] * czz[1][1] - czz[0][1] * czz[1][0];
            if (std::abs(det) > 1e-12 * czz[0][0] * czz[1][1]) {
                beta[0] = (czy[0] * czz[1][1] - czy[1] * czz[0][1]) / det;
                beta[1] = (czy[1] * czz[0][0] - czy[0] * czz[1][0]) / det;
                keep[0] = keep[1] = false;  // solved jointly
            } else {
                keep[1] = false;  // collinear controls: use the first alone
            }
        }
    }
    for (std::size_t k = 0; k < k_used; ++k)
        if (keep[k]) beta[k] = czy[k] / czz[k][k];

    MeanEstimate m;
    m.count = n;
    m.mean = my;
    for (std::size_t k = 0; k < k_used; ++k) m.mean -= beta[k] * mz[k];
    double rss = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        double r = y[i] - my;
        for (std::size_t k = 0; k < k_used; ++k) r -= beta[k] * (z[k][i] - mz[k]);
        rss += r * r;
    }
    const double dof = std::max(1.0, dn - 1.0 - static_cast<double>(k_used));
    m.stderr_ = std::sqrt(rss / dof / dn);
    return m;
}

/// Shared driver: sample(x, W, s, c, y, z) writes one sample of the
/// s-integrand to y and K zero-mean controls to z, where c = center(x) is
/// computed once per (target, node).
template <std::size_t K, int N, class Field, class Center, class Sample>
std::vector<RecoveryEstimate<N>> recover(const RecoveryQuery<N, Field>& q, Center&& center, Sample&& sample) {
    if (!q.vorticity.value) throw Error("recovery: vorticity field is empty");
    if (q.n_samples < 2) throw Error("recovery: need at least two samples per node");
    const SQuadrature quad = q.quadrature ? *q.quadrature : default_quadrature_impl(q);
    const auto s = quad.nodes();
    const auto w = quad.weights();
    const std::size_t nn = s.size();
    const std::size_t k_used = q.centered ? K : 0;

    double l1 = 0.0, sup = 0.0;
    if (q.domain.periodic())
        sup = sup_abs<N>(q.vorticity, q.domain);
    else if (q.vorticity.support)
        l1 = vorticity_l1(q.vorticity);

    std::vector<RecoveryEstimate<N>> out(q.targets.size());
    // Per (target, node) mean and stderr, filled in parallel.
    std::vector<Vec<N>> node_mean(q.targets.size() * nn), node_err(q.targets.size() * nn);
    parallel_for(q.targets.size() * nn, [&](std::size_t job) {
        const std::size_t j = job / nn, i = job % nn;
        PhiloxStream rng({q.seed, q.stream_offset + job});
        const double si = s[i];
        const double sq = std::sqrt(si);
        const auto c0 = center(q.targets[j]);
        std::array<std::vector<double>, N> ys;
        std::array<std::array<std::vector<double>, K>, N> zs;
        for (int a = 0; a < N; ++a) {
            ys[a].resize(q.n_samples);
            for (auto& v : zs[a]) v.resize(q.n_samples);
        }
        Vec<N> y;
        std::array<Vec<N>, K> z;
        for (std::size_t k = 0; k < q.n_samples; ++k) {
            Vec<N> wv;
            for (int a = 0; a < N; ++a) wv[a] = sq * rng.normal();
            sample(q.targets[j], wv, si, c0, y, z);
            for (int a = 0; a < N; ++a) {
                ys[a][k] = y[a];
                for (std::size_t c = 0; c < K; ++c) zs[a][c][k] = z[c][a];
            }
        }
        for (int a = 0; a < N; ++a) {
            const auto m = regress<K>(ys[a], zs[a], k_used);
            node_mean[job][a] = m.mean;
            node_err[job][a] = m.stderr_;
        }
    });

    for (std::size_t j = 0; j < q.targets.size(); ++j) {
        auto& e = out[j];
        Vec<N> var{};
        for (std::size_t i = 0; i < nn; ++i) {
            const auto& m = node_mean[j * nn + i];
            const auto& se = node_err[j * nn + i];
            e.velocity += m * w[i];
            for (int a = 0; a < N; ++a) var[a] += w[i] * w[i] * se[a] * se[a];
            if (q.keep_node_means) {
                e.node_means.push_back(m);
                e.node_stderr.push_back(se);
            }
        }
        for (int a = 0; a < N; ++a) e.stderr_[a] = std::sqrt(var[a]);
        e.n_samples = q.n_samples;
        e.tail_bound = tail_bound(q, q.targets[j], quad.s_max, l1, sup);
        const double scale = std::max(norm(e.velocity), 3.0 * norm(e.stderr_));
        e.tail_warning = std::isfinite(e.tail_bound) && e.tail_bound > q.tail_tolerance * scale && scale > 0.0;
    }
    return out;
}

double fd_step(double s) { return std::max(1e-5, 1e-3 * std::sqrt(s)); }

/// [ρ(W − h e) − ρ(W + h e)]/2h for ρ the N(0, sI) density ratio
/// p_s(W ∓ h e)/p_s(W): the likelihood-ratio coupling of a central
/// difference, exactly unbiased for the same target as shifting x.
double lr_weight(double wa, double s, double h) {
    const double g = std::exp(-0.5 * h * h / s);
    return g * (std::exp(wa * h / s) - std::exp(-wa * h / s)) / (2.0 * h);
}

}  // namespace

SQuadrature default_quadrature(const RecoveryQuery2& q) { return default_quadrature_impl(q); }
SQuadrature default_quadrature(const RecoveryQuery3& q) { return default_quadrature_impl(q); }

// The control Ω̃(x)·W⊥/2s (resp. Ω̃(x)×W/2s) has mean zero; regressing on it
// recovers the centered estimator at small s without its large-s noise.
std::vector<RecoveryEstimate<2>> recover_velocity_2d(const RecoveryQuery2& q) {
    const auto& f = q.vorticity.value;
    return recover<1>(q, [&](const Vec2& x) { return f(x); },
                      [&](const Vec2& x, const Vec2& w, double s, double c, Vec2& y, std::array<Vec2, 1>& z) {
                          const Vec2 k = perp(w) * (1.0 / (2.0 * s));
                          y = k * f(x + w);
                          z[0] = k * c;
                      });
}

std::vector<RecoveryEstimate<3>> recover_velocity_3d(const RecoveryQuery3& q) {
    const auto& f = q.vorticity.value;
    return recover<1>(q, [&](const Vec3& x) { return f(x); },
                      [&](const Vec3& x, const Vec3& w, double s, const Vec3& c, Vec3& y, std::array<Vec3, 1>& z) {
                          y = cross(f(x + w), w) * (-1.0 / (2.0 * s));
                          z[0] = cross(c, w) * (-1.0 / (2.0 * s));
                      });
}

// Central differences of P_sΩ̃ with common random numbers. The primary
// coupling shifts the evaluation point; the likelihood-ratio coupling of the
// same difference enters only as a zero-mean control.
std::vector<RecoveryEstimate<2>> recover_velocity_gradform(const RecoveryQuery2& q) {
    const auto& f = q.vorticity.value;
    return recover<2>(q, [&](const Vec2& x) { return f(x); },
                      [&](const Vec2& x, const Vec2& w, double s, double c, Vec2& y, std::array<Vec2, 2>& z) {
                          const double h = fd_step(s);
                          const Vec2 p = x + w;
                          const double fp = f(p);
                          const Vec2 g{{(f(p + Vec2{{h, 0.0}}) - f(p - Vec2{{h, 0.0}})) / (2.0 * h),
                                        (f(p + Vec2{{0.0, h}}) - f(p - Vec2{{0.0, h}})) / (2.0 * h)}};
                          const Vec2 lr{{fp * lr_weight(w[0], s, h), fp * lr_weight(w[1], s, h)}};
                          y = perp(g) * 0.5;
                          z[0] = perp(g - lr) * 0.5;
                          z[1] = perp(Vec2{{lr_weight(w[0], s, h), lr_weight(w[1], s, h)}}) * (0.5 * c);
                      });
}

std::vector<RecoveryEstimate<3>> recover_velocity_gradform(const RecoveryQuery3& q) {
    const auto& f = q.vorticity.value;
    return recover<2>(q, [&](const Vec3& x) { return f(x); },
                      [&](const Vec3& x, const Vec3& w, double s, const Vec3& c, Vec3& y, std::array<Vec3, 2>& z) {
                          const double h = fd_step(s);
                          const Mat3 g = fd_jacobian<3>(f, x + w, h);
                          const Vec3 fp = f(x + w);
                          const Vec3 r{{lr_weight(w[0], s, h), lr_weight(w[1], s, h), lr_weight(w[2], s, h)}};
                          // curl from ∂ⱼΩⁱ: shifted (g) and likelihood-ratio (Ωⁱ rⱼ) couplings.
                          auto curl = [](auto&& d) {
                              return Vec3{{d(2, 1) - d(1, 2), d(0, 2) - d(2, 0), d(1, 0) - d(0, 1)}};
                          };
                          const Vec3 cs = curl([&](int i, int j) { return g(i, j); });
                          const Vec3 cl = curl([&](int i, int j) { return fp[i] * r[j]; });
                          y = cs * 0.5;
                          z[0] = (cs - cl) * 0.5;
                          z[1] = curl([&](int i, int j) { return c[i] * r[j]; }) * 0.5;
                      });
}

// ---------------------------------------------------------------------------
// Direct Biot–Savart

double vorticity_l1(const ScalarField<2>& w, std::size_t cells) {
    if (!w.support) throw ResolutionError("vorticity_l1: field has no support");
    const auto& sup = *w.support;
    const double h = 2.0 * sup.radius / static_cast<double>(cells);
    double total = 0.0;
    for (std::size_t i = 0; i < cells; ++i)
        for (std::size_t j = 0; j < cells; ++j) {
            const Vec2 x{{sup.center[0] - sup.radius + (static_cast<double>(i) + 0.5) * h,
                          sup.center[1] - sup.radius + (static_cast<double>(j) + 0.5) * h}};
            total += std::abs(w.value(x));
        }
    return total * h * h;
}

double vorticity_l1(const VectorField<3>& w, std::size_t cells) {
    if (!w.support) throw ResolutionError("vorticity_l1: field has no support");
    const auto& sup = *w.support;
    const double h = 2.0 * sup.radius / static_cast<double>(cells);
    double total = 0.0;
    for (std::size_t i = 0; i < cells; ++i)
        for (std::size_t j = 0; j < cells; ++j)
            for (std::size_t k = 0; k < cells; ++k) {
                const Vec3 x{{sup.center[0] - sup.radius + (static_cast<double>(i) + 0.5) * h,
                              sup.center[1] - sup.radius + (static_cast<double>(j) + 0.5) * h,
                              sup.center[2] - sup.radius + (static_cast<double>(k) + 0.5) * h}};
                total += norm(w.value(x));
            }
    return total * h * h * h;
}

namespace {

// u(x) = (1/2π) ∫₀^R ∫₀^{2π} Ω̃(x + ρe_φ)·(sin φ, −cos φ) dφ dρ
Vec2 polar_biot_savart(const ScalarField<2>& w, const Vec2& x, double radius, std::size_t level) {
    static const auto gl = gauss_legendre(8);
    const std::size_t panels = 8u << level;
    const std::size_t n_phi = 64u << level;
    const double dr = radius / static_cast<double>(panels);
    std::vector<double> cphi(n_phi), sphi(n_phi);
    for (std::size_t k = 0; k < n_phi; ++k) {
        const double phi = 2.0 * kPi * static_cast<double>(k) / static_cast<double>(n_phi);
        cphi[k] = std::cos(phi);
        sphi[k] = std::sin(phi);
    }
    Vec2 u{};
    for (std::size_t p = 0; p < panels; ++p)
        for (std::size_t g = 0; g < gl.first.size(); ++g) {
            const double rho = dr * (static_cast<double>(p) + 0.5 * (gl.first[g] + 1.0));
            const double wr = 0.5 * dr * gl.second[g];
            double ax = 0.0, ay = 0.0;
            for (std::size_t k = 0; k < n_phi; ++k) {
                const double v = w.value(x + Vec2{{rho * cphi[k], rho * sphi[k]}});
                ax += v * sphi[k];
                ay -= v * cphi[k];
            }
            u[0] += wr * ax;
            u[1] += wr * ay;
        }
    return u * (1.0 / static_cast<double>(n_phi));
}

// u(x) = −(1/4π) ∫₀^R ∫_{S²} Ω̃(x + ρn) × n dn dρ
Vec3 spherical_biot_savart(const VectorField<3>& w, const Vec3& x, double radius, std::size_t level) {
    static const auto gl = gauss_legendre(8);
    const std::size_t panels = 4u << level;
    const auto glt = gauss_legendre(static_cast<int>(8u << level));
    const std::size_t n_phi = 16u << level;
    const double dr = radius / static_cast<double>(panels);
    Vec3 u{};
    for (std::size_t p = 0; p < panels; ++p)
        for (std::size_t g = 0; g < gl.first.size(); ++g) {
            const double rho = dr * (static_cast<double>(p) + 0.5 * (gl.first[g] + 1.0));
            const double wr = 0.5 * dr * gl.second[g];
            Vec3 acc{};
            for (std::size_t t = 0; t < glt.first.size(); ++t) {
                const double ct = glt.first[t];
                const double st = std::sqrt(std::max(0.0, 1.0 - ct * ct));
                for (std::size_t k = 0; k < n_phi; ++k) {
                    const double phi = 2.0 * kPi * static_cast<double>(k) / static_cast<double>(n_phi);
                    const Vec3 n{{st * std::cos(phi), st * std::sin(phi), ct}};
                    acc += cross(w.value(x + n * rho), n) * glt.second[t];
                }
            }
            u += acc * (wr * 2.0 * kPi / static_cast<double>(n_phi));
        }
    return u * (-1.0 / (4.0 * kPi));
}

template <int N, class Field, class Quad>
std::vector<Vec<N>> adaptive_direct(const Field& w, const std::vector<Vec<N>>& targets, const BiotSavartOptions& opt,
                                    Quad&& quad) {
    if (!w.support) throw ResolutionError("biot_savart_direct: free-space vorticity needs a support radius");
    std::vector<Vec<N>> out(targets.size());
    for (std::size_t j = 0; j < targets.size(); ++j) {
        const double radius = norm(targets[j] - w.support->center) + w.support->radius;
        Vec<N> prev = quad(w, targets[j], radius, 0);
        bool converged = false;
        for (std::size_t level = 1; level <= opt.max_level; ++level) {
            const Vec<N> next = quad(w, targets[j], radius, level);
            const double diff = norm(next - prev);
            prev = next;
            if (diff <= opt.tolerance * std::max(1.0, norm(next))) {
                converged = true;
                break;
            }
        }
        if (!converged) throw ResolutionError("biot_savart_direct: quadrature did not resolve the vorticity support");
        out[j] = prev;
    }
    return out;
}

}  // namespace

std::vector<Vec2> biot_savart_direct(const ScalarField<2>& w, const std::vector<Vec2>& targets,
                                     const Domain<2>& domain, const BiotSavartOptions& opt) {
    if (domain.periodic()) {
        auto grid = GridField<2>::torus(domain, {opt.torus_modes, opt.torus_modes}, 1);
        grid.fill([&](const Vec2& x) { return std::array<double, 1>{w.value(x)}; });
        const auto u = spectral::biot_savart(grid);
        const auto ux = spectral::interpolate(u, 0, targets);
        const auto uy = spectral::interpolate(u, 1, targets);
        std::vector<Vec2> out(targets.size());
        for (std::size_t j = 0; j < targets.size(); ++j) out[j] = {{ux[j], uy[j]}};
        return out;
    }
    return adaptive_direct<2>(w, targets, opt, polar_biot_savart);
}

std::vector<Vec3> biot_savart_direct(const VectorField<3>& w, const std::vector<Vec3>& targets,
                                     const Domain<3>& domain, const BiotSavartOptions& opt) {
    if (domain.periodic()) {
        const std::size_t m = opt.torus_modes;
        auto grid = GridField<3>::torus(domain, {m, m, m}, 3);
        grid.fill([&](const Vec3& x) { return w.value(x).v; });
        const auto u = spectral::biot_savart(grid);
        std::array<std::vector<double>, 3> c;
        for (int a = 0; a < 3; ++a) c[a] = spectral::interpolate(u, a, targets);
        std::vector<Vec3> out(targets.size());
        for (std::size_t j = 0; j < targets.size(); ++j) out[j] = {{c[0][j], c[1][j], c[2][j]}};
        return out;
    }
    return adaptive_direct<3>(w, targets, opt, spherical_biot_savart);
}

}  // namespace stochflow

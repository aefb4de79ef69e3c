#include "stochflow/ns.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

#include "stochflow/parallel.hpp"
#include "stochflow/recovery.hpp"
#include "stochflow/spectral.hpp"

namespace stochflow {

namespace {

// Recovery streams live in their own half of the id space so they never
// collide with transport streams.
constexpr std::uint64_t kRecoveryStreamBit = std::uint64_t{1} << 62;

template <int N>
std::vector<Vec<N>> nodes_of(const GridField<N>& g) {
    std::vector<Vec<N>> x(g.node_count());
    for (std::size_t i = 0; i < x.size(); ++i) x[i] = g.node(i);
    return x;
}

template <int N>
GridField<N> same_layout(const GridField<N>& like, int comps) {
    if (like.kind() == DomainKind::Torus) return GridField<N>::torus(like.domain(), like.shape(), comps);
    return GridField<N>::box(like.origin(), like.node(like.node_count() - 1), like.shape(), comps);
}

template <int N>
double cell_volume(const GridField<N>& g) {
    double v = 1.0;
    for (int a = 0; a < N; ++a) v *= g.spacing()[a];
    return v;
}

VelocityMethod resolve(VelocityMethod m, DomainKind kind) {
    if (m != VelocityMethod::Auto) return m;
    return kind == DomainKind::Torus ? VelocityMethod::Spectral : VelocityMethod::Brownian;
}

void check_params(const NSParams& p) {
    if (!(p.nu > 0.0)) throw ConfigError("nu", "viscosity must be positive");
    if (!(p.dtau > 0.0)) throw ConfigError("dtau", "time step must be positive");
    if (p.mc.n_paths < 2) throw ConfigError("n_paths", "need at least two paths per node");
    if (p.picard_max < 1 || p.picard_max > 5) throw ConfigError("picard_max", "must be in [1, 5]");
}

template <int N, class Query>
Query recovery_query(const GridField<N>& w, const NSParams& p, std::uint64_t stream) {
    Query q;
    q.targets = nodes_of(w);
    q.domain = w.domain();
    q.n_samples = p.recovery_samples;
    q.seed = p.mc.seed;
    q.stream_offset = stream;
    return q;
}

/// Free-space Biot–Savart on grid data: midpoint sum of the kernel over
/// cells, skipping the target's own cell (zero by symmetry).
GridField<2> biot_savart_cells(const GridField<2>& w) {
    const std::size_t n = w.node_count();
    const double area = cell_volume(w) / (2.0 * std::numbers::pi);
    GridField<2> out = same_layout(w, 2);
    parallel_for(n, [&](std::size_t i) {
        const Vec2 x = w.node(i);
        double ux = 0.0, uy = 0.0;
        for (std::size_t j = 0; j < n; ++j) {
            const double om = w.at(j, 0);
            if (j == i || om == 0.0) continue;
            const Vec2 d = x - w.node(j);
            const double r2 = dot(d, d);
            // K(d) = (−d², d¹)/(2π|d|²)
            ux -= om * d[1] / r2;
            uy += om * d[0] / r2;
        }
        out.at(i, 0) = ux * area;
        out.at(i, 1) = uy * area;
    });
    return out;
}

GridField<3> biot_savart_cells(const GridField<3>& w) {
    const std::size_t n = w.node_count();
    const double vol = cell_volume(w) / (4.0 * std::numbers::pi);
    GridField<3> out = same_layout(w, 3);
    parallel_for(n, [&](std::size_t i) {
        const Vec3 x = w.node(i);
        Vec3 u{};
        for (std::size_t j = 0; j < n; ++j) {
            if (j == i) continue;
            const Vec3 om{{w.at(j, 0), w.at(j, 1), w.at(j, 2)}};
            const Vec3 d = x - w.node(j);
            const double r = norm(d);
            // u = (1/4π)∫ Ω(y)×(x−y)/|x−y|³ dy
            u += cross(om, d) * (1.0 / (r * r * r));
        }
        for (int c = 0; c < 3; ++c) out.at(i, c) = u[c] * vol;
    });
    return out;
}

BiotSavartOptions direct_options(const NSParams& p) {
    BiotSavartOptions o;
    o.tolerance = p.direct_tolerance;
    return o;
}

GridField<2> velocity_from_vorticity(const GridField<2>& w, const NSParams& p, std::uint64_t stream) {
    switch (resolve(p.velocity_method, w.kind())) {
    case VelocityMethod::Spectral:
        return spectral::biot_savart(w);
    case VelocityMethod::BiotSavart: {
        if (w.kind() == DomainKind::FreeSpace) return biot_savart_cells(w);
        const auto u = biot_savart_direct(scalar_from_grid(w), nodes_of(w), w.domain(), direct_options(p));
        GridField<2> out = same_layout(w, 2);
        for (std::size_t i = 0; i < u.size(); ++i)
            for (int c = 0; c < 2; ++c) out.at(i, c) = u[i][c];
        return out;
    }
    default: {
        auto q = recovery_query<2, RecoveryQuery2>(w, p, stream);
        q.vorticity = scalar_from_grid(w);
        SQuadrature quad = default_quadrature(q);
        quad.n_nodes = p.recovery_nodes;
        q.quadrature = quad;
        const auto r = recover_velocity_2d(q);
        GridField<2> out = same_layout(w, 2);
        for (std::size_t i = 0; i < r.size(); ++i)
            for (int c = 0; c < 2; ++c) out.at(i, c) = r[i].velocity[c];
        return out;
    }
    }
}

GridField<3> velocity_from_vorticity(const GridField<3>& w, const NSParams& p, std::uint64_t stream) {
    switch (resolve(p.velocity_method, w.kind())) {
    case VelocityMethod::Spectral:
        return spectral::biot_savart(w);
    case VelocityMethod::BiotSavart: {
        if (w.kind() == DomainKind::FreeSpace) return biot_savart_cells(w);
        const auto u = biot_savart_direct(vector_from_grid(w), nodes_of(w), w.domain(), direct_options(p));
        GridField<3> out = same_layout(w, 3);
        for (std::size_t i = 0; i < u.size(); ++i)
            for (int c = 0; c < 3; ++c) out.at(i, c) = u[i][c];
        return out;
    }
    default: {
        auto q = recovery_query<3, RecoveryQuery3>(w, p, stream);
        q.vorticity = vector_from_grid(w);
        SQuadrature quad = default_quadrature(q);
        quad.n_nodes = p.recovery_nodes;
        q.quadrature = quad;
        const auto r = recover_velocity_3d(q);
        GridField<3> out = same_layout(w, 3);
        for (std::size_t i = 0; i < r.size(); ++i)
            for (int c = 0; c < 3; ++c) out.at(i, c) = r[i].velocity[c];
        return out;
    }
    }
}

/// Transport result on the grid plus the MC summary for diagnostics.
template <int N>
struct Advanced {
    GridField<N> vorticity;
    double stderr_max = 0.0;
    double stderr_mean = 0.0;
    double stderr_rss = 0.0;  ///< √Σ stderr² over nodes
    double sample_min = 0.0;
    double sample_max = 0.0;
    std::size_t n_excluded = 0;
};

Advanced<2> transport(const GridField<2>& w0, const VelocityField<2>& u, double dtau, const NSParams& p,
                      std::uint64_t stream) {
    TransportQuery2 q;
    q.tau = dtau;
    q.targets = nodes_of(w0);
    q.nu = p.nu;
    q.velocity = u;
    q.initial = scalar_from_grid(w0);
    q.mc = p.mc;
    q.mc.stream_offset = stream;
    const auto est = solve_vorticity_2d(q);

    Advanced<2> out{same_layout(w0, 1)};
    std::vector<double> errs(est.size());
    out.sample_min = est.empty() ? 0.0 : est[0].sample_min;
    out.sample_max = est.empty() ? 0.0 : est[0].sample_max;
    for (std::size_t i = 0; i < est.size(); ++i) {
        out.vorticity.at(i, 0) = est[i].estimate;
        errs[i] = est[i].stderr_;
        out.stderr_max = std::max(out.stderr_max, errs[i]);
        out.sample_min = std::min(out.sample_min, est[i].sample_min);
        out.sample_max = std::max(out.sample_max, est[i].sample_max);
        out.n_excluded += est[i].n_excluded;
    }
    out.stderr_mean = errs.empty() ? 0.0 : pairwise_sum(errs) / static_cast<double>(errs.size());
    for (double& e : errs) e *= e;
    out.stderr_rss = std::sqrt(pairwise_sum(errs));
    return out;
}

Advanced<3> transport(const GridField<3>& w0, const VelocityField<3>& u, double dtau, const NSParams& p,
                      std::uint64_t stream) {
    TransportQuery3 q;
    q.tau = dtau;
    q.targets = nodes_of(w0);
    q.nu = p.nu;
    q.velocity = u;
    q.initial = vector_from_grid(w0);
    q.mc = p.mc;
    q.mc.stream_offset = stream;
    const auto est = solve_vorticity_3d(q);

    Advanced<3> out{same_layout(w0, 3)};
    std::vector<double> errs(est.size());
    for (std::size_t i = 0; i < est.size(); ++i) {
        for (int c = 0; c < 3; ++c) out.vorticity.at(i, c) = est[i].estimate[c];
        errs[i] = norm(est[i].stderr_);
        out.stderr_max = std::max(out.stderr_max, errs[i]);
        out.n_excluded += est[i].n_excluded;
    }
    out.stderr_mean = errs.empty() ? 0.0 : pairwise_sum(errs) / static_cast<double>(errs.size());
    for (double& e : errs) e *= e;
    out.stderr_rss = std::sqrt(pairwise_sum(errs));
    return out;
}

template <int N>
double sup_distance(const GridField<N>& a, const GridField<N>& b) {
    double d = 0.0;
    const auto va = a.values(), vb = b.values();
    for (std::size_t i = 0; i < va.size(); ++i) d = std::max(d, std::abs(va[i] - vb[i]));
    return d;
}

/// Curl and divergence of a velocity grid: spectral on a torus, the
/// interpolant's derivative (central differences) in free space.
template <int N>
std::pair<GridField<N>, GridField<N>> curl_div(const GridField<N>& u) {
    if (u.kind() == DomainKind::Torus) return {spectral::curl(u), spectral::divergence(u)};
    constexpr int nc = N == 2 ? 1 : 3;
    GridField<N> c = same_layout(u, nc), d = same_layout(u, 1);
    for (std::size_t i = 0; i < u.node_count(); ++i) {
        std::array<double, N> v{};
        std::array<Vec<N>, N> g{};
        u.interpolate(u.node(i), std::span<double>(v.data(), N), std::span<Vec<N>>(g.data(), N));
        if constexpr (N == 2) {
            c.at(i, 0) = g[1][0] - g[0][1];
        } else {
            c.at(i, 0) = g[2][1] - g[1][2];
            c.at(i, 1) = g[0][2] - g[2][0];
            c.at(i, 2) = g[1][0] - g[0][1];
        }
        double div = 0.0;
        for (int a = 0; a < N; ++a) div += g[a][a];
        d.at(i, 0) = div;
    }
    return {c, d};
}

/// True for nodes whose derivative stencil stays inside a free-space box.
template <int N>
bool interior(const GridField<N>& g, std::size_t flat) {
    if (g.kind() == DomainKind::Torus) return true;
    const auto idx = g.unflatten(flat);
    for (int a = 0; a < N; ++a)
        if (idx[a] < 2 || idx[a] + 2 >= g.shape()[a]) return false;
    return true;
}

template <int N>
NSDiagnostics diagnose_impl(const NSState<N>& s) {
    NSDiagnostics d;
    d.time = s.time;
    const double dv = cell_volume(s.vorticity);
    const std::size_t n = s.vorticity.node_count();
    const int wc = s.vorticity.components();
    std::vector<double> ke(n), ens(n), circ(n);
    double wmin = n ? s.vorticity.at(0, 0) : 0.0, wmax = wmin;
    for (std::size_t i = 0; i < n; ++i) {
        double u2 = 0.0, w2 = 0.0;
        for (int c = 0; c < N; ++c) u2 += s.velocity.at(i, c) * s.velocity.at(i, c);
        for (int c = 0; c < wc; ++c) w2 += s.vorticity.at(i, c) * s.vorticity.at(i, c);
        ke[i] = 0.5 * u2 * dv;
        ens[i] = 0.5 * w2 * dv;
        circ[i] = (wc == 1 ? s.vorticity.at(i, 0) : std::sqrt(w2)) * dv;
        d.max_vorticity = std::max(d.max_vorticity, std::sqrt(w2));
        wmin = std::min(wmin, s.vorticity.at(i, 0));
        wmax = std::max(wmax, s.vorticity.at(i, 0));
    }
    d.kinetic_energy = pairwise_sum(ke);
    d.enstrophy = pairwise_sum(ens);
    d.circulation = pairwise_sum(circ);
    d.vorticity_min = wmin;
    d.vorticity_max = wmax;

    const auto [cu, du] = curl_div(s.velocity);
    // The periodic Biot–Savart drops the mean mode, so compare against the
    // mean-free vorticity there.
    std::array<double, 3> mean{};
    if (s.vorticity.kind() == DomainKind::Torus) {
        for (int c = 0; c < wc; ++c) {
            std::vector<double> col(n);
            for (std::size_t i = 0; i < n; ++i) col[i] = s.vorticity.at(i, c);
            mean[static_cast<std::size_t>(c)] = pairwise_sum(col) / static_cast<double>(n);
        }
    }
    for (std::size_t i = 0; i < n; ++i) {
        if (!interior(s.velocity, i)) continue;
        for (int c = 0; c < wc; ++c)
            d.curl_residual = std::max(
                d.curl_residual, std::abs(cu.at(i, c) - (s.vorticity.at(i, c) - mean[static_cast<std::size_t>(c)])));
        d.divergence_max = std::max(d.divergence_max, std::abs(du.at(i, 0)));
    }
    return d;
}

template <int N>
NSState<N> step_impl(const NSState<N>& s, const NSParams& p) {
    check_params(p);
    const double dtau = p.dtau;
    const std::uint64_t per_step = static_cast<std::uint64_t>(s.vorticity.node_count()) * p.mc.n_paths;
    const std::uint64_t stream = p.mc.stream_offset + s.step_index * per_step;
    const std::uint64_t rec_stream =
        kRecoveryStreamBit + s.step_index * static_cast<std::uint64_t>(s.vorticity.node_count()) * 64;

    auto adv = transport(s.vorticity, velocity_from_grid(s.velocity), dtau, p, stream);
    GridField<N> u_new = velocity_from_vorticity(adv.vorticity, p, rec_stream);
    int iterations = 1;
    double prev_dist = 0.0;
    for (int k = 1; k < p.picard_max; ++k) {
        // Same streams as the first pass, so iterates differ only through u.
        auto adv_k = transport(s.vorticity, velocity_between(s.velocity, 0.0, u_new, dtau), dtau, p, stream);
        GridField<N> u_k = velocity_from_vorticity(adv_k.vorticity, p, rec_stream);
        const double dist = sup_distance(u_k, u_new);
        ++iterations;
        adv = std::move(adv_k);
        u_new = std::move(u_k);
        if (k > 1 && dist > prev_dist) {
            std::ostringstream msg;
            msg << "Picard iteration diverging at t=" << s.time << " (distance " << prev_dist << " -> " << dist
                << "); reduce dtau below " << dtau;
            throw StepSizeError(msg.str());
        }
        prev_dist = dist;
        if (dist < p.picard_tol) break;
    }

    NSState<N> next;
    next.time = s.time + dtau;
    next.step_index = s.step_index + 1;
    next.velocity = std::move(u_new);
    next.vorticity = std::move(adv.vorticity);
    next.diagnostics = diagnose_impl(next);
    next.diagnostics.mc_stderr_max = adv.stderr_max;
    next.diagnostics.mc_stderr_mean = adv.stderr_mean;
    next.diagnostics.circulation_stderr = adv.stderr_rss * cell_volume(next.vorticity);
    next.diagnostics.n_excluded = adv.n_excluded;
    next.diagnostics.picard_iterations = iterations;
    if constexpr (N == 2) {
        next.diagnostics.sample_min = adv.sample_min;
        next.diagnostics.sample_max = adv.sample_max;
    }
    return next;
}

template <int N>
std::vector<NSState<N>> run_impl(const NSState<N>& init, double t_end, const NSParams& p) {
    if (!(t_end >= init.time)) throw ConfigError("T", "end time precedes the initial state");
    check_params(p);
    std::vector<NSState<N>> out{init};
    const double eps = 1e-12 * std::max(1.0, t_end);
    while (out.back().time < t_end - eps) {
        NSParams pk = p;
        pk.dtau = std::min(p.dtau, t_end - out.back().time);
        out.push_back(step_impl(out.back(), pk));
    }
    return out;
}

template <int N, class Field>
NSState<N> finish_initial(GridField<N> w, const NSParams& p, const std::function<Vec<N>(const Vec<N>&)>& exact_u) {
    NSState<N> s;
    if (w.kind() == DomainKind::Torus || !exact_u)
        s.velocity = velocity_from_vorticity(w, p, kRecoveryStreamBit | (std::uint64_t{1} << 61));
    else
        s.velocity = sample_vector<N>(w, exact_u);
    s.vorticity = std::move(w);
    s.diagnostics = diagnose_impl(s);
    return s;
}

}  // namespace

NSState<2> initial_state(const VortexBlobInit& init, const GridField<2>& layout, const NSParams& p) {
    if (init.blobs.empty()) throw ConfigError("init.blobs", "at least one blob is required");
    double total = 0.0, scale = 0.0;
    for (std::size_t i = 0; i < init.blobs.size(); ++i) {
        if (!(init.blobs[i].radius > 0.0))
            throw ConfigError("init.blobs[" + std::to_string(i) + "].radius", "blob radius must be positive");
        total += init.blobs[i].circulation;
        scale += std::abs(init.blobs[i].circulation);
    }
    const Domain<2> dom = layout.domain();
    if (dom.periodic() && std::abs(total) > 1e-9 * std::max(scale, 1.0))
        throw ConfigError("init.blobs", "total circulation must vanish on a torus");
    const auto w = sample_scalar(layout, catalog::blob_vorticity(init.blobs, dom));
    const auto u = catalog::blob_velocity(init.blobs);
    return finish_initial<2, ScalarField<2>>(w, p, [u](const Vec2& x) { return u.value(0.0, x); });
}

NSState<2> initial_state(const ScalarField<2>& vorticity, const GridField<2>& layout, const NSParams& p) {
    return finish_initial<2, ScalarField<2>>(sample_scalar(layout, vorticity), p, {});
}

NSState<3> initial_state(const VectorField<3>& vorticity, const GridField<3>& layout, const NSParams& p) {
    return finish_initial<3, VectorField<3>>(sample_vector<3>(layout, vorticity.value), p, {});
}

NSState<2> step(const NSState<2>& state, const NSParams& p) { return step_impl(state, p); }
NSState<3> step(const NSState<3>& state, const NSParams& p) { return step_impl(state, p); }

std::vector<NSState<2>> run(const NSState<2>& init, double t_end, const NSParams& p) {
    return run_impl(init, t_end, p);
}
std::vector<NSState<3>> run(const NSState<3>& init, double t_end, const NSParams& p) {
    return run_impl(init, t_end, p);
}

NSDiagnostics diagnose(const NSState<2>& s) { return diagnose_impl(s); }
NSDiagnostics diagnose(const NSState<3>& s) { return diagnose_impl(s); }

}  // namespace stochflow

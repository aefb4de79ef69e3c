#include "stochflow/driftless.hpp"

#include <cmath>
#include <limits>

#include "stochflow/parallel.hpp"

namespace stochflow {

namespace {

Vec2 quarter_turn(const Vec2& v) { return {{-v[1], v[0]}}; }

FrameField<2> rotation_frame(std::string name, double scale, std::function<double(const Vec2&)> angle,
                             std::function<Vec2(const Vec2&)> angle_gradient) {
    FrameField<2> f;
    f.name = std::move(name);
    f.fiber_dim = 2;
    f.scale = scale;
    f.columns = [angle](const Vec2& x, std::span<Vec2> cols) {
        const double th = angle(x);
        const double c = std::cos(th), s = std::sin(th);
        cols[0] = {{c, s}};
        cols[1] = {{-s, c}};
    };
    f.angle = std::move(angle);
    f.angle_gradient = std::move(angle_gradient);
    return f;
}

template <int N>
FrameField<N> identity_frame() {
    FrameField<N> f;
    f.name = "identity";
    f.fiber_dim = N;
    f.columns = [](const Vec<N>&, std::span<Vec<N>> cols) {
        for (int c = 0; c < N; ++c) cols[c] = Vec<N>::unit(c);
    };
    return f;
}

/// ½Σᵢ(Kᵢ·∇)Kᵢ by central differences along each column.
template <int N>
Vec<N> self_advection_fd(const FrameField<N>& frame, const Vec<N>& x, double h) {
    const auto m = static_cast<std::size_t>(frame.fiber_dim);
    std::vector<Vec<N>> k(m), kp(m), km(m);
    frame.columns(x, k);
    Vec<N> sum{};
    for (std::size_t c = 0; c < m; ++c) {
        frame.columns(x + k[c] * h, kp);
        frame.columns(x - k[c] * h, km);
        sum += (kp[c] - km[c]) * (1.0 / (2.0 * h));
    }
    return sum * 0.5;
}

}  // namespace

FrameField<2> build_rotation_frame_2d(const ScalarField<2>& stream) {
    if (!stream.value) throw ConfigError("stream", "stream function has no values");
    const auto sf = with_fd_gradient(stream);
    auto value = sf.value;
    auto grad = sf.gradient;
    return rotation_frame("rotation(" + stream.name + ")", 1.0, [value](const Vec2& x) { return -2.0 * value(x); },
                          [grad](const Vec2& x) { return grad(x) * -2.0; });
}

FrameField<2> build_rotation_frame_2d(const ScalarField<2>& stream, const std::function<Vec2(const Vec2&)>& drift,
                                      const std::vector<Vec2>& probes, double tol, double h) {
    const auto sf = with_fd_gradient(stream);
    for (const auto& x : probes) {
        const Mat2 g = fd_jacobian<2>(drift, x, h);
        const Vec2 b = drift(x);
        const double scale = std::max(1.0, norm(b));
        const double div = trace(g);
        if (std::abs(div) > tol * scale)
            throw UnsupportedDriftError("drift is not divergence-free (residual " + std::to_string(div) + ")");
        const double mismatch = norm(b - perp(sf.gradient(x)));
        if (mismatch > tol * scale)
            throw UnsupportedDriftError("drift does not match the perpendicular gradient of the stream function");
    }
    return build_rotation_frame_2d(stream);
}

FrameField<2> navier_stokes_frame_2d(const VelocityField<2>& u, double t, double nu) {
    if (!(nu > 0.0)) throw ConfigError("nu", "viscosity must be positive");
    if (!u.stream) throw UnsupportedDriftError("velocity '" + u.name + "' carries no stream function");
    auto psi = u.stream;
    auto val = u.value;
    return rotation_frame(
        "navier-stokes(" + u.name + ")", std::sqrt(2.0 * nu), [psi, t, nu](const Vec2& x) { return psi(t, x) / nu; },
        [val, t, nu](const Vec2& x) {
            // ∇ψ = (−u², u¹) for u = ∇⊥ψ.
            const Vec2 v = val(t, x);
            return Vec2{{-v[1] / nu, v[0] / nu}};
        });
}

FrameField<2> scale_angle(const FrameField<2>& frame, double factor) {
    if (!frame.angle) throw UnsupportedDriftError("frame has no angle field");
    auto angle = frame.angle;
    std::function<Vec2(const Vec2&)> grad;
    if (frame.angle_gradient) {
        auto g = frame.angle_gradient;
        grad = [g, factor](const Vec2& x) { return g(x) * factor; };
    }
    return rotation_frame(frame.name + "*", frame.scale, [angle, factor](const Vec2& x) { return factor * angle(x); },
                          grad);
}

FrameField<2> identity_frame_2d() { return identity_frame<2>(); }
FrameField<3> identity_frame_3d() { return identity_frame<3>(); }

template <int N>
FrameReport verify_frame_conditions(const FrameField<N>& frame, const std::function<Vec<N>(const Vec<N>&)>& drift,
                                    const std::vector<Vec<N>>& points, const FrameCheckOptions& opt) {
    FrameReport r;
    bool analytic = false;
    if constexpr (N == 2) analytic = opt.prefer_analytic && static_cast<bool>(frame.angle_gradient);
    r.analytic_gradient = analytic;
    const double s2 = frame.scale * frame.scale;
    const auto m = static_cast<std::size_t>(frame.fiber_dim);
    std::vector<Vec<N>> k(m);
    for (const auto& x : points) {
        frame.columns(x, k);
        Mat<N> kk{};
        for (std::size_t c = 0; c < m; ++c)
            for (int i = 0; i < N; ++i)
                for (int j = 0; j < N; ++j) kk(i, j) += k[c][i] * k[c][j];
        r.isotropy_residual = std::max(r.isotropy_residual, norm_inf(kk - Mat<N>::identity()));

        Vec<N> adv;
        if constexpr (N == 2) {
            adv = analytic ? quarter_turn(frame.angle_gradient(x)) * 0.5 : self_advection_fd(frame, x, opt.fd_step);
        } else {
            adv = self_advection_fd(frame, x, opt.fd_step);
        }
        const Vec<N> b = drift(x);
        r.drift_residual = std::max(r.drift_residual, norm(adv * s2 - b));
        r.drift_scale = std::max(r.drift_scale, norm(b));
    }
    return r;
}

template FrameReport verify_frame_conditions(const FrameField<2>&, const std::function<Vec2(const Vec2&)>&,
                                             const std::vector<Vec2>&, const FrameCheckOptions&);
template FrameReport verify_frame_conditions(const FrameField<3>&, const std::function<Vec3(const Vec3&)>&,
                                             const std::vector<Vec3>&, const FrameCheckOptions&);

void TorsionSpec::validate() const {
    if (dimension < 2) throw DimensionError("torsion construction needs dimension at least 2");
    if (!drift_form) throw ConfigError("drift_form", "drift 1-form is required");
}

namespace {

template <int N>
void monomials(int order, std::vector<int>& cur, int axis, int left, std::vector<std::vector<int>>& out) {
    if (axis == N - 1) {
        cur[static_cast<std::size_t>(axis)] = left;
        out.push_back(cur);
        return;
    }
    for (int p = left; p >= 0; --p) {
        cur[static_cast<std::size_t>(axis)] = p;
        monomials<N>(order, cur, axis + 1, left - p, out);
    }
}

template <int N>
MeanEstimate moment(const PathEnsemble<N>& e, const std::vector<int>& pw) {
    std::vector<double> v;
    v.reserve(e.n_paths);
    for (std::size_t p = 0; p < e.n_paths; ++p) {
        if (!e.valid[p]) continue;
        const Vec<N> d = e.end(p) - e.start(p);
        double m = 1.0;
        for (int a = 0; a < N; ++a) m *= std::pow(d[a], pw[static_cast<std::size_t>(a)]);
        v.push_back(m);
    }
    return mean_and_stderr(v);
}

}  // namespace

template <int N>
LawComparison compare_laws(const PathEnsemble<N>& a, const PathEnsemble<N>& b, int max_order, double threshold) {
    LawComparison out;
    out.threshold = threshold;
    for (int order = 1; order <= max_order; ++order) {
        std::vector<std::vector<int>> pws;
        std::vector<int> cur(N);
        monomials<N>(order, cur, 0, order, pws);
        for (const auto& pw : pws) {
            const auto ma = moment(a, pw), mb = moment(b, pw);
            MomentZ z;
            z.powers = pw;
            z.order = order;
            z.mean_a = ma.mean;
            z.mean_b = mb.mean;
            const double se = std::hypot(ma.stderr_, mb.stderr_);
            const double diff = ma.mean - mb.mean;
            z.z = se > 0.0 ? diff / se : (diff == 0.0 ? 0.0 : std::copysign(std::numeric_limits<double>::infinity(), diff));
            out.max_abs_z = std::max(out.max_abs_z, std::abs(z.z));
            out.moments.push_back(std::move(z));
        }
    }
    return out;
}

template LawComparison compare_laws(const PathEnsemble<2>&, const PathEnsemble<2>&, int, double);
template LawComparison compare_laws(const PathEnsemble<3>&, const PathEnsemble<3>&, int, double);

}  // namespace stochflow

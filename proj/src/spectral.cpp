#include "stochflow/spectral.hpp"

#include <complex>
#include <mutex>
#include <numbers>
#include <vector>

#include <fftw3.h>

namespace stochflow::spectral {

namespace {

using cplx = std::complex<double>;

std::mutex& planner_mutex() {
    static std::mutex m;
    return m;
}

template <int N>
void require_torus(const GridField<N>& g, const char* op) {
    if (g.kind() != DomainKind::Torus)
        throw UnsupportedDomainError(std::string(op) + " needs a periodic domain");
}

/// One complex FFT plan pair for a given grid shape.
template <int N>
class Transform {
public:
    explicit Transform(const GridField<N>& g) : grid_(g), n_(g.node_count()), buf_(n_) {
        std::array<int, N> dims;
        for (int a = 0; a < N; ++a) dims[a] = static_cast<int>(g.shape()[a]);
        auto* data = reinterpret_cast<fftw_complex*>(buf_.data());
        std::lock_guard lock(planner_mutex());
        fwd_ = fftw_plan_dft(N, dims.data(), data, data, FFTW_FORWARD, FFTW_ESTIMATE);
        bwd_ = fftw_plan_dft(N, dims.data(), data, data, FFTW_BACKWARD, FFTW_ESTIMATE);
    }
    ~Transform() {
        std::lock_guard lock(planner_mutex());
        fftw_destroy_plan(fwd_);
        fftw_destroy_plan(bwd_);
    }
    Transform(const Transform&) = delete;
    Transform& operator=(const Transform&) = delete;

    std::vector<cplx> forward(const GridField<N>& f, int comp) {
        for (std::size_t i = 0; i < n_; ++i) buf_[i] = f.at(i, comp);
        fftw_execute(fwd_);
        return buf_;
    }

    /// Real part of the inverse transform, normalized.
    void backward(const std::vector<cplx>& spec, GridField<N>& out, int comp) {
        buf_ = spec;
        fftw_execute(bwd_);
        const double inv = 1.0 / static_cast<double>(n_);
        for (std::size_t i = 0; i < n_; ++i) out.at(i, comp) = buf_[i].real() * inv;
    }

    /// Wavevector of mode `flat`: full (for |k|²) and derivative (Nyquist
    /// component zeroed so odd derivatives stay real).
    void wavevector(std::size_t flat, Vec<N>& full, Vec<N>& deriv) const {
        const auto idx = grid_.unflatten(flat);
        for (int a = 0; a < N; ++a) {
            const long n = static_cast<long>(grid_.shape()[a]);
            long m = static_cast<long>(idx[a]);
            if (m > n / 2) m -= n;
            const double length = grid_.spacing()[a] * static_cast<double>(n);
            const double k = 2.0 * std::numbers::pi * static_cast<double>(m) / length;
            full[a] = k;
            deriv[a] = (n % 2 == 0 && m == n / 2) ? 0.0 : k;
        }
    }

    std::size_t size() const { return n_; }

private:
    const GridField<N>& grid_;
    std::size_t n_;
    std::vector<cplx> buf_;
    fftw_plan fwd_{};
    fftw_plan bwd_{};
};

template <int N>
GridField<N> like(const GridField<N>& g, int comps) {
    return GridField<N>::torus(g.domain(), g.shape(), comps);
}

template <int N>
GridField<N> project_impl(const GridField<N>& v) {
    require_torus(v, "project_div_free");
    if (v.components() != N) throw DimensionError("project_div_free needs an N-component field");
    Transform<N> tr(v);
    std::array<std::vector<cplx>, N> hat;
    for (int c = 0; c < N; ++c) hat[c] = tr.forward(v, c);
    for (std::size_t i = 0; i < tr.size(); ++i) {
        Vec<N> kf, kd;
        tr.wavevector(i, kf, kd);
        const double k2 = dot(kd, kd);
        if (k2 == 0.0) continue;
        cplx kdotu = 0.0;
        for (int c = 0; c < N; ++c) kdotu += kd[c] * hat[c][i];
        for (int c = 0; c < N; ++c) hat[c][i] -= kd[c] * kdotu / k2;
    }
    GridField<N> out = like(v, N);
    for (int c = 0; c < N; ++c) tr.backward(hat[c], out, c);
    return out;
}

}  // namespace

GridField<2> project_div_free(const GridField<2>& v) { return project_impl(v); }
GridField<3> project_div_free(const GridField<3>& v) { return project_impl(v); }

GridField<2> biot_savart(const GridField<2>& w) {
    require_torus(w, "biot_savart");
    Transform<2> tr(w);
    const auto what = tr.forward(w, 0);
    std::vector<cplx> ux(tr.size()), uy(tr.size());
    const cplx I(0.0, 1.0);
    for (std::size_t i = 0; i < tr.size(); ++i) {
        Vec2 kf, kd;
        tr.wavevector(i, kf, kd);
        const double k2 = dot(kf, kf);
        if (k2 == 0.0) continue;
        const cplx psi = what[i] / k2;
        ux[i] = I * kd[1] * psi;
        uy[i] = -I * kd[0] * psi;
    }
    GridField<2> out = like(w, 2);
    tr.backward(ux, out, 0);
    tr.backward(uy, out, 1);
    return out;
}

GridField<3> biot_savart(const GridField<3>& w) {
    require_torus(w, "biot_savart");
    if (w.components() != 3) throw DimensionError("3D biot_savart needs a 3-component vorticity");
    Transform<3> tr(w);
    std::array<std::vector<cplx>, 3> what, uhat;
    for (int c = 0; c < 3; ++c) {
        what[c] = tr.forward(w, c);
        uhat[c].assign(tr.size(), 0.0);
    }
    const cplx I(0.0, 1.0);
    for (std::size_t i = 0; i < tr.size(); ++i) {
        Vec3 kf, kd;
        tr.wavevector(i, kf, kd);
        const double k2 = dot(kf, kf);
        if (k2 == 0.0) continue;
        const cplx a0 = what[0][i] / k2, a1 = what[1][i] / k2, a2 = what[2][i] / k2;
        uhat[0][i] = I * (kd[1] * a2 - kd[2] * a1);
        uhat[1][i] = I * (kd[2] * a0 - kd[0] * a2);
        uhat[2][i] = I * (kd[0] * a1 - kd[1] * a0);
    }
    GridField<3> out = like(w, 3);
    for (int c = 0; c < 3; ++c) tr.backward(uhat[c], out, c);
    return out;
}

GridField<2> curl(const GridField<2>& u) {
    require_torus(u, "curl");
    Transform<2> tr(u);
    const auto ux = tr.forward(u, 0);
    const auto uy = tr.forward(u, 1);
    std::vector<cplx> w(tr.size());
    const cplx I(0.0, 1.0);
    for (std::size_t i = 0; i < tr.size(); ++i) {
        Vec2 kf, kd;
        tr.wavevector(i, kf, kd);
        w[i] = I * (kd[0] * uy[i] - kd[1] * ux[i]);
    }
    GridField<2> out = like(u, 1);
    tr.backward(w, out, 0);
    return out;
}

GridField<3> curl(const GridField<3>& u) {
    require_torus(u, "curl");
    Transform<3> tr(u);
    std::array<std::vector<cplx>, 3> uh, wh;
    for (int c = 0; c < 3; ++c) {
        uh[c] = tr.forward(u, c);
        wh[c].assign(tr.size(), 0.0);
    }
    const cplx I(0.0, 1.0);
    for (std::size_t i = 0; i < tr.size(); ++i) {
        Vec3 kf, kd;
        tr.wavevector(i, kf, kd);
        wh[0][i] = I * (kd[1] * uh[2][i] - kd[2] * uh[1][i]);
        wh[1][i] = I * (kd[2] * uh[0][i] - kd[0] * uh[2][i]);
        wh[2][i] = I * (kd[0] * uh[1][i] - kd[1] * uh[0][i]);
    }
    GridField<3> out = like(u, 3);
    for (int c = 0; c < 3; ++c) tr.backward(wh[c], out, c);
    return out;
}

template <int N>
GridField<N> divergence(const GridField<N>& u) {
    require_torus(u, "divergence");
    Transform<N> tr(u);
    std::vector<cplx> d(tr.size(), 0.0);
    const cplx I(0.0, 1.0);
    for (int c = 0; c < N; ++c) {
        const auto uh = tr.forward(u, c);
        for (std::size_t i = 0; i < tr.size(); ++i) {
            Vec<N> kf, kd;
            tr.wavevector(i, kf, kd);
            d[i] += I * kd[c] * uh[i];
        }
    }
    GridField<N> out = like(u, 1);
    tr.backward(d, out, 0);
    return out;
}

template <int N>
GridField<N> heat(const GridField<N>& f, double nu, double t) {
    require_torus(f, "heat");
    Transform<N> tr(f);
    GridField<N> out = like(f, f.components());
    for (int c = 0; c < f.components(); ++c) {
        auto h = tr.forward(f, c);
        for (std::size_t i = 0; i < tr.size(); ++i) {
            Vec<N> kf, kd;
            tr.wavevector(i, kf, kd);
            h[i] *= std::exp(-nu * t * dot(kf, kf));
        }
        tr.backward(h, out, c);
    }
    return out;
}

template <int N>
std::vector<double> interpolate(const GridField<N>& f, int comp, const std::vector<Vec<N>>& points) {
    require_torus(f, "interpolate");
    Transform<N> tr(f);
    const auto hat = tr.forward(f, comp);
    std::vector<Vec<N>> kd(tr.size());
    for (std::size_t i = 0; i < tr.size(); ++i) {
        Vec<N> kf;
        tr.wavevector(i, kf, kd[i]);
    }
    std::vector<double> out(points.size());
    const double inv = 1.0 / static_cast<double>(tr.size());
    for (std::size_t p = 0; p < points.size(); ++p) {
        double s = 0.0;
        for (std::size_t i = 0; i < tr.size(); ++i) {
            bool nyquist = false;
            const auto idx = f.unflatten(i);
            for (int a = 0; a < N; ++a)
                if (f.shape()[a] % 2 == 0 && idx[a] == f.shape()[a] / 2) nyquist = true;
            if (nyquist) continue;
            const double phase = dot(kd[i], points[p] - f.origin());
            s += hat[i].real() * std::cos(phase) - hat[i].imag() * std::sin(phase);
        }
        out[p] = s * inv;
    }
    return out;
}

template std::vector<double> interpolate(const GridField<2>&, int, const std::vector<Vec2>&);
template std::vector<double> interpolate(const GridField<3>&, int, const std::vector<Vec3>&);
template GridField<2> divergence(const GridField<2>&);
template GridField<3> divergence(const GridField<3>&);
template GridField<2> heat(const GridField<2>&, double, double);
template GridField<3> heat(const GridField<3>&, double, double);

}  // namespace stochflow::spectral

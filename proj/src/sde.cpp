#include "stochflow/sde.hpp"

#include <cmath>
#include <sstream>

#include "stochflow/parallel.hpp"

namespace stochflow {

TimeGrid TimeGrid::uniform(double t0, double t1, std::size_t n_steps) {
    if (!(t1 > t0) || n_steps == 0) throw Error("TimeGrid: need t1 > t0 and at least one step");
    return {t0, t1, (t1 - t0) / static_cast<double>(n_steps), n_steps};
}

TimeGrid TimeGrid::with_max_step(double t0, double t1, double max_dt) {
    if (!(max_dt > 0.0)) throw Error("TimeGrid: max step must be positive");
    const auto n = static_cast<std::size_t>(std::ceil((t1 - t0) / max_dt - 1e-12));
    return uniform(t0, t1, std::max<std::size_t>(1, n));
}

void enforce_invalid_policy(std::size_t n_invalid, std::size_t n_paths, double max_fraction) {
    if (n_paths == 0) return;
    const double frac = static_cast<double>(n_invalid) / static_cast<double>(n_paths);
    if (frac > max_fraction) {
        std::ostringstream os;
        os << n_invalid << " of " << n_paths << " paths were non-finite or overflowed (limit "
           << max_fraction * 100.0 << "%)";
        throw NumericalError(os.str());
    }
}

namespace {

template <int N>
PathEnsemble<N> make_ensemble(const TimeGrid& grid, std::size_t n_paths, const SimulationOptions& opt) {
    PathEnsemble<N> e;
    e.grid = grid;
    e.source = opt.source;
    e.n_paths = n_paths;
    e.stored = opt.storage == PathStorage::Full ? grid.n_steps + 1 : 2;
    e.positions.resize(n_paths * e.stored);
    e.valid.assign(n_paths, 1);
    return e;
}

template <int N>
void count_invalid(PathEnsemble<N>& e, double max_fraction) {
    std::size_t bad = 0;
    for (auto v : e.valid) bad += v ? 0 : 1;
    e.n_invalid = bad;
    enforce_invalid_policy(bad, e.n_paths, max_fraction);
}

}  // namespace

template <int N>
PathEnsemble<N> simulate_ito(const ItoSDESpec<N>& spec, std::span<const Vec<N>> starts, const TimeGrid& grid,
                             std::size_t n_paths, const SimulationOptions& opt) {
    if (starts.size() != 1 && starts.size() != n_paths)
        throw Error("simulate_ito: need one start point or one per path");
    if (spec.sigma < 0.0) throw Error("simulate_ito: noise amplitude must be non-negative");
    auto e = make_ensemble<N>(grid, n_paths, opt);
    parallel_for(n_paths, [&](std::size_t p) {
        const PathStream stream = path_stream(opt, p);
        PhiloxStream rng(stream.source);
        Vec<N> x = starts.size() == 1 ? starts[0] : starts[p];
        Vec<N>* slot = &e.positions[p * e.stored];
        slot[0] = x;
        for (std::size_t k = 0; k < grid.n_steps; ++k) {
            const Vec<N> dw = wiener_increment<N>(rng, grid.dt, opt.increment_substeps, stream.sign);
            x = x + spec.drift(grid.time(k), x) * grid.dt + dw * spec.sigma;
            if (!finite(x)) {
                e.valid[p] = 0;
                break;
            }
            if (opt.storage == PathStorage::Full) slot[k + 1] = x;
        }
        if (opt.storage == PathStorage::Endpoints) slot[1] = x;
    });
    count_invalid(e, opt.max_invalid_fraction);
    return e;
}

template <int N>
PathEnsemble<N> simulate_jacobian(PathEnsemble<N> e, const std::function<Mat<N>(double, const Vec<N>&)>& grad_drift,
                                  const SimulationOptions& opt) {
    if (!e.full()) throw Error("simulate_jacobian: ensemble must store full paths");
    e.jacobians.assign(e.positions.size(), Mat<N>::identity());
    const TimeGrid& grid = e.grid;
    parallel_for(e.n_paths, [&](std::size_t p) {
        if (!e.valid[p]) return;
        const Vec<N>* x = &e.positions[p * e.stored];
        Mat<N>* jac = &e.jacobians[p * e.stored];
        for (std::size_t k = 0; k < grid.n_steps; ++k) {
            const Mat<N> a = grad_drift(grid.time(k) + 0.5 * grid.dt, (x[k] + x[k + 1]) * 0.5);
            jac[k + 1] = jacobian_step(jac[k], a, grid.dt);
            if (!jacobian_ok(jac[k + 1], opt.jacobian_overflow)) {
                e.valid[p] = 0;
                break;
            }
        }
    });
    count_invalid(e, opt.max_invalid_fraction);
    return e;
}

template <int N>
PathEnsemble<N> simulate_stratonovich(const FrameField<N>& frame, const Vec<N>& start, const TimeGrid& grid,
                                      std::size_t n_paths, const SimulationOptions& opt) {
    const int m = frame.fiber_dim;
    if (m < N) throw Error("simulate_stratonovich: frame fiber dimension must be at least the space dimension");
    auto e = make_ensemble<N>(grid, n_paths, opt);
    parallel_for(n_paths, [&](std::size_t p) {
        const PathStream stream = path_stream(opt, p);
        PhiloxStream rng(stream.source);
        std::vector<double> dw(static_cast<std::size_t>(m));
        std::vector<Vec<N>> k0(static_cast<std::size_t>(m)), k1(static_cast<std::size_t>(m));
        Vec<N> x = start;
        Vec<N>* slot = &e.positions[p * e.stored];
        slot[0] = x;
        for (std::size_t k = 0; k < grid.n_steps; ++k) {
            wiener_increment(rng, grid.dt, opt.increment_substeps, stream.sign, dw);
            frame.columns(x, k0);
            Vec<N> incr0{};
            for (int c = 0; c < m; ++c) incr0 += k0[c] * dw[c];
            const Vec<N> pred = x + incr0 * frame.scale;
            frame.columns(pred, k1);
            Vec<N> incr1{};
            for (int c = 0; c < m; ++c) incr1 += k1[c] * dw[c];
            x = x + (incr0 + incr1) * (0.5 * frame.scale);
            if (!finite(x)) {
                e.valid[p] = 0;
                break;
            }
            if (opt.storage == PathStorage::Full) slot[k + 1] = x;
        }
        if (opt.storage == PathStorage::Endpoints) slot[1] = x;
    });
    count_invalid(e, opt.max_invalid_fraction);
    return e;
}

template PathEnsemble<2> simulate_ito(const ItoSDESpec<2>&, std::span<const Vec2>, const TimeGrid&, std::size_t,
                                      const SimulationOptions&);
template PathEnsemble<3> simulate_ito(const ItoSDESpec<3>&, std::span<const Vec3>, const TimeGrid&, std::size_t,
                                      const SimulationOptions&);
template PathEnsemble<2> simulate_jacobian(PathEnsemble<2>, const std::function<Mat2(double, const Vec2&)>&,
                                           const SimulationOptions&);
template PathEnsemble<3> simulate_jacobian(PathEnsemble<3>, const std::function<Mat3(double, const Vec3&)>&,
                                           const SimulationOptions&);
template PathEnsemble<2> simulate_stratonovich(const FrameField<2>&, const Vec2&, const TimeGrid&, std::size_t,
                                               const SimulationOptions&);
template PathEnsemble<3> simulate_stratonovich(const FrameField<3>&, const Vec3&, const TimeGrid&, std::size_t,
                                               const SimulationOptions&);

}  // namespace stochflow

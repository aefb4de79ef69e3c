#include "stochflow/dynamo.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "stochflow/parallel.hpp"
#include "stochflow/rng.hpp"

namespace stochflow {

namespace {

template <int N, class Initial>
void check(const DynamoQuery<N, Initial>& q) {
    if (!(q.nu_m > 0.0)) throw ConfigError("nu_m", "magnetic diffusivity must be positive");
    if (!(q.horizon >= 0.0)) throw ConfigError("T", "horizon must be non-negative");
    if constexpr (N == 3) {
        if (q.initial.gradient) {
            for (const auto& x : q.probes) {
                const Mat3 g = q.initial.gradient(x);
                const double scale = std::max(1.0, norm_inf(g));
                if (std::abs(trace(g)) > 1e-6 * scale)
                    throw ConfigError("initial", "initial magnetic field must be divergence-free");
            }
        }
    }
}

/// Per-probe estimate and standard error, flattened to components.
struct ProbeSet {
    std::vector<std::vector<double>> est;
    std::vector<std::vector<double>> err;
};

ProbeSet probe_values(const DynamoQuery2& q) {
    const auto r = transport_magnetic(q);
    ProbeSet s;
    for (const auto& e : r) {
        s.est.push_back({e.estimate});
        s.err.push_back({e.stderr_});
    }
    return s;
}

ProbeSet probe_values(const DynamoQuery3& q) {
    const auto r = transport_magnetic(q);
    ProbeSet s;
    for (const auto& e : r) {
        s.est.push_back({e.estimate[0], e.estimate[1], e.estimate[2]});
        s.err.push_back({e.stderr_[0], e.stderr_[1], e.stderr_[2]});
    }
    return s;
}

/// Mean over probes of |B|² minus the MC variance of |B̂|².
double energy(const ProbeSet& s, const std::vector<std::vector<double>>& values) {
    std::vector<double> e(values.size());
    for (std::size_t j = 0; j < values.size(); ++j) {
        double v = 0.0;
        for (std::size_t c = 0; c < values[j].size(); ++c) v += values[j][c] * values[j][c] - s.err[j][c] * s.err[j][c];
        e[j] = v;
    }
    return e.empty() ? 0.0 : pairwise_sum(e) / static_cast<double>(e.size());
}

double slope(const std::vector<double>& t, const std::vector<double>& y) {
    const double n = static_cast<double>(t.size());
    double mt = 0.0, my = 0.0;
    for (std::size_t i = 0; i < t.size(); ++i) {
        mt += t[i];
        my += y[i];
    }
    mt /= n;
    my /= n;
    double sxy = 0.0, sxx = 0.0;
    for (std::size_t i = 0; i < t.size(); ++i) {
        sxy += (t[i] - mt) * (y[i] - my);
        sxx += (t[i] - mt) * (t[i] - mt);
    }
    return sxy / sxx;
}

double quantile(std::vector<double> v, double p) {
    std::sort(v.begin(), v.end());
    const double pos = p * static_cast<double>(v.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const auto hi = std::min(lo + 1, v.size() - 1);
    const double f = pos - static_cast<double>(lo);
    return v[lo] * (1.0 - f) + v[hi] * f;
}

template <class Query>
GrowthRate growth_impl(const Query& q, double t1, double t2, const GrowthOptions& opt) {
    if (!(t1 > 0.0) || !(t2 > t1)) throw ConfigError("window", "need 0 < T1 < T2");
    if (opt.n_times < 2) throw ConfigError("n_times", "need at least two horizons");
    if (q.probes.empty()) throw ConfigError("probes", "at least one probe is required");

    std::vector<double> times(opt.n_times);
    std::vector<ProbeSet> sets;
    for (std::size_t k = 0; k < opt.n_times; ++k) {
        times[k] = t1 + (t2 - t1) * static_cast<double>(k) / static_cast<double>(opt.n_times - 1);
        Query qk = q;
        qk.horizon = times[k];
        sets.push_back(probe_values(qk));
    }

    // Parametric resampling: each probe estimate redrawn from its own
    // normal MC error.
    PhiloxStream rng({opt.resample_seed, 0});
    std::vector<std::vector<double>> energy_draws(opt.n_times);
    std::vector<double> rates;
    rates.reserve(opt.n_resamples);
    for (std::size_t r = 0; r < opt.n_resamples; ++r) {
        std::vector<double> loge(opt.n_times);
        bool ok = true;
        for (std::size_t k = 0; k < opt.n_times; ++k) {
            auto vals = sets[k].est;
            for (std::size_t j = 0; j < vals.size(); ++j)
                for (std::size_t c = 0; c < vals[j].size(); ++c) vals[j][c] += sets[k].err[j][c] * rng.normal();
            const double e = energy(sets[k], vals);
            energy_draws[k].push_back(e);
            if (e > 0.0)
                loge[k] = std::log(e);
            else
                ok = false;
        }
        if (ok) rates.push_back(0.5 * slope(times, loge));
    }

    GrowthRate out;
    std::vector<double> loge(opt.n_times);
    for (std::size_t k = 0; k < opt.n_times; ++k) {
        GrowthSample s;
        s.time = times[k];
        s.energy = energy(sets[k], sets[k].est);
        const auto me = mean_and_stderr(energy_draws[k]);
        s.energy_stderr = me.stderr_ * std::sqrt(static_cast<double>(me.count));
        out.samples.push_back(s);
        if (!(s.energy > 2.0 * s.energy_stderr) || !(s.energy > 0.0)) {
            std::ostringstream msg;
            msg << "field energy at t=" << s.time << " is " << s.energy << " +- " << s.energy_stderr
                << ", consistent with zero";
            throw IndeterminateRateError(msg.str());
        }
        loge[k] = std::log(s.energy);
    }
    out.rate = 0.5 * slope(times, loge);
    if (rates.empty()) {
        out.ci_low = out.ci_high = out.rate;
    } else {
        out.ci_low = std::min(out.rate, quantile(rates, 0.025));
        out.ci_high = std::max(out.rate, quantile(rates, 0.975));
    }
    return out;
}

}  // namespace

std::vector<ScalarEstimate> transport_magnetic(const DynamoQuery2& q) {
    check(q);
    TransportQuery2 t;
    t.tau = q.horizon;
    t.targets = q.probes;
    t.nu = q.nu_m;
    t.velocity = q.velocity;
    t.initial = q.initial;
    t.mc = q.mc;
    return solve_vorticity_2d(t);
}

std::vector<VectorEstimate3> transport_magnetic(const DynamoQuery3& q) {
    check(q);
    TransportQuery3 t;
    t.tau = q.horizon;
    t.targets = q.probes;
    t.nu = q.nu_m;
    t.velocity = q.velocity;
    t.initial = q.initial;
    t.mc = q.mc;
    return solve_vorticity_3d(t);
}

GrowthRate growth_rate(const DynamoQuery2& q, double t1, double t2, const GrowthOptions& opt) {
    return growth_impl(q, t1, t2, opt);
}

GrowthRate growth_rate(const DynamoQuery3& q, double t1, double t2, const GrowthOptions& opt) {
    return growth_impl(q, t1, t2, opt);
}

}  // namespace stochflow

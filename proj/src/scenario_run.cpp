#include "stochflow/scenario.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <numbers>
#include <sstream>

#include "stochflow/driftless.hpp"
#include "stochflow/dynamo.hpp"
#include "stochflow/errors.hpp"
#include "stochflow/grid_field.hpp"
#include "stochflow/ns.hpp"
#include "stochflow/parallel.hpp"
#include "stochflow/recovery.hpp"
#include "stochflow/transport.hpp"

namespace stochflow::scenario {
namespace {

namespace fs = std::filesystem;

// Shortest representation that reads back to the same double.
std::string num(double v) {
    char buf[32];
    const auto r = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, r.ptr);
}

template <int N>
Vec<N> vec(const Json& j) {
    Vec<N> v{};
    for (int i = 0; i < N; ++i) v[i] = j.at(static_cast<std::size_t>(i)).get<double>();
    return v;
}

template <int N>
Mat<N> mat(const Json& j) {
    Mat<N> m{};
    for (int i = 0; i < N; ++i)
        for (int k = 0; k < N; ++k) m(i, k) = j.at(static_cast<std::size_t>(i)).at(static_cast<std::size_t>(k)).get<double>();
    return m;
}

template <int N>
Domain<N> domain_of(const Json& cfg) {
    if (!cfg.contains("domain") || cfg["domain"]["kind"] == "free") return Domain<N>::free_space();
    return Domain<N>::torus(cfg["domain"]["period"].get<double>());
}

template <int N>
GridField<N> read_grid(const Json& spec, const std::string& field) {
    const std::string path = spec["file"].get<std::string>();
    std::ifstream in(path);
    if (!in) throw ConfigError(field + ".file", "cannot open grid file: " + path);
    try {
        return GridField<N>::read(in);
    } catch (const Error& e) {
        throw ConfigError(field + ".file", e.what());
    }
}

std::vector<VortexBlob> blobs_of(const Json& spec) {
    std::vector<VortexBlob> out;
    for (const auto& b : spec["blobs"])
        out.push_back({vec<2>(b["center"]), b["radius"].get<double>(), b["circulation"].get<double>()});
    return out;
}

template <int N>
VelocityField<N> make_velocity(const Json& s, const std::string& field) {
    const std::string type = s["type"];
    if (type == "zero") return catalog::zero_velocity<N>();
    if (type == "uniform") return catalog::uniform_velocity<N>(vec<N>(s["value"]));
    if (type == "constant_strain") return catalog::constant_strain<N>(mat<N>(s["matrix"]));
    if (type == "grid") return velocity_from_grid(read_grid<N>(s, field));
    if constexpr (N == 2) {
        if (type == "taylor_green") return catalog::taylor_green_velocity(s["nu"].get<double>());
        if (type == "lamb_oseen")
            return catalog::lamb_oseen_velocity(s["circulation"].get<double>(), s["nu"].get<double>(),
                                                s["t0"].get<double>(), vec<2>(s["center"]));
        if (type == "blobs") return catalog::blob_velocity(blobs_of(s));
    } else {
        if (type == "abc") return catalog::abc_flow(s["a"].get<double>(), s["b"].get<double>(), s["c"].get<double>());
    }
    throw ConfigError(field + ".type", "unsupported velocity type '" + type + "'");
}

ScalarField<2> make_scalar(const Json& s, const std::string& field, const Domain<2>& domain) {
    const std::string type = s["type"];
    if (type == "gaussian")
        return catalog::gaussian_scalar<2>(s["amplitude"].get<double>(), s["sigma"].get<double>(), vec<2>(s["center"]));
    if (type == "constant") return catalog::constant_scalar<2>(s["value"].get<double>());
    if (type == "linear") return catalog::linear_scalar<2>(vec<2>(s["gradient"]), s["offset"].get<double>());
    if (type == "lamb_oseen")
        return catalog::lamb_oseen_vorticity(s["circulation"].get<double>(), s["nu"].get<double>(), s["t"].get<double>(),
                                             vec<2>(s["center"]));
    if (type == "taylor_green") return catalog::taylor_green_vorticity(s["nu"].get<double>(), s["t"].get<double>());
    if (type == "blobs") return catalog::blob_vorticity(blobs_of(s), domain);
    if (type == "grid") return scalar_from_grid(read_grid<2>(s, field));
    throw ConfigError(field + ".type", "unsupported scalar type '" + type + "'");
}

VectorField<3> make_vector(const Json& s, const std::string& field) {
    const std::string type = s["type"];
    if (type == "constant") return catalog::constant_vector<3>(vec<3>(s["value"]));
    if (type == "fourier_mode")
        return catalog::fourier_mode(vec<3>(s["k"]), vec<3>(s["direction"]), s["phase"].get<double>());
    if (type == "gaussian_tube")
        return catalog::gaussian_tube_z(s["circulation"].get<double>(), s["core"].get<double>(), vec<2>(s["center"]));
    if (type == "grid") return vector_from_grid(read_grid<3>(s, field));
    throw ConfigError(field + ".type", "unsupported vector type '" + type + "'");
}

template <int N>
auto make_initial(const Json& s, const std::string& field, const Domain<N>& domain) {
    if constexpr (N == 2) return make_scalar(s, field, domain);
    else return make_vector(s, field);
}

// Probe points; lattices are row-major with the last axis fastest.
template <int N>
std::vector<Vec<N>> probe_points(const Json& p) {
    std::vector<Vec<N>> out;
    if (p.contains("points")) {
        for (const auto& x : p["points"]) out.push_back(vec<N>(x));
        return out;
    }
    const auto& l = p["lattice"];
    const Vec<N> lo = vec<N>(l["lo"]), hi = vec<N>(l["hi"]);
    std::array<std::size_t, N> shape{};
    std::size_t total = 1;
    for (int a = 0; a < N; ++a) total *= (shape[a] = l["shape"][static_cast<std::size_t>(a)].get<std::size_t>());
    for (std::size_t flat = 0; flat < total; ++flat) {
        std::size_t rest = flat;
        Vec<N> x{};
        for (int a = N - 1; a >= 0; --a) {
            const std::size_t i = rest % shape[a];
            rest /= shape[a];
            x[a] = shape[a] == 1 ? lo[a] : lo[a] + (hi[a] - lo[a]) * static_cast<double>(i) / static_cast<double>(shape[a] - 1);
        }
        out.push_back(x);
    }
    return out;
}

McParams mc_params(const Json& m) {
    McParams p;
    p.n_paths = m["n_paths"].get<std::size_t>();
    p.seed = m["seed"].get<std::uint64_t>();
    p.antithetic = m["antithetic"].get<bool>();
    p.max_dt = m["max_dt"].get<double>();
    p.max_invalid_fraction = m["max_invalid_fraction"].get<double>();
    return p;
}

// Output directory bookkeeping: artifact list and format switches.
class Artifacts {
public:
    Artifacts(fs::path dir, const Json& output) : dir_(std::move(dir)) {
        for (const auto& f : output["formats"]) {
            if (f == "csv") csv_ = true;
            if (f == "ppm") ppm_ = true;
        }
        fs::create_directories(dir_);
    }
    bool csv() const { return csv_; }
    bool ppm() const { return ppm_; }
    const fs::path& dir() const { return dir_; }

    void write(const std::string& name, const std::string& text) {
        std::ofstream out(dir_ / name, std::ios::binary);
        if (!out) throw Error("cannot write " + (dir_ / name).string());
        out << text;
        files_.push_back(name);
    }
    const std::vector<std::string>& files() const { return files_; }

private:
    fs::path dir_;
    bool csv_ = false;
    bool ppm_ = false;
    std::vector<std::string> files_;
};

// Diverging blue-white-red image, symmetric about zero; y points up.
std::string ppm_image(const std::vector<double>& values, std::size_t nx, std::size_t ny) {
    double scale = 0.0;
    for (double v : values)
        if (std::isfinite(v)) scale = std::max(scale, std::abs(v));
    if (scale == 0.0) scale = 1.0;
    std::string img = "P6\n" + std::to_string(nx) + " " + std::to_string(ny) + "\n255\n";
    for (std::size_t row = 0; row < ny; ++row) {
        const std::size_t j = ny - 1 - row;
        for (std::size_t i = 0; i < nx; ++i) {
            const double v = values[i * ny + j];
            const double t = std::isfinite(v) ? std::clamp(v / scale, -1.0, 1.0) : 0.0;
            const auto fade = static_cast<unsigned char>(std::lround(255.0 * (1.0 - std::abs(t))));
            if (t >= 0) img += {static_cast<char>(255), static_cast<char>(fade), static_cast<char>(fade)};
            else img += {static_cast<char>(fade), static_cast<char>(fade), static_cast<char>(255)};
        }
    }
    return img;
}

// Adds one image per listed component when the probes form a 2D lattice.
void lattice_images(Artifacts& art, const Json& probes, const std::vector<std::string>& names,
                    const std::vector<std::vector<double>>& columns, const std::string& prefix) {
    if (!art.ppm() || !probes.contains("lattice") || probes["lattice"]["shape"].size() != 2) return;
    const auto nx = probes["lattice"]["shape"][0].get<std::size_t>();
    const auto ny = probes["lattice"]["shape"][1].get<std::size_t>();
    for (std::size_t c = 0; c < names.size(); ++c) art.write(prefix + names[c] + ".ppm", ppm_image(columns[c], nx, ny));
}

template <int N>
std::string coord_header() {
    return N == 2 ? "x,y" : "x,y,z";
}

template <int N>
std::string coords(const Vec<N>& x) {
    std::string s = num(x[0]);
    for (int i = 1; i < N; ++i) s += "," + num(x[i]);
    return s;
}

const char* axis_suffix(int i) { return i == 0 ? "x" : i == 1 ? "y" : "z"; }

std::string excluded_warning(const std::string& what, std::size_t n) {
    return what + ": " + std::to_string(n) + " paths excluded as non-finite";
}

// ---------------------------------------------------------------------------

template <int N>
void run_transport(const Json& cfg, Artifacts& art, std::vector<std::string>& warnings) {
    TransportQuery<N, std::conditional_t<N == 2, ScalarField<2>, VectorField<3>>> q;
    q.tau = cfg["time"]["tau"].get<double>();
    q.nu = cfg["physics"]["nu"].get<double>();
    q.velocity = make_velocity<N>(cfg["velocity"], "velocity");
    q.initial = make_initial<N>(cfg["initial"], "initial", Domain<N>::free_space());
    q.targets = probe_points<N>(cfg["probes"]);
    q.mc = mc_params(cfg["mc"]);

    std::ostringstream csv;
    csv << coord_header<N>() << ",component,estimate,stderr,n_paths,n_excluded\n";
    std::size_t excluded = 0;
    std::vector<std::string> names;
    std::vector<std::vector<double>> columns;
    if constexpr (N == 2) {
        const auto est = solve_vorticity_2d(q);
        names = {"w"};
        columns.resize(1);
        for (std::size_t k = 0; k < est.size(); ++k) {
            const auto& e = est[k];
            csv << coords<2>(q.targets[k]) << ",w," << num(e.estimate) << "," << num(e.stderr_) << ","
                << e.n_paths << "," << e.n_excluded << "\n";
            columns[0].push_back(e.estimate);
            excluded += e.n_excluded;
        }
    } else {
        const auto est = solve_vorticity_3d(q);
        names = {"wx", "wy", "wz"};
        columns.resize(3);
        for (std::size_t k = 0; k < est.size(); ++k) {
            const auto& e = est[k];
            for (int c = 0; c < 3; ++c) {
                csv << coords<3>(q.targets[k]) << ",w" << axis_suffix(c) << "," << num(e.estimate[c]) << ","
                    << num(e.stderr_[c]) << "," << e.n_paths << "," << e.n_excluded << "\n";
                columns[static_cast<std::size_t>(c)].push_back(e.estimate[c]);
            }
            excluded += e.n_excluded;
        }
    }
    if (excluded) warnings.push_back(excluded_warning("transport", excluded));
    if (art.csv()) art.write("results.csv", csv.str());
    lattice_images(art, cfg["probes"], names, columns, "");
}

template <int N>
void run_recover(const Json& cfg, Artifacts& art, std::vector<std::string>& warnings) {
    RecoveryQuery<N, std::conditional_t<N == 2, ScalarField<2>, VectorField<3>>> q;
    q.domain = domain_of<N>(cfg);
    q.vorticity = make_initial<N>(cfg["vorticity"], "vorticity", q.domain);
    q.targets = probe_points<N>(cfg["probes"]);
    const auto& r = cfg["recovery"];
    q.n_samples = r["n_samples"].get<std::size_t>();
    q.centered = r["centered"].get<bool>();
    q.tail_tolerance = r["tail_tolerance"].get<double>();
    q.seed = cfg["mc"]["seed"].get<std::uint64_t>();
    if (r["quadrature"].is_object())
        q.quadrature = SQuadrature{r["quadrature"]["s_min"].get<double>(), r["quadrature"]["s_max"].get<double>(),
                                   r["quadrature"]["n_nodes"].get<std::size_t>()};

    std::ostringstream csv;
    csv << coord_header<N>() << ",component,estimate,stderr,n_paths,n_excluded,method\n";
    std::vector<std::string> names;
    std::vector<std::vector<double>> columns;
    auto emit = [&](const std::string& method, std::size_t k, const Vec<N>& u, const Vec<N>& se, std::size_t n) {
        for (int c = 0; c < N; ++c) {
            csv << coords<N>(q.targets[k]) << ",u" << axis_suffix(c) << "," << num(u[c]) << "," << num(se[c]) << ","
                << n << ",0," << method << "\n";
            columns[names.size() - static_cast<std::size_t>(N) + static_cast<std::size_t>(c)].push_back(u[c]);
        }
    };
    auto open_columns = [&](const std::string& method) {
        for (int c = 0; c < N; ++c) names.push_back(method + "_u" + axis_suffix(c));
        columns.resize(names.size());
    };
    for (const auto& m : r["methods"]) {
        const std::string method = m;
        open_columns(method);
        if (method == "direct") {
            BiotSavartOptions opt;
            opt.tolerance = r["direct_tolerance"].get<double>();
            const auto u = biot_savart_direct(q.vorticity, q.targets, q.domain, opt);
            for (std::size_t k = 0; k < u.size(); ++k) emit(method, k, u[k], Vec<N>{}, 0);
            continue;
        }
        std::vector<RecoveryEstimate<N>> est;
        if (method == "gradform") est = recover_velocity_gradform(q);
        else if constexpr (N == 2) est = recover_velocity_2d(q);
        else est = recover_velocity_3d(q);
        std::size_t tails = 0;
        for (std::size_t k = 0; k < est.size(); ++k) {
            emit(method, k, est[k].velocity, est[k].stderr_, est[k].n_samples);
            tails += est[k].tail_warning ? 1 : 0;
        }
        if (tails)
            warnings.push_back("recover/" + method + ": tail bound above tolerance at " + std::to_string(tails) +
                               " probes");
    }
    if (art.csv()) art.write("results.csv", csv.str());
    lattice_images(art, cfg["probes"], names, columns, "");
}

template <int N>
void run_ns(const Json& cfg, Artifacts& art, std::vector<std::string>& warnings) {
    const Domain<N> domain = domain_of<N>(cfg);
    const auto& g = cfg["ns"]["grid"];
    std::array<std::size_t, N> shape{};
    for (int a = 0; a < N; ++a) shape[a] = g["shape"][static_cast<std::size_t>(a)].get<std::size_t>();
    const GridField<N> layout = domain.periodic() ? GridField<N>::torus(domain, shape, 1)
                                                  : GridField<N>::box(vec<N>(g["lo"]), vec<N>(g["hi"]), shape, 1);
    NSParams p;
    p.nu = cfg["physics"]["nu"].get<double>();
    p.dtau = cfg["time"]["dtau"].get<double>();
    p.mc = mc_params(cfg["mc"]);
    const auto& n = cfg["ns"];
    p.picard_max = n["picard_max"].get<int>();
    p.picard_tol = n["picard_tol"].get<double>();
    const std::string method = n["velocity_method"];
    p.velocity_method = method == "spectral"      ? VelocityMethod::Spectral
                        : method == "brownian"    ? VelocityMethod::Brownian
                        : method == "biot_savart" ? VelocityMethod::BiotSavart
                                                  : VelocityMethod::Auto;
    p.recovery_samples = n["recovery_samples"].get<std::size_t>();
    p.recovery_nodes = n["recovery_nodes"].get<std::size_t>();
    p.direct_tolerance = n["direct_tolerance"].get<double>();

    NSState<N> init;
    if constexpr (N == 2) {
        if (cfg["initial"]["type"] == "blobs") init = initial_state(VortexBlobInit{blobs_of(cfg["initial"])}, layout, p);
        else init = initial_state(make_scalar(cfg["initial"], "initial", domain), layout, p);
    } else {
        init = initial_state(make_vector(cfg["initial"], "initial"), layout, p);
    }
    const auto states = run(init, cfg["time"]["T"].get<double>(), p);

    std::ostringstream diag;
    diag << "step,time,kinetic_energy,enstrophy,max_vorticity,circulation,circulation_stderr,mc_stderr_max,"
            "mc_stderr_mean,curl_residual,divergence_max,vorticity_min,vorticity_max,sample_min,sample_max,"
            "picard_iterations,n_excluded\n";
    std::size_t excluded = 0;
    for (const auto& s : states) {
        const auto& d = s.diagnostics;
        diag << s.step_index << "," << num(d.time) << "," << num(d.kinetic_energy) << "," << num(d.enstrophy) << ","
             << num(d.max_vorticity) << "," << num(d.circulation) << "," << num(d.circulation_stderr) << ","
             << num(d.mc_stderr_max) << "," << num(d.mc_stderr_mean) << "," << num(d.curl_residual) << ","
             << num(d.divergence_max) << "," << num(d.vorticity_min) << "," << num(d.vorticity_max) << ","
             << num(d.sample_min) << "," << num(d.sample_max) << "," << d.picard_iterations << "," << d.n_excluded
             << "\n";
        excluded += d.n_excluded;
    }
    if (excluded) warnings.push_back(excluded_warning("ns", excluded));

    const auto& last = states.back();
    if (art.csv()) {
        art.write("diagnostics.csv", diag.str());
        std::ostringstream fields;
        fields << coord_header<N>() << ",component,value\n";
        const int wc = last.vorticity.components();
        for (std::size_t k = 0; k < last.vorticity.node_count(); ++k) {
            const std::string x = coords<N>(last.vorticity.node(k));
            for (int c = 0; c < wc; ++c)
                fields << x << "," << (wc == 1 ? std::string("w") : std::string("w") + axis_suffix(c)) << ","
                       << num(last.vorticity.at(k, c)) << "\n";
            for (int c = 0; c < N; ++c)
                fields << x << ",u" << axis_suffix(c) << "," << num(last.velocity.at(k, c)) << "\n";
        }
        art.write("fields.csv", fields.str());
    }
    if (cfg["output"]["grids"].get<bool>()) {
        std::ostringstream w, u;
        last.vorticity.write(w);
        last.velocity.write(u);
        art.write("vorticity.grid", w.str());
        art.write("velocity.grid", u.str());
    }
    if constexpr (N == 2) {
        if (art.ppm()) {
            std::vector<double> w(last.vorticity.values().begin(), last.vorticity.values().end());
            art.write("vorticity.ppm", ppm_image(w, shape[0], shape[1]));
        }
    }
}

template <int N>
void run_dynamo(const Json& cfg, Artifacts& art, std::vector<std::string>& warnings) {
    DynamoQuery<N, std::conditional_t<N == 2, ScalarField<2>, VectorField<3>>> q;
    q.nu_m = cfg["physics"]["nu_m"].get<double>();
    q.velocity = make_velocity<N>(cfg["velocity"], "velocity");
    q.initial = make_initial<N>(cfg["initial"], "initial", Domain<N>::free_space());
    q.horizon = cfg["time"]["horizon"].get<double>();
    q.probes = probe_points<N>(cfg["probes"]);
    q.mc = mc_params(cfg["mc"]);

    std::ostringstream csv;
    csv << coord_header<N>() << ",component,estimate,stderr,n_paths,n_excluded\n";
    std::size_t excluded = 0;
    std::vector<std::string> names;
    std::vector<std::vector<double>> columns;
    const auto est = transport_magnetic(q);
    if constexpr (N == 2) {
        names = {"b"};
        columns.resize(1);
        for (std::size_t k = 0; k < est.size(); ++k) {
            csv << coords<2>(q.probes[k]) << ",b," << num(est[k].estimate) << "," << num(est[k].stderr_) << ","
                << est[k].n_paths << "," << est[k].n_excluded << "\n";
            columns[0].push_back(est[k].estimate);
            excluded += est[k].n_excluded;
        }
    } else {
        names = {"bx", "by", "bz"};
        columns.resize(3);
        for (std::size_t k = 0; k < est.size(); ++k) {
            for (int c = 0; c < 3; ++c) {
                csv << coords<3>(q.probes[k]) << ",b" << axis_suffix(c) << "," << num(est[k].estimate[c]) << ","
                    << num(est[k].stderr_[c]) << "," << est[k].n_paths << "," << est[k].n_excluded << "\n";
                columns[static_cast<std::size_t>(c)].push_back(est[k].estimate[c]);
            }
            excluded += est[k].n_excluded;
        }
    }
    if (excluded) warnings.push_back(excluded_warning("dynamo", excluded));
    if (art.csv()) art.write("results.csv", csv.str());
    lattice_images(art, cfg["probes"], names, columns, "");

    if (cfg["time"].contains("window")) {
        GrowthOptions opt;
        opt.n_times = cfg["time"]["n_times"].get<std::size_t>();
        const auto w = cfg["time"]["window"];
        const auto rate = growth_rate(q, w[0].get<double>(), w[1].get<double>(), opt);
        if (art.csv()) {
            std::ostringstream g;
            g << "time,energy,energy_stderr\n";
            for (const auto& s : rate.samples) g << num(s.time) << "," << num(s.energy) << "," << num(s.energy_stderr) << "\n";
            art.write("growth.csv", g.str());
            art.write("rate.csv", "rate,ci_low,ci_high\n" + num(rate.rate) + "," + num(rate.ci_low) + "," +
                                      num(rate.ci_high) + "\n");
        }
    }
}

void run_driftless(const Json& cfg, Artifacts& art, std::vector<std::string>& warnings) {
    const double nu = cfg["physics"]["nu"].get<double>();
    const auto u = make_velocity<2>(cfg["velocity"], "velocity");
    const auto& d = cfg["driftless"];
    const double t0 = d["frame_time"].get<double>();
    const FrameField<2> frame = navier_stokes_frame_2d(u, t0, nu);
    // Lagrangian drift of the backward flow, frozen at frame_time.
    const std::function<Vec2(const Vec2&)> drift = [&u, t0](const Vec2& x) { return u.value(t0, x) * -1.0; };

    const auto points = probe_points<2>(cfg["probes"]);
    const FrameReport fr = verify_frame_conditions<2>(frame, drift, points);
    const double tol = d["tolerance"].get<double>();

    const auto& m = cfg["mc"];
    const auto grid = TimeGrid::uniform(0.0, cfg["time"]["tau"].get<double>(), cfg["time"]["n_steps"].get<std::size_t>());
    const auto n_paths = m["n_paths"].get<std::size_t>();
    const auto seed = m["seed"].get<std::uint64_t>();
    SimulationOptions opt;
    opt.antithetic = m["antithetic"].get<bool>();
    opt.storage = PathStorage::Endpoints;
    opt.max_invalid_fraction = m["max_invalid_fraction"].get<double>();
    // The two ensembles use disjoint stream ranges of the same seed.
    opt.source = RandomSource{seed, 0};
    const Vec2 x0 = vec<2>(d["start"]);
    const std::vector<Vec2> starts{x0};
    const ItoSDESpec<2> ito{[drift](double, const Vec2& x) { return drift(x); }, std::sqrt(2.0 * nu)};
    const auto drifted = simulate_ito<2>(ito, starts, grid, n_paths, opt);
    opt.source = RandomSource{seed, std::uint64_t{1} << 40};
    const auto driftless = simulate_stratonovich(frame, x0, grid, n_paths, opt);
    const auto cmp = compare_laws(driftless, drifted, d["max_order"].get<int>(), d["threshold"].get<double>());

    Json report;
    report["frame"] = {{"name", frame.name},
                       {"isotropy_residual", fr.isotropy_residual},
                       {"drift_residual", fr.drift_residual},
                       {"drift_scale", fr.drift_scale},
                       {"analytic_gradient", fr.analytic_gradient},
                       {"tolerance", tol},
                       {"pass", fr.pass(tol)}};
    Json moments = Json::array();
    std::ostringstream csv;
    csv << "powers,order,mean_driftless,mean_ito,z\n";
    for (const auto& mz : cmp.moments) {
        std::string pw;
        for (int e : mz.powers) pw += (pw.empty() ? "" : " ") + std::to_string(e);
        csv << pw << "," << mz.order << "," << num(mz.mean_a) << "," << num(mz.mean_b) << "," << num(mz.z) << "\n";
        moments.push_back({{"powers", mz.powers}, {"order", mz.order}, {"mean_driftless", mz.mean_a},
                           {"mean_ito", mz.mean_b}, {"z", mz.z}});
    }
    report["law"] = {{"n_paths", n_paths},
                     {"excluded_driftless", driftless.n_invalid},
                     {"excluded_ito", drifted.n_invalid},
                     {"max_abs_z", cmp.max_abs_z},
                     {"threshold", cmp.threshold},
                     {"pass", cmp.pass()},
                     {"moments", moments}};
    art.write("report.json", report.dump(2) + "\n");
    if (art.csv()) art.write("results.csv", csv.str());

    if (!fr.pass(tol)) warnings.push_back("driftless: frame residuals exceed tolerance");
    if (!cmp.pass()) warnings.push_back("driftless: law comparison failed (max |z| = " + num(cmp.max_abs_z) + ")");
    if (driftless.n_invalid + drifted.n_invalid)
        warnings.push_back(excluded_warning("driftless", driftless.n_invalid + drifted.n_invalid));
}

std::string error_kind(const std::exception& e) {
    if (dynamic_cast<const ConfigError*>(&e)) return "config";
    if (dynamic_cast<const NumericalError*>(&e)) return "numerical";
    if (dynamic_cast<const ResolutionError*>(&e)) return "resolution";
    if (dynamic_cast<const StepSizeError*>(&e)) return "step_size";
    if (dynamic_cast<const IndeterminateRateError*>(&e)) return "indeterminate_rate";
    if (dynamic_cast<const UnsupportedDriftError*>(&e)) return "unsupported_drift";
    if (dynamic_cast<const UnsupportedDomainError*>(&e)) return "unsupported_domain";
    if (dynamic_cast<const DimensionError*>(&e)) return "dimension";
    return "internal";
}

void report_error(const Json& doc, const std::string& dir, std::ostream& err) {
    err << doc.dump() << "\n";
    if (dir.empty()) return;
    std::error_code ec;
    fs::create_directories(dir, ec);
    std::ofstream out(fs::path(dir) / "error.json");
    if (out) out << doc.dump(2) << "\n";
}

// Output directory named by a config that failed validation, if readable.
std::string raw_output_dir(const std::string& path) {
    std::ifstream in(path);
    const auto raw = nlohmann::json::parse(in, nullptr, false);
    if (raw.is_discarded() || !raw.is_object() || !raw.contains("output") || !raw["output"].is_object()) return "";
    const auto it = raw["output"].find("directory");
    return it != raw["output"].end() && it->is_string() ? it->get<std::string>() : "";
}

}  // namespace

RunResult run(const Json& cfg, const RunOptions& opt) {
    set_worker_count(opt.workers);
    Json effective = cfg;
    if (!opt.output_dir.empty()) effective["output"]["directory"] = opt.output_dir;
    RunResult result;
    result.output_dir = effective["output"]["directory"].get<std::string>();
    Artifacts art(result.output_dir, effective["output"]);
    fs::remove(art.dir() / "error.json");

    const std::string mode = cfg["mode"];
    const int dim = mode == "transport3d" ? 3 : cfg.contains("dimension") ? cfg["dimension"].get<int>() : 2;
    if (mode == "transport2d") run_transport<2>(cfg, art, result.warnings);
    else if (mode == "transport3d") run_transport<3>(cfg, art, result.warnings);
    else if (mode == "recover") dim == 2 ? run_recover<2>(cfg, art, result.warnings) : run_recover<3>(cfg, art, result.warnings);
    else if (mode == "ns") dim == 2 ? run_ns<2>(cfg, art, result.warnings) : run_ns<3>(cfg, art, result.warnings);
    else if (mode == "dynamo") dim == 2 ? run_dynamo<2>(cfg, art, result.warnings) : run_dynamo<3>(cfg, art, result.warnings);
    else run_driftless(cfg, art, result.warnings);

    Json meta;
    meta["schema_version"] = kSchemaVersion;
    meta["code_version"] = kCodeVersion;
    meta["rng_algorithm"] = kRngAlgorithm;
    meta["config"] = effective;
    meta["artifacts"] = art.files();
    meta["warnings"] = result.warnings;
    std::ofstream(art.dir() / "metadata.json") << meta.dump(2) << "\n";
    return result;
}

Json error_json(int exit_code, const std::string& kind, const std::string& field, const std::string& message) {
    Json doc;
    doc["status"] = "error";
    doc["exit_code"] = exit_code;
    doc["kind"] = kind;
    doc["field"] = field.empty() ? Json(nullptr) : Json(field);
    doc["message"] = message;
    return doc;
}

int run_file(const std::string& path, const RunOptions& opt, std::ostream& err) {
    std::string dir = opt.output_dir;
    try {
        const Json cfg = load(path);
        if (dir.empty()) dir = cfg["output"]["directory"].get<std::string>();
        const RunResult r = run(cfg, opt);
        if (opt.strict && !r.warnings.empty()) {
            std::string msg;
            for (const auto& w : r.warnings) msg += (msg.empty() ? "" : "; ") + w;
            report_error(error_json(kExitStrict, "warning", "", msg), dir, err);
            return kExitStrict;
        }
        for (const auto& w : r.warnings) err << "warning: " << w << "\n";
        return kExitOk;
    } catch (const ConfigError& e) {
        if (dir.empty()) dir = raw_output_dir(path);
        report_error(error_json(kExitConfig, "config", e.field(), e.what()), dir, err);
        return kExitConfig;
    } catch (const std::exception& e) {
        report_error(error_json(kExitNumerical, error_kind(e), "", e.what()), dir, err);
        return kExitNumerical;
    }
}

int validate_file(const std::string& path, std::ostream& out, std::ostream& err) {
    try {
        out << load(path).dump(2) << "\n";
        return kExitOk;
    } catch (const ConfigError& e) {
        report_error(error_json(kExitConfig, "config", e.field(), e.what()), "", err);
        return kExitConfig;
    }
}

}  // namespace stochflow::scenario

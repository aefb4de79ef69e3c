#include "stochflow/scenario.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <numbers>
#include <optional>
#include <set>

#include "stochflow/errors.hpp"

namespace stochflow::scenario {
namespace {

using nlohmann::json;
namespace fs = std::filesystem;

constexpr double kInf = std::numeric_limits<double>::infinity();

struct Range {
    double lo = -kInf;
    bool lo_open = false;
    double hi = kInf;
    bool hi_open = false;

    bool contains(double v) const {
        if (lo_open ? !(v > lo) : !(v >= lo)) return false;
        return hi_open ? v < hi : v <= hi;
    }
    std::string describe() const {
        std::string s;
        if (lo > -kInf) s += (lo_open ? "> " : ">= ") + json(lo).dump();
        if (hi < kInf) s += std::string(s.empty() ? "" : " and ") + (hi_open ? "< " : "<= ") + json(hi).dump();
        return s;
    }
};

const Range kAny{};
const Range kPositive{0.0, true};
const Range kNonNegative{0.0, false};

std::string join(const std::string& path, const std::string& key) { return path.empty() ? key : path + "." + key; }

std::string indexed(const std::string& path, std::size_t i) { return path + "[" + std::to_string(i) + "]"; }

double as_number(const json& v, const std::string& path, const Range& r) {
    if (!v.is_number()) throw ConfigError(path, "expected a number");
    const double x = v.get<double>();
    if (!std::isfinite(x)) throw ConfigError(path, "must be finite");
    if (!r.contains(x)) throw ConfigError(path, "must be " + r.describe() + ", got " + v.dump());
    return x;
}

std::uint64_t as_count(const json& v, const std::string& path, std::uint64_t lo, std::uint64_t hi) {
    if (!v.is_number_integer() || (v.is_number_integer() && !v.is_number_unsigned() && v.get<std::int64_t>() < 0))
        throw ConfigError(path, "expected a non-negative integer");
    const auto n = v.get<std::uint64_t>();
    if (n < lo || n > hi)
        throw ConfigError(path, "must be in [" + std::to_string(lo) + ", " + std::to_string(hi) + "], got " + v.dump());
    return n;
}

std::vector<double> as_vector(const json& v, const std::string& path, std::size_t n, const Range& r = kAny) {
    if (!v.is_array() || v.size() != n) throw ConfigError(path, "expected an array of " + std::to_string(n) + " numbers");
    std::vector<double> out;
    for (std::size_t i = 0; i < n; ++i) out.push_back(as_number(v[i], indexed(path, i), r));
    return out;
}

// Reads one JSON object. Every getter records the key, writes the resolved
// value to the output in a fixed order and finish() rejects leftovers.
class Reader {
public:
    Reader(const json& in, std::string path) : in_(in), path_(std::move(path)) {
        if (!in_.is_object()) throw ConfigError(path_.empty() ? "$" : path_, "expected an object");
    }

    std::string at(const std::string& key) const { return join(path_, key); }
    bool has(const std::string& key) const { return in_.contains(key); }

    const json* find(const std::string& key) {
        used_.insert(key);
        const auto it = in_.find(key);
        return it == in_.end() ? nullptr : &*it;
    }
    const json& require(const std::string& key) {
        if (const json* p = find(key)) return *p;
        throw ConfigError(at(key), "required key is missing");
    }

    double number(const std::string& key, std::optional<double> def, const Range& r = kAny) {
        const json* p = find(key);
        if (!p && !def) throw ConfigError(at(key), "required key is missing");
        const double v = p ? as_number(*p, at(key), r) : *def;
        out_[key] = v;
        return v;
    }

    std::uint64_t count(const std::string& key, std::optional<std::uint64_t> def, std::uint64_t lo = 0,
                        std::uint64_t hi = std::numeric_limits<std::uint64_t>::max()) {
        const json* p = find(key);
        if (!p && !def) throw ConfigError(at(key), "required key is missing");
        const auto v = p ? as_count(*p, at(key), lo, hi) : *def;
        out_[key] = v;
        return v;
    }

    bool boolean(const std::string& key, bool def) {
        const json* p = find(key);
        if (p && !p->is_boolean()) throw ConfigError(at(key), "expected true or false");
        const bool v = p ? p->get<bool>() : def;
        out_[key] = v;
        return v;
    }

    std::string choice(const std::string& key, std::optional<std::string> def, const std::vector<std::string>& allowed) {
        const json* p = find(key);
        if (!p && !def) throw ConfigError(at(key), "required key is missing");
        if (p && !p->is_string()) throw ConfigError(at(key), "expected a string");
        const std::string v = p ? p->get<std::string>() : *def;
        if (std::find(allowed.begin(), allowed.end(), v) == allowed.end()) {
            std::string list;
            for (const auto& a : allowed) list += (list.empty() ? "" : ", ") + a;
            throw ConfigError(at(key), "'" + v + "' is not one of: " + list);
        }
        out_[key] = v;
        return v;
    }

    std::vector<double> vector(const std::string& key, std::size_t n, std::optional<std::vector<double>> def,
                               const Range& r = kAny) {
        const json* p = find(key);
        if (!p && !def) throw ConfigError(at(key), "required key is missing");
        auto v = p ? as_vector(*p, at(key), n, r) : *def;
        out_[key] = v;
        return v;
    }

    void set(const std::string& key, Json value) { out_[key] = std::move(value); }

    Json finish() {
        for (auto it = in_.begin(); it != in_.end(); ++it)
            if (!used_.count(it.key())) throw ConfigError(at(it.key()), "unknown key");
        return std::move(out_);
    }

private:
    const json& in_;
    std::string path_;
    std::set<std::string> used_;
    Json out_ = Json::object();
};

enum class Role { Velocity, Scalar, Vector };

struct Context {
    std::string mode;
    int dim = 2;
    std::string base_dir;
};

std::vector<double> zeros(int n) { return std::vector<double>(static_cast<std::size_t>(n), 0.0); }

void grid_file(Reader& r, const Context& ctx) {
    const json& v = r.require("file");
    if (!v.is_string() || v.get<std::string>().empty()) throw ConfigError(r.at("file"), "expected a file path");
    fs::path p = v.get<std::string>();
    if (p.is_relative() && !ctx.base_dir.empty()) p = fs::path(ctx.base_dir) / p;
    std::error_code ec;
    if (!fs::is_regular_file(p, ec)) throw ConfigError(r.at("file"), "file not found: " + p.string());
    r.set("file", fs::absolute(p).lexically_normal().string());
}

Json blob_list(Reader& r, bool allow_points) {
    const json& v = r.require("blobs");
    const std::string path = r.at("blobs");
    if (!v.is_array() || v.empty()) throw ConfigError(path, "expected a non-empty array of blobs");
    Json out = Json::array();
    for (std::size_t i = 0; i < v.size(); ++i) {
        Reader b(v[i], indexed(path, i));
        b.vector("center", 2, std::nullopt);
        b.number("radius", std::nullopt, allow_points ? kNonNegative : kPositive);
        b.number("circulation", std::nullopt);
        out.push_back(b.finish());
    }
    return out;
}

Json field_spec(const json& in, const std::string& path, Role role, const Context& ctx) {
    Reader r(in, path);
    const int d = ctx.dim;
    std::vector<std::string> types;
    if (role == Role::Velocity) {
        types = {"zero", "uniform", "constant_strain", "grid"};
        if (d == 2) types.insert(types.end(), {"taylor_green", "lamb_oseen", "blobs"});
        else types.push_back("abc");
    } else if (role == Role::Scalar) {
        types = {"gaussian", "constant", "linear", "lamb_oseen", "taylor_green", "blobs", "grid"};
    } else {
        types = {"constant", "fourier_mode", "gaussian_tube", "grid"};
    }
    const std::string type = r.choice("type", std::nullopt, types);

    if (type == "grid") {
        grid_file(r, ctx);
    } else if (role == Role::Velocity) {
        if (type == "uniform") {
            r.vector("value", static_cast<std::size_t>(d), std::nullopt);
        } else if (type == "constant_strain") {
            const json& m = r.require("matrix");
            if (!m.is_array() || m.size() != static_cast<std::size_t>(d))
                throw ConfigError(r.at("matrix"), "expected " + std::to_string(d) + " rows");
            Json rows = Json::array();
            for (std::size_t i = 0; i < m.size(); ++i)
                rows.push_back(as_vector(m[i], indexed(r.at("matrix"), i), static_cast<std::size_t>(d)));
            r.set("matrix", rows);
        } else if (type == "taylor_green") {
            r.number("nu", std::nullopt, kNonNegative);
        } else if (type == "lamb_oseen") {
            r.number("circulation", 1.0);
            r.number("nu", std::nullopt, kPositive);
            r.number("t0", std::nullopt, kPositive);
            r.vector("center", 2, zeros(2));
        } else if (type == "blobs") {
            r.set("blobs", blob_list(r, true));
        } else if (type == "abc") {
            r.number("a", 1.0);
            r.number("b", 1.0);
            r.number("c", 1.0);
        }
    } else if (role == Role::Scalar) {
        if (type == "gaussian") {
            r.number("amplitude", 1.0);
            r.number("sigma", std::nullopt, kPositive);
            r.vector("center", static_cast<std::size_t>(d), zeros(d));
        } else if (type == "constant") {
            r.number("value", std::nullopt);
        } else if (type == "linear") {
            r.vector("gradient", static_cast<std::size_t>(d), std::nullopt);
            r.number("offset", 0.0);
        } else if (type == "lamb_oseen") {
            r.number("circulation", 1.0);
            r.number("nu", std::nullopt, kPositive);
            r.number("t", std::nullopt, kPositive);
            r.vector("center", 2, zeros(2));
        } else if (type == "taylor_green") {
            r.number("nu", 0.0, kNonNegative);
            r.number("t", 0.0, kNonNegative);
        } else if (type == "blobs") {
            r.set("blobs", blob_list(r, false));
        }
    } else {
        if (type == "constant") {
            r.vector("value", 3, std::nullopt);
        } else if (type == "fourier_mode") {
            r.vector("k", 3, std::nullopt);
            r.vector("direction", 3, std::nullopt);
            r.number("phase", 0.0);
        } else if (type == "gaussian_tube") {
            r.number("circulation", 1.0);
            r.number("core", std::nullopt, kPositive);
            r.vector("center", 2, zeros(2));
        }
    }
    if (role == Role::Scalar && d != 2 && type != "gaussian" && type != "constant" && type != "linear" &&
        type != "grid")
        throw ConfigError(join(path, "type"), "'" + type + "' is a two-dimensional field");
    return r.finish();
}

Json field(Reader& parent, const std::string& key, Role role, const Context& ctx) {
    return field_spec(parent.require(key), parent.at(key), role, ctx);
}

Json probes(Reader& parent, const Context& ctx, const std::string& key = "probes") {
    Reader r(parent.require(key), parent.at(key));
    const auto d = static_cast<std::size_t>(ctx.dim);
    const bool points = r.has("points"), lattice = r.has("lattice");
    if (points == lattice) throw ConfigError(parent.at(key), "give exactly one of 'points' or 'lattice'");
    if (points) {
        const json& v = r.require("points");
        if (!v.is_array() || v.empty()) throw ConfigError(r.at("points"), "expected a non-empty array of points");
        Json out = Json::array();
        for (std::size_t i = 0; i < v.size(); ++i) out.push_back(as_vector(v[i], indexed(r.at("points"), i), d));
        r.set("points", out);
    } else {
        Reader l(r.require("lattice"), r.at("lattice"));
        const auto lo = l.vector("lo", d, std::nullopt);
        const auto hi = l.vector("hi", d, std::nullopt);
        const json& s = l.require("shape");
        if (!s.is_array() || s.size() != d) throw ConfigError(l.at("shape"), "expected " + std::to_string(d) + " counts");
        Json shape = Json::array();
        std::uint64_t total = 1;
        for (std::size_t i = 0; i < d; ++i) {
            const auto n = as_count(s[i], indexed(l.at("shape"), i), 1, 4096);
            if (n > 1 && !(hi[i] > lo[i])) throw ConfigError(l.at("hi"), "must exceed lo on every axis with shape > 1");
            shape.push_back(n);
            total *= n;
        }
        if (total > 1000000) throw ConfigError(l.at("shape"), "more than 10^6 probes");
        l.set("shape", shape);
        r.set("lattice", l.finish());
    }
    return r.finish();
}

Json domain(Reader& parent, const Context&) {
    const json* p = parent.find("domain");
    const json empty = json::object();
    Reader r(p ? *p : empty, parent.at("domain"));
    const std::string kind = r.choice("kind", std::string("free"), {"free", "torus"});
    if (kind == "torus") r.number("period", 2.0 * std::numbers::pi, kPositive);
    else if (r.has("period")) throw ConfigError(r.at("period"), "only valid on a torus");
    return r.finish();
}

Json mc(Reader& parent, bool paths) {
    const json* p = parent.find("mc");
    const json empty = json::object();
    Reader r(p ? *p : empty, parent.at("mc"));
    if (paths) {
        r.count("n_paths", 1000, 2, 1000000000);
        r.count("seed", 0);
        r.boolean("antithetic", false);
        r.number("max_dt", 0.01, kPositive);
        r.number("max_invalid_fraction", 0.01, Range{0.0, false, 1.0, false});
    } else {
        r.count("seed", 0);
    }
    return r.finish();
}

Json output(Reader& parent, const std::string& mode) {
    const json* p = parent.find("output");
    const json empty = json::object();
    Reader r(p ? *p : empty, parent.at("output"));
    const json* dir = r.find("directory");
    if (dir && (!dir->is_string() || dir->get<std::string>().empty()))
        throw ConfigError(r.at("directory"), "expected a directory path");
    r.set("directory", dir ? dir->get<std::string>() : std::string("out"));
    const json* f = r.find("formats");
    Json formats = Json::array({"csv"});
    if (f) {
        if (!f->is_array()) throw ConfigError(r.at("formats"), "expected an array of format names");
        bool csv = false, ppm = false;
        for (std::size_t i = 0; i < f->size(); ++i) {
            const json& v = (*f)[i];
            const std::string name = v.is_string() ? v.get<std::string>() : "";
            if (name == "csv") csv = true;
            else if (name == "ppm") ppm = true;
            else throw ConfigError(indexed(r.at("formats"), i), "unknown format (csv, ppm)");
        }
        formats = Json::array();
        if (csv) formats.push_back("csv");
        if (ppm) formats.push_back("ppm");
    }
    r.set("formats", formats);
    if (mode == "ns") r.boolean("grids", true);
    return r.finish();
}

Json physics(Reader& parent, const std::string& mode) {
    Reader r(parent.require("physics"), parent.at("physics"));
    if (mode == "dynamo") r.number("nu_m", std::nullopt, kPositive);
    else r.number("nu", std::nullopt, kPositive);
    return r.finish();
}

Json time_spec(Reader& parent, const std::string& mode) {
    Reader r(parent.require("time"), parent.at("time"));
    if (mode == "transport2d" || mode == "transport3d") {
        r.number("tau", std::nullopt, kNonNegative);
    } else if (mode == "ns") {
        r.number("T", std::nullopt, kNonNegative);
        r.number("dtau", std::nullopt, kPositive);
    } else if (mode == "dynamo") {
        const double h = r.number("horizon", std::nullopt, kNonNegative);
        if (const json* w = r.find("window")) {
            const auto win = as_vector(*w, r.at("window"), 2, kNonNegative);
            if (!(win[1] > win[0])) throw ConfigError(r.at("window"), "needs T1 < T2");
            r.set("window", win);
            r.count("n_times", 5, 2, 1000);
        } else if (r.has("n_times")) {
            throw ConfigError(r.at("n_times"), "only valid together with window");
        }
        (void)h;
    } else if (mode == "driftless-verify") {
        r.number("tau", std::nullopt, kPositive);
        r.count("n_steps", 200, 1, 10000000);
    }
    return r.finish();
}

Json recovery(Reader& parent, const Context& ctx) {
    const json* p = parent.find("recovery");
    const json empty = json::object();
    Reader r(p ? *p : empty, parent.at("recovery"));
    const json* m = r.find("methods");
    Json methods = Json::array({"brownian"});
    if (m) {
        if (!m->is_array() || m->empty()) throw ConfigError(r.at("methods"), "expected a non-empty array");
        std::set<std::string> seen;
        for (std::size_t i = 0; i < m->size(); ++i) {
            const json& v = (*m)[i];
            const std::string name = v.is_string() ? v.get<std::string>() : "";
            if (name != "brownian" && name != "gradform" && name != "direct")
                throw ConfigError(indexed(r.at("methods"), i), "unknown method (brownian, gradform, direct)");
            seen.insert(name);
        }
        methods = Json::array();
        for (const char* name : {"brownian", "gradform", "direct"})
            if (seen.count(name)) methods.push_back(name);
    }
    r.set("methods", methods);
    r.count("n_samples", 10000, 2, 1000000000);
    r.boolean("centered", true);
    r.number("tail_tolerance", 1e-3, Range{0.0, true, 1.0, true});
    const json* q = r.find("quadrature");
    if (!q || (q->is_string() && q->get<std::string>() == "auto")) {
        r.set("quadrature", "auto");
    } else {
        Reader s(*q, r.at("quadrature"));
        const double lo = s.number("s_min", std::nullopt, kPositive);
        s.number("s_max", std::nullopt, Range{lo, true});
        s.count("n_nodes", 40, 2, 100000);
        r.set("quadrature", s.finish());
    }
    r.number("direct_tolerance", 1e-9, kPositive);
    (void)ctx;
    return r.finish();
}

Json ns_block(Reader& parent, const Context& ctx, bool torus) {
    const json* p = parent.find("ns");
    const json empty = json::object();
    Reader r(p ? *p : empty, parent.at("ns"));
    const auto d = static_cast<std::size_t>(ctx.dim);
    {
        Reader g(r.require("grid"), r.at("grid"));
        const json& s = g.require("shape");
        if (!s.is_array() || s.size() != d) throw ConfigError(g.at("shape"), "expected " + std::to_string(d) + " counts");
        Json shape = Json::array();
        for (std::size_t i = 0; i < d; ++i) shape.push_back(as_count(s[i], indexed(g.at("shape"), i), 4, 1024));
        g.set("shape", shape);
        if (!torus) {
            const auto lo = g.vector("lo", d, std::nullopt);
            const auto hi = g.vector("hi", d, std::nullopt);
            for (std::size_t i = 0; i < d; ++i)
                if (!(hi[i] > lo[i])) throw ConfigError(g.at("hi"), "must exceed lo on every axis");
        } else if (g.has("lo") || g.has("hi")) {
            throw ConfigError(g.at(g.has("lo") ? "lo" : "hi"), "a torus grid covers one period; lo/hi are not used");
        }
        r.set("grid", g.finish());
    }
    r.count("picard_max", 1, 1, 5);
    r.number("picard_tol", 1e-3, kPositive);
    r.choice("velocity_method", std::string("auto"), {"auto", "spectral", "brownian", "biot_savart"});
    r.count("recovery_samples", 400, 2, 100000000);
    r.count("recovery_nodes", 24, 2, 10000);
    r.number("direct_tolerance", 1e-6, kPositive);
    return r.finish();
}

Json driftless_block(Reader& parent) {
    Reader r(parent.require("driftless"), parent.at("driftless"));
    r.vector("start", 2, std::nullopt);
    r.number("frame_time", 0.0, kNonNegative);
    r.count("max_order", 4, 1, 8);
    r.number("threshold", 4.0, kPositive);
    r.number("tolerance", 1e-4, kPositive);
    return r.finish();
}

}  // namespace

Json resolve(const json& raw, const std::string& base_dir) {
    Reader r(raw, "");
    const json& version = r.require("schema_version");
    if (!version.is_number_integer() || version.get<std::int64_t>() != kSchemaVersion)
        throw ConfigError("schema_version", "unsupported schema version (expected " + std::to_string(kSchemaVersion) + ")");
    r.set("schema_version", kSchemaVersion);
    Context ctx;
    ctx.base_dir = base_dir;
    ctx.mode = r.choice("mode", std::nullopt, {"transport2d", "transport3d", "recover", "ns", "dynamo", "driftless-verify"});
    const std::string& mode = ctx.mode;

    if (mode == "recover" || mode == "ns" || mode == "dynamo") {
        ctx.dim = static_cast<int>(r.count("dimension", 2, 2, 3));
    } else {
        if (r.has("dimension")) throw ConfigError("dimension", "fixed by the mode");
        ctx.dim = mode == "transport3d" ? 3 : 2;
    }
    const Role initial_role = ctx.dim == 2 ? Role::Scalar : Role::Vector;

    if (mode == "transport2d" || mode == "transport3d") {
        r.set("physics", physics(r, mode));
        r.set("velocity", field(r, "velocity", Role::Velocity, ctx));
        r.set("initial", field(r, "initial", initial_role, ctx));
        r.set("time", time_spec(r, mode));
        r.set("probes", probes(r, ctx));
        r.set("mc", mc(r, true));
    } else if (mode == "recover") {
        const Json dom = domain(r, ctx);
        r.set("domain", dom);
        r.set("vorticity", field(r, "vorticity", initial_role, ctx));
        r.set("probes", probes(r, ctx));
        r.set("recovery", recovery(r, ctx));
        r.set("mc", mc(r, false));
    } else if (mode == "ns") {
        const Json dom = domain(r, ctx);
        r.set("domain", dom);
        r.set("physics", physics(r, mode));
        r.set("initial", field(r, "initial", initial_role, ctx));
        r.set("time", time_spec(r, mode));
        r.set("ns", ns_block(r, ctx, dom["kind"] == "torus"));
        r.set("mc", mc(r, true));
    } else if (mode == "dynamo") {
        r.set("physics", physics(r, mode));
        r.set("velocity", field(r, "velocity", Role::Velocity, ctx));
        r.set("initial", field(r, "initial", initial_role, ctx));
        r.set("time", time_spec(r, mode));
        r.set("probes", probes(r, ctx));
        r.set("mc", mc(r, true));
    } else {
        r.set("physics", physics(r, mode));
        r.set("velocity", field(r, "velocity", Role::Velocity, ctx));
        r.set("time", time_spec(r, mode));
        r.set("probes", probes(r, ctx));
        r.set("driftless", driftless_block(r));
        r.set("mc", mc(r, true));
    }
    r.set("output", output(r, mode));
    return r.finish();
}

Json load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("$", "cannot open config file: " + path);
    json raw;
    try {
        raw = json::parse(in);
    } catch (const json::parse_error& e) {
        throw ConfigError("$", std::string("invalid JSON: ") + e.what());
    }
    return resolve(raw, fs::path(path).parent_path().string());
}

}  // namespace stochflow::scenario

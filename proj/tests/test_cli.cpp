#include "doctest.h"

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "oracles.hpp"
#include "stochflow/errors.hpp"
#include "stochflow/grid_field.hpp"
#include "stochflow/scenario.hpp"

using namespace stochflow;
namespace sc = stochflow::scenario;
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

const fs::path kWork = fs::path(STOCHFLOW_TEST_WORKDIR) / "cli";

fs::path fresh(const std::string& name) {
    const fs::path p = kWork / name;
    fs::remove_all(p);
    fs::create_directories(p);
    return p;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
}

void dump(const fs::path& p, const json& j) { std::ofstream(p) << j.dump(2); }

std::vector<std::vector<std::string>> read_csv(const fs::path& p) {
    std::vector<std::vector<std::string>> rows;
    std::ifstream in(p);
    std::string line;
    while (std::getline(in, line)) {
        std::vector<std::string> row;
        std::stringstream ls(line);
        std::string cell;
        while (std::getline(ls, cell, ',')) row.push_back(cell);
        rows.push_back(row);
    }
    return rows;
}

json heat_config(const fs::path& out, std::size_t n_paths) {
    return {{"schema_version", 1},
            {"mode", "transport2d"},
            {"physics", {{"nu", 0.1}}},
            {"velocity", {{"type", "zero"}}},
            {"initial", {{"type", "gaussian"}, {"sigma", 0.5}}},
            {"time", {{"tau", 1.0}}},
            {"probes", {{"lattice", {{"lo", {-1.0, -1.0}}, {"hi", {1.0, 1.0}}, {"shape", {3, 3}}}}}},
            {"mc", {{"n_paths", n_paths}, {"seed", 11}}},
            {"output", {{"directory", out.string()}, {"formats", {"csv", "ppm"}}}}};
}

// Runs the command-line binary; stderr goes to `err`.
int cli(const std::string& args, const fs::path& err) {
    const std::string cmd = std::string(STOCHFLOW_CLI) + " " + args + " 2> " + err.string() + " > /dev/null";
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

}  // namespace

TEST_CASE("transport2d scenario reproduces the heat kernel") {
    const fs::path dir = fresh("heat");
    const auto cfg = sc::resolve(heat_config(dir / "out", 20000));
    const auto r = sc::run(cfg, {});
    CHECK(r.warnings.empty());
    const auto rows = read_csv(dir / "out" / "results.csv");
    REQUIRE(rows.size() == 10);
    CHECK(rows[0] == std::vector<std::string>{"x", "y", "component", "estimate", "stderr", "n_paths", "n_excluded"});
    for (std::size_t k = 1; k < rows.size(); ++k) {
        const double x = std::stod(rows[k][0]), y = std::stod(rows[k][1]);
        const double exact = oracle::heat_gaussian(1.0, 0.5, 0.1, 1.0, x * x + y * y, 2);
        const double est = std::stod(rows[k][3]), se = std::stod(rows[k][4]);
        CHECK(std::abs(est - exact) < 4.0 * se);
        CHECK(rows[k][5] == "20000");
    }
    // Lattice probes also give a 3×3 image.
    const std::string img = slurp(dir / "out" / "w.ppm");
    CHECK(img.rfind("P6\n3 3\n255\n", 0) == 0);
    CHECK(img.size() == std::string("P6\n3 3\n255\n").size() + 27);
}

TEST_CASE("metadata echoes the resolved config and suffices to rerun") {
    const fs::path dir = fresh("meta");
    const auto cfg = sc::resolve(heat_config(dir / "a", 2000));
    sc::run(cfg, {});
    const auto meta = sc::Json::parse(slurp(dir / "a" / "metadata.json"));
    CHECK(meta["schema_version"] == sc::kSchemaVersion);
    CHECK(meta["rng_algorithm"] == "philox4x32-10");
    CHECK(meta["code_version"] == sc::kCodeVersion);
    CHECK(meta["config"] == cfg);
    CHECK(meta["artifacts"] == sc::Json::array({"results.csv", "w.ppm"}));

    sc::RunOptions opt;
    opt.output_dir = (dir / "b").string();
    sc::run(sc::resolve(meta["config"]), opt);
    CHECK(slurp(dir / "a" / "results.csv") == slurp(dir / "b" / "results.csv"));
}

TEST_CASE("resolved configs round-trip unchanged") {
    const fs::path dir = fresh("roundtrip");
    std::vector<json> raws = {heat_config(dir, 100)};
    raws.push_back({{"schema_version", 1},
                    {"mode", "ns"},
                    {"domain", {{"kind", "torus"}}},
                    {"physics", {{"nu", 0.1}}},
                    {"initial", {{"type", "taylor_green"}}},
                    {"time", {{"T", 0.5}, {"dtau", 0.05}}},
                    {"ns", {{"grid", {{"shape", {32, 32}}}}}}});
    raws.push_back({{"schema_version", 1},
                    {"mode", "recover"},
                    {"dimension", 3},
                    {"vorticity", {{"type", "gaussian_tube"}, {"core", 0.5}}},
                    {"probes", {{"points", {{1.0, 0.0, 0.0}}}}},
                    {"recovery", {{"methods", {"direct", "brownian"}}}}});
    raws.push_back({{"schema_version", 1},
                    {"mode", "dynamo"},
                    {"dimension", 3},
                    {"physics", {{"nu_m", 0.1}}},
                    {"velocity", {{"type", "abc"}}},
                    {"initial", {{"type", "fourier_mode"}, {"k", {1, 0, 0}}, {"direction", {0, 1, 0}}}},
                    {"time", {{"horizon", 1.0}, {"window", {0.5, 1.5}}}},
                    {"probes", {{"points", {{0.0, 0.0, 0.0}}}}}});
    raws.push_back({{"schema_version", 1},
                    {"mode", "driftless-verify"},
                    {"physics", {{"nu", 0.25}}},
                    {"velocity", {{"type", "taylor_green"}, {"nu", 0.25}}},
                    {"time", {{"tau", 0.5}}},
                    {"probes", {{"points", {{0.1, 0.2}}}}},
                    {"driftless", {{"start", {0.3, 0.7}}}}});
    for (const auto& raw : raws) {
        const auto once = sc::resolve(raw);
        const auto twice = sc::resolve(json::parse(once.dump()));
        CHECK(once == twice);
        CHECK(once.dump() == twice.dump());
    }
    // Defaults are written out explicitly.
    const auto ns = sc::resolve(raws[1]);
    CHECK(ns["domain"]["period"].get<double>() == doctest::Approx(2.0 * oracle::pi));
    CHECK(ns["ns"]["picard_max"] == 1);
    CHECK(ns["mc"]["n_paths"] == 1000);
    CHECK(ns["output"]["formats"] == sc::Json::array({"csv"}));
    // Method lists are put in canonical order.
    CHECK(sc::resolve(raws[2])["recovery"]["methods"] == sc::Json::array({"brownian", "direct"}));
}

TEST_CASE("schema violations name the offending key") {
    const fs::path dir = fresh("schema");
    auto field_of = [](const json& raw) -> std::string {
        try {
            sc::resolve(raw);
        } catch (const ConfigError& e) {
            return e.field();
        }
        return "";
    };
    auto base = heat_config(dir, 100);
    {
        auto c = base;
        c["physics"]["nu"] = -0.1;
        CHECK(field_of(c) == "physics.nu");
    }
    {
        auto c = base;
        c["mc"]["n_path"] = 10;
        CHECK(field_of(c) == "mc.n_path");
    }
    {
        auto c = base;
        c["colour"] = "red";
        CHECK(field_of(c) == "colour");
    }
    {
        auto c = base;
        c["schema_version"] = 2;
        CHECK(field_of(c) == "schema_version");
    }
    {
        auto c = base;
        c.erase("time");
        CHECK(field_of(c) == "time");
    }
    {
        auto c = base;
        c["initial"] = {{"type", "gaussian"}, {"sigma", 0.0}};
        CHECK(field_of(c) == "initial.sigma");
    }
    {
        auto c = base;
        c["initial"] = {{"type", "swirl"}};
        CHECK(field_of(c) == "initial.type");
    }
    {
        auto c = base;
        c["probes"] = {{"points", {{0.0, 0.0}, {1.0}}}};
        CHECK(field_of(c) == "probes.points[1]");
    }
    {
        auto c = base;
        c["mc"]["seed"] = -1;
        CHECK(field_of(c) == "mc.seed");
    }
    {
        auto c = base;
        c["velocity"] = {{"type", "grid"}, {"file", (dir / "missing.grid").string()}};
        CHECK(field_of(c) == "velocity.file");
    }
    {
        auto c = base;
        c["dimension"] = 3;
        CHECK(field_of(c) == "dimension");
    }
    {
        auto c = base;
        c["output"]["formats"] = {"csv", "png"};
        CHECK(field_of(c) == "output.formats[1]");
    }
}

TEST_CASE("grid files resolve relative to the config") {
    const fs::path dir = fresh("gridfile");
    auto g = GridField<2>::torus(Domain<2>::torus(2.0 * oracle::pi), {16, 16}, 2);
    g.fill([](const Vec2&) { return std::array<double, 2>{0.0, 0.0}; });
    std::ofstream(dir / "still.grid") << [&] {
        std::ostringstream s;
        g.write(s);
        return s.str();
    }();
    auto c = heat_config(dir / "out", 2000);
    c["velocity"] = {{"type", "grid"}, {"file", "still.grid"}};
    dump(dir / "config.json", c);
    const auto cfg = sc::load((dir / "config.json").string());
    CHECK(fs::path(cfg["velocity"]["file"].get<std::string>()).is_absolute());
    sc::run(cfg, {});

    // Same as the analytic zero velocity under the same seed.
    auto z = heat_config(dir / "zero", 2000);
    sc::run(sc::resolve(z), {});
    CHECK(slurp(dir / "out" / "results.csv") == slurp(dir / "zero" / "results.csv"));
}

TEST_CASE("negative viscosity exits 2 with a JSON error naming the field") {
    const fs::path dir = fresh("negnu");
    auto c = heat_config(dir / "out", 100);
    c["physics"]["nu"] = -1.0;
    dump(dir / "config.json", c);
    CHECK(cli("run " + (dir / "config.json").string(), dir / "err.txt") == 2);
    const auto err = json::parse(slurp(dir / "err.txt"));
    CHECK(err["exit_code"] == 2);
    CHECK(err["kind"] == "config");
    CHECK(err["field"] == "physics.nu");
    CHECK(json::parse(slurp(dir / "out" / "error.json")) == err);
    CHECK(cli("validate " + (dir / "config.json").string(), dir / "err2.txt") == 2);
}

TEST_CASE("repeat runs give byte-identical results for any worker count") {
    const fs::path dir = fresh("determinism");
    dump(dir / "config.json", heat_config(dir / "out", 5000));
    const std::string cfg = (dir / "config.json").string();
    REQUIRE(cli("run " + cfg + " --output-dir " + (dir / "a").string() + " --workers 1", dir / "e1") == 0);
    REQUIRE(cli("run " + cfg + " --output-dir " + (dir / "b").string() + " --workers 1", dir / "e2") == 0);
    REQUIRE(cli("run " + cfg + " --output-dir " + (dir / "c").string() + " --workers 3", dir / "e3") == 0);
    const std::string a = slurp(dir / "a" / "results.csv");
    CHECK(!a.empty());
    CHECK(a == slurp(dir / "b" / "results.csv"));
    CHECK(a == slurp(dir / "c" / "results.csv"));
    CHECK(slurp(dir / "a" / "w.ppm") == slurp(dir / "c" / "w.ppm"));
}

TEST_CASE("strict mode escalates warnings to exit 4") {
    const fs::path dir = fresh("strict");
    // A quadrature cut at s = 1 leaves most of the far-field tail out.
    const json c = {{"schema_version", 1},
                    {"mode", "recover"},
                    {"vorticity", {{"type", "gaussian"}, {"sigma", 0.3}}},
                    {"probes", {{"points", {{1.0, 0.0}}}}},
                    {"recovery", {{"n_samples", 200}, {"quadrature", {{"s_min", 1e-3}, {"s_max", 1.0}, {"n_nodes", 8}}}}},
                    {"output", {{"directory", (dir / "out").string()}}}};
    dump(dir / "config.json", c);
    const std::string cfg = (dir / "config.json").string();
    CHECK(cli("run " + cfg, dir / "lenient.txt") == 0);
    CHECK(slurp(dir / "lenient.txt").find("tail bound") != std::string::npos);
    CHECK(cli("run " + cfg + " --strict", dir / "strict.txt") == 4);
    const auto err = json::parse(slurp(dir / "strict.txt"));
    CHECK(err["kind"] == "warning");
    CHECK(fs::exists(dir / "out" / "results.csv"));
}

TEST_CASE("numerical failures exit 3") {
    const fs::path dir = fresh("numerical");
    // A k = 4 mode at ν_m = 1 decays far below the MC error by T1.
    const json c = {{"schema_version", 1},
                    {"mode", "dynamo"},
                    {"dimension", 3},
                    {"physics", {{"nu_m", 1.0}}},
                    {"velocity", {{"type", "zero"}}},
                    {"initial", {{"type", "fourier_mode"}, {"k", {4, 0, 0}}, {"direction", {0, 1, 0}}}},
                    {"time", {{"horizon", 0.1}, {"window", {1.0, 2.0}}, {"n_times", 3}}},
                    {"probes", {{"points", {{0.1, 0.2, 0.3}}}}},
                    {"mc", {{"n_paths", 200}}},
                    {"output", {{"directory", (dir / "out").string()}}}};
    dump(dir / "config.json", c);
    CHECK(cli("run " + (dir / "config.json").string(), dir / "err.txt") == 3);
    const auto err = json::parse(slurp(dir / "err.txt"));
    CHECK(err["kind"] == "indeterminate_rate");
    CHECK(fs::exists(dir / "out" / "error.json"));
}

TEST_CASE("every mode runs end to end") {
    const fs::path dir = fresh("modes");
    const json ns = {{"schema_version", 1},
                     {"mode", "ns"},
                     {"domain", {{"kind", "torus"}}},
                     {"physics", {{"nu", 0.1}}},
                     {"initial", {{"type", "taylor_green"}, {"nu", 0.1}}},
                     {"time", {{"T", 0.1}, {"dtau", 0.05}}},
                     {"ns", {{"grid", {{"shape", {16, 16}}}}}},
                     {"mc", {{"n_paths", 50}, {"seed", 3}}},
                     {"output", {{"directory", (dir / "ns").string()}, {"formats", {"csv", "ppm"}}}}};
    sc::run(sc::resolve(ns), {});
    const auto diag = read_csv(dir / "ns" / "diagnostics.csv");
    REQUIRE(diag.size() == 4);
    CHECK(diag[3][1] == "0.1");
    // Energy of the Taylor-Green mode falls like e^{-4νt}.
    const double e0 = std::stod(diag[1][2]), e1 = std::stod(diag[3][2]);
    CHECK(std::log(e0 / e1) / 0.1 == doctest::Approx(0.4).epsilon(0.1));
    CHECK(fs::exists(dir / "ns" / "vorticity.grid"));
    CHECK(fs::exists(dir / "ns" / "vorticity.ppm"));
    std::ifstream wg(dir / "ns" / "vorticity.grid");
    CHECK(GridField<2>::read(wg).shape() == GridField<2>::Index{16, 16});

    const json t3 = {{"schema_version", 1},
                     {"mode", "transport3d"},
                     {"physics", {{"nu", 0.01}}},
                     {"velocity", {{"type", "zero"}}},
                     {"initial", {{"type", "constant"}, {"value", {1.0, 2.0, 3.0}}}},
                     {"time", {{"tau", 0.3}}},
                     {"probes", {{"points", {{0.0, 0.0, 0.0}}}}},
                     {"mc", {{"n_paths", 10}}},
                     {"output", {{"directory", (dir / "t3").string()}}}};
    sc::run(sc::resolve(t3), {});
    const auto rows = read_csv(dir / "t3" / "results.csv");
    REQUIRE(rows.size() == 4);
    CHECK(rows[1][4] == "1");
    CHECK(rows[2][4] == "2");
    CHECK(rows[3][4] == "3");

    const json dl = {{"schema_version", 1},
                     {"mode", "driftless-verify"},
                     {"physics", {{"nu", 0.25}}},
                     {"velocity", {{"type", "taylor_green"}, {"nu", 0.25}}},
                     {"time", {{"tau", 0.5}, {"n_steps", 50}}},
                     {"probes", {{"lattice", {{"lo", {0.0, 0.0}}, {"hi", {3.0, 3.0}}, {"shape", {3, 3}}}}}},
                     {"driftless", {{"start", {0.3, 0.7}}}},
                     {"mc", {{"n_paths", 4000}, {"seed", 5}}},
                     {"output", {{"directory", (dir / "dl").string()}}}};
    const auto r = sc::run(sc::resolve(dl), {});
    const auto report = json::parse(slurp(dir / "dl" / "report.json"));
    CHECK(report["frame"]["pass"] == true);
    CHECK(report["frame"]["drift_residual"].get<double>() < 1e-10);
    CHECK(report["law"]["moments"].size() == 14);
    CHECK(report["law"]["pass"] == r.warnings.empty());
}

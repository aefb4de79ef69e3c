#pragma once

/// @file scenario.hpp
/// @brief JSON scenario files: validation, defaults and dispatch to the solvers.
///
/// A scenario is resolved once into a canonical document with every default
/// filled in. The runner reads only that document, and metadata.json echoes
/// it, so an output directory is enough to rerun the experiment. Resolving a
/// resolved document returns it unchanged.

#include <iosfwd>
#include <string>
#include <vector>

#include "json.hpp"

namespace stochflow::scenario {

using Json = nlohmann::ordered_json;

inline constexpr int kSchemaVersion = 1;
inline constexpr const char* kRngAlgorithm = "philox4x32-10";
inline constexpr const char* kCodeVersion = "0.1.0";

// Process exit codes.
inline constexpr int kExitOk = 0;
inline constexpr int kExitConfig = 2;
inline constexpr int kExitNumerical = 3;
inline constexpr int kExitStrict = 4;

/// Validates `raw` and fills defaults. Throws ConfigError naming the
/// offending key ("physics.nu", "probes.points[2]") on any violation,
/// including unknown keys and missing grid files.
/// Relative grid-file paths are taken from `base_dir` and stored absolute.
Json resolve(const nlohmann::json& raw, const std::string& base_dir = "");

/// Reads and resolves a file. Parse errors become ConfigError.
Json load(const std::string& path);

struct RunOptions {
    bool strict = false;
    unsigned workers = 0;
    std::string output_dir;  ///< overrides output.directory when non-empty
};

struct RunResult {
    std::string output_dir;
    std::vector<std::string> warnings;  ///< tail warnings, excluded paths
};

/// Runs a resolved scenario and writes its artifacts. Solver errors
/// propagate as exceptions.
RunResult run(const Json& resolved, const RunOptions& opt);

/// Error document written to stderr and error.json.
Json error_json(int exit_code, const std::string& kind, const std::string& field, const std::string& message);

/// load + run with every failure mapped to an exit code and reported as
/// JSON on `err` (and in <output_dir>/error.json when it is known).
int run_file(const std::string& path, const RunOptions& opt, std::ostream& err);

/// Exit code for validate: 0 and the resolved config on `out`, or 2.
int validate_file(const std::string& path, std::ostream& out, std::ostream& err);

}  // namespace stochflow::scenario

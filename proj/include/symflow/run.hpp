#pragma once

// Config ingestion and run orchestration: flow solve, gauge recovery,
// conjugate-heat pipeline, and artifact export (CSV trajectory, JSON report,
// JSON manifest).

#include <filesystem>
#include <string>
#include <vector>

#include "symflow/algebra.hpp"
#include "symflow/boundary.hpp"
#include "symflow/solver.hpp"

namespace symflow {

struct RunConfig {
    std::string space_name;  // catalog name or bracket-table file path
    HomogeneousSpaceData space;
    SolverConfig solver;
    InitialProfiles init;
    BCSpec bc;
    bool run_gauge = true;
    bool run_perelman = true;
    std::filesystem::path out_dir = "out";
    std::vector<std::string> formats = {"csv", "json"};
    std::string document;  // normalized config (defaults filled), echoed in the manifest
};

// Parses and fully validates a JSON config file.  Every expression is parsed,
// arities are checked against the space, and zeroth-order compatibility of
// the initial profiles with the boundary law is verified.  Throws ConfigError
// with a JSON-pointer path, or IncompatibleData with per-end residuals.
RunConfig load_config(const std::filesystem::path& path);

// Same validation applied to an in-memory JSON document (used for round-trip
// checks and by the sweep driver).
RunConfig parse_config(const std::string& json_text, const std::string& origin = "<memory>");

struct RunResult {
    int exit_code = 0;         // 0 ok or singular, 3 incompatible data, 4 numerical failure
    std::string status;        // "ok" | "singular" | "failed"
    std::filesystem::path dir; // artifact directory
    double singular_time = -1.0;  // < 0 when the flow reached t_end
};

// Executes the pipeline stages selected in the config and writes
// trajectory.csv, report.json (when the conjugate-heat stage ran) and
// manifest.json into cfg.out_dir.  The manifest is written last, atomically,
// so its presence marks a completed run.  Solver failures are captured in the
// manifest rather than thrown.
RunResult run(const RunConfig& cfg);

// Re-exports gnuplot-ready column files (plot/*.dat) from a completed run
// directory.  Throws MissingArtifacts when manifest or trajectory are absent.
void export_plotdata(const std::filesystem::path& run_dir);

}  // namespace symflow

// Run orchestration: simulate -> analyze -> report for each plan kind, run
// manifests, re-analysis of stored tag streams, and the CLI entry point.

#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "spdclab/config.hpp"
#include "spdclab/estimators.hpp"

namespace spdclab::io {

inline constexpr const char* kToolVersion = "0.1.0";

struct RunOptions {
    std::optional<std::uint64_t> seed;
    std::optional<std::int64_t> pulses;  // override every per-point budget
    std::string output_dir;              // override the plan's output dir
    bool emit_tags_csv = false;
    bool emit_tags_binary = false;
};

struct RunManifest {
    std::string config_hash;
    std::uint64_t seed = 0;
    std::vector<std::string> artifact_paths;  // relative to the run directory
    std::string tool_version;
    double wall_time_s = 0.0;
};

// Execute the configured plan and write all artifacts into the run directory.
// Deterministic given (config, seed): every output file except the manifest's
// wall_time is byte-identical across repeats and worker counts.
RunManifest run(const LoadedConfig& config, const RunOptions& options);

// Recompute the analysis chain of an existing run directory from its stored
// tag streams (or sweep CSV for the gain plan).
void analyze_dir(const std::string& run_dir);

// Human-readable summary of a run directory.
std::string report_dir(const std::string& run_dir);

// Full command-line interface; returns the process exit code
// (0 ok, 2 config error, 3 runtime/numerical error, 4 I/O error).
int run_cli(int argc, const char* const* argv);

}  // namespace spdclab::io

// Experiment configuration files: a single JSON document with
// source/channels/detectors/plan sections and unit-suffixed keys, plus the
// canonical hash used by run manifests.

#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "spdclab/montecarlo.hpp"

namespace spdclab::io {

// Raised for malformed or invalid configuration (CLI exit code 2).
struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Raised for filesystem failures (CLI exit code 4).
struct IoError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

enum class PlanKind { GainSweep, CarSweep, Hom, Bell, Hbt };

std::string to_string(PlanKind kind);

struct BellPlanParams {
    // Empty optional: derive the angle set from optimal_chsh_angles.
    std::optional<std::array<double, 4>> angles;  // a, a', b, b'
    std::int64_t window_ps = 512;
};

struct HomPlanParams {
    double indistinguishability = 1.0;
    double sinc_width_s = 1.0;
    double gauss_width_s = 1.0;
    double center_s = 0.0;
    std::int64_t window_ps = 512;
};

struct CarPlanParams {
    std::int64_t bin_width_ps = 256;
    int rebin_factor = 10;
    int n_side_peaks = 4;
};

struct GainPlanParams {
    double alpha = 0.0;
    double gamma_per_sqrt_mw = 0.0;
    double noise_rel = 0.0;
};

struct HbtPlanParams {
    std::int64_t window_ps = 4096;
};

struct ExperimentPlan {
    PlanKind kind = PlanKind::CarSweep;
    std::string sweep_parameter;
    std::vector<double> sweep_values;
    std::vector<std::int64_t> pulses_per_point;  // one entry per point
    std::string output_dir = "run";
    BellPlanParams bell;
    HomPlanParams hom;
    CarPlanParams car;
    GainPlanParams gain;
    HbtPlanParams hbt;

    std::size_t point_count() const;
};

struct LoadedConfig {
    mc::ExperimentConfig base;  // geometry filled per plan point at run time
    ExperimentPlan plan;
    std::string canonical_json;  // sorted-key serialization of the document
    std::string config_hash;     // FNV-1a 64 of canonical_json, hex
};

LoadedConfig parse_config(const nlohmann::json& document);
LoadedConfig load_config_file(const std::string& path);

// Canonical hash of any JSON document: FNV-1a 64 over the sorted-key dump,
// so semantically equal documents hash equally regardless of key order.
std::string canonical_hash(const nlohmann::json& document);
std::string fnv1a_hex(const std::string& bytes);

}  // namespace spdclab::io

#include "spdclab/config.hpp"

#include <cmath>
#include <fstream>
#include <limits>

#include <nlohmann/json.hpp>

namespace spdclab::io {

namespace {

using nlohmann::json;

[[noreturn]] void bad(const std::string& msg) { throw ConfigError("config: " + msg); }

const json& section(const json& j, const char* key) {
    if (!j.contains(key)) bad(std::string("missing section '") + key + "'");
    return j.at(key);
}

double number(const json& j, const char* key, double fallback,
              bool required = false) {
    if (!j.contains(key)) {
        if (required) bad(std::string("missing key '") + key + "'");
        return fallback;
    }
    if (!j.at(key).is_number()) bad(std::string("key '") + key + "' must be a number");
    return j.at(key).get<double>();
}

// A transmission is either a plain number or an itemized budget object whose
// factors multiply.
double transmission(const json& channels, const char* key) {
    if (!channels.contains(key)) bad(std::string("missing key '") + key + "'");
    const json& v = channels.at(key);
    if (v.is_number()) return v.get<double>();
    if (v.is_object()) {
        double product = 1.0;
        for (const auto& [name, factor] : v.items()) {
            if (!factor.is_number())
                bad(std::string("budget item '") + name + "' must be a number");
            product *= factor.get<double>();
        }
        return product;
    }
    bad(std::string("key '") + key + "' must be a number or a budget object");
}

double mode_count(const json& source) {
    if (!source.contains("mode_count")) return 1.0;
    const json& v = source.at("mode_count");
    if (v.is_string() && v.get<std::string>() == "inf")
        return std::numeric_limits<double>::infinity();
    if (v.is_number()) return v.get<double>();
    bad("mode_count must be a number or \"inf\"");
}

PlanKind plan_kind(const std::string& s) {
    if (s == "gain_sweep") return PlanKind::GainSweep;
    if (s == "car_sweep") return PlanKind::CarSweep;
    if (s == "hom") return PlanKind::Hom;
    if (s == "bell") return PlanKind::Bell;
    if (s == "hbt") return PlanKind::Hbt;
    bad("unknown plan kind '" + s + "'");
}

}  // namespace

std::string to_string(PlanKind kind) {
    switch (kind) {
        case PlanKind::GainSweep: return "gain_sweep";
        case PlanKind::CarSweep: return "car_sweep";
        case PlanKind::Hom: return "hom";
        case PlanKind::Bell: return "bell";
        case PlanKind::Hbt: return "hbt";
    }
    return "unknown";
}

std::size_t ExperimentPlan::point_count() const {
    switch (kind) {
        case PlanKind::Bell: return 16;
        case PlanKind::Hbt: return 1;
        default: return sweep_values.size();
    }
}

std::string fnv1a_hex(const std::string& bytes) {
    std::uint64_t h = 14695981039346656037ull;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 1099511628211ull;
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

std::string canonical_hash(const nlohmann::json& document) {
    return fnv1a_hex(document.dump());  // nlohmann objects iterate in key order
}

LoadedConfig parse_config(const nlohmann::json& j) {
    try {
        LoadedConfig out;
        out.canonical_json = j.dump(2);
        out.config_hash = canonical_hash(j);

        if (!j.contains("seed") || !j.at("seed").is_number_integer() ||
            (j.at("seed").is_number_integer() && !j.at("seed").is_number_unsigned() &&
             j.at("seed").get<std::int64_t>() < 0))
            bad("missing or non-integer 'seed'");
        out.base.seed = j.at("seed").get<std::uint64_t>();

        const json& source = section(j, "source");
        out.base.source.mean_pairs_per_pulse =
            number(source, "mean_pairs_per_pulse", 0.0, true);
        out.base.source.mode_count = mode_count(source);
        const std::string pol = source.value("polarization", "type0_correlated");
        if (pol == "type0_correlated")
            out.base.source.polarization = physics::Polarization::Type0Correlated;
        else if (pol == "type2_singlet")
            out.base.source.polarization = physics::Polarization::Type2Singlet;
        else
            bad("polarization must be type0_correlated or type2_singlet");
        out.base.source.state_visibility = number(source, "state_visibility", 1.0);

        const json& channels = section(j, "channels");
        out.base.channels.transmission1 = transmission(channels, "transmission1");
        out.base.channels.transmission2 = transmission(channels, "transmission2");
        out.base.channels.dark_rate_hz1 = number(channels, "dark_rate_hz1", 0.0);
        out.base.channels.dark_rate_hz2 = number(channels, "dark_rate_hz2", 0.0);
        out.base.channels.rep_rate_hz = number(channels, "rep_rate_hz", 80.0e6);
        out.base.channels.coincidence_window_ps = static_cast<std::int64_t>(
            number(channels, "coincidence_window_ps", 2560.0));

        const json& detectors = section(j, "detectors");
        out.base.detectors.jitter_sigma_ps = number(detectors, "jitter_sigma_ps", 100.0);
        out.base.detectors.dead_time_ps = number(detectors, "dead_time_ps", 0.0);
        out.base.detectors.resolution_ps =
            static_cast<std::int64_t>(number(detectors, "resolution_ps", 1.0));

        physics::validate(out.base.source);
        physics::validate(out.base.channels);

        const json& plan = section(j, "plan");
        if (!plan.contains("kind") || !plan.at("kind").is_string())
            bad("plan needs a string 'kind'");
        out.plan.kind = plan_kind(plan.at("kind").get<std::string>());
        out.plan.output_dir = plan.value("output_dir", std::string("run"));

        const bool sweep_kind = out.plan.kind == PlanKind::GainSweep ||
                                out.plan.kind == PlanKind::CarSweep ||
                                out.plan.kind == PlanKind::Hom;
        if (sweep_kind) {
            const json& sweep = section(plan, "sweep");
            if (!sweep.contains("parameter") || !sweep.contains("values"))
                bad("sweep needs 'parameter' and 'values'");
            out.plan.sweep_parameter = sweep.at("parameter").get<std::string>();
            for (const auto& v : sweep.at("values"))
                out.plan.sweep_values.push_back(v.get<double>());
            if (out.plan.sweep_values.empty()) bad("sweep values must be nonempty");
            const char* expected = out.plan.kind == PlanKind::GainSweep
                                       ? "pump_power_mw"
                                       : out.plan.kind == PlanKind::CarSweep
                                             ? "mean_pairs_per_pulse"
                                             : "delay_s";
            if (out.plan.sweep_parameter != expected)
                bad(std::string("sweep parameter for this kind must be '") + expected +
                    "'");
        }

        const std::size_t points = out.plan.point_count();
        if (out.plan.kind != PlanKind::GainSweep) {
            if (!plan.contains("pulses_per_point")) bad("missing 'pulses_per_point'");
            const json& ppp = plan.at("pulses_per_point");
            if (ppp.is_number()) {
                const auto pulses = ppp.get<std::int64_t>();
                out.plan.pulses_per_point.assign(points, pulses);
            } else if (ppp.is_array()) {
                for (const auto& v : ppp)
                    out.plan.pulses_per_point.push_back(v.get<std::int64_t>());
                if (out.plan.pulses_per_point.size() != points)
                    bad("pulses_per_point array length must match the point count");
            } else {
                bad("pulses_per_point must be a number or an array");
            }
            for (const auto p : out.plan.pulses_per_point)
                if (p <= 0) bad("pulse budget must be > 0");
        }

        switch (out.plan.kind) {
            case PlanKind::Bell: {
                const json& bell = section(plan, "bell");
                out.plan.bell.window_ps =
                    static_cast<std::int64_t>(number(bell, "window_ps", 512.0));
                if (bell.contains("angles") && bell.at("angles").is_object()) {
                    const json& a = bell.at("angles");
                    out.plan.bell.angles = {{number(a, "theta_a_rad", 0.0, true),
                                             number(a, "theta_a_prime_rad", 0.0, true),
                                             number(a, "theta_b_rad", 0.0, true),
                                             number(a, "theta_b_prime_rad", 0.0, true)}};
                } else if (bell.contains("angles") &&
                           !(bell.at("angles").is_string() &&
                             bell.at("angles").get<std::string>() == "optimal")) {
                    bad("bell angles must be \"optimal\" or an object of four angles");
                }
                if (out.base.source.polarization != physics::Polarization::Type2Singlet)
                    bad("bell plan requires polarization type2_singlet");
                break;
            }
            case PlanKind::Hom: {
                const json& hom = section(plan, "hom");
                out.plan.hom.indistinguishability =
                    number(hom, "indistinguishability", 1.0, true);
                out.plan.hom.sinc_width_s = number(hom, "sinc_width_s", 0.0, true);
                out.plan.hom.gauss_width_s = number(hom, "gauss_width_s", 0.0, true);
                out.plan.hom.center_s = number(hom, "center_s", 0.0);
                out.plan.hom.window_ps =
                    static_cast<std::int64_t>(number(hom, "window_ps", 512.0));
                break;
            }
            case PlanKind::CarSweep: {
                if (plan.contains("car")) {
                    const json& car = plan.at("car");
                    out.plan.car.bin_width_ps =
                        static_cast<std::int64_t>(number(car, "bin_width_ps", 256.0));
                    out.plan.car.rebin_factor =
                        static_cast<int>(number(car, "rebin_factor", 10.0));
                    out.plan.car.n_side_peaks =
                        static_cast<int>(number(car, "n_side_peaks", 4.0));
                }
                break;
            }
            case PlanKind::GainSweep: {
                const json& gain = section(plan, "gain");
                out.plan.gain.alpha = number(gain, "alpha", 0.0, true);
                out.plan.gain.gamma_per_sqrt_mw =
                    number(gain, "gamma_per_sqrt_mw", 0.0, true);
                out.plan.gain.noise_rel = number(gain, "noise_rel", 0.0);
                if (out.plan.gain.noise_rel < 0.0) bad("noise_rel must be >= 0");
                break;
            }
            case PlanKind::Hbt: {
                if (plan.contains("hbt"))
                    out.plan.hbt.window_ps = static_cast<std::int64_t>(
                        number(plan.at("hbt"), "window_ps", 4096.0));
                break;
            }
        }

        // Validate one representative per-point config up front so a bad
        // document is rejected before any simulation starts.
        if (out.plan.kind != PlanKind::GainSweep) {
            mc::ExperimentConfig probe = out.base;
            probe.pulse_count = out.plan.pulses_per_point.front();
            probe.geometry = mc::GeometryCar{};
            if (out.plan.kind == PlanKind::Bell) {
                probe.geometry = mc::GeometryBell{0.0, 0.0};
            } else if (out.plan.kind == PlanKind::Hom) {
                probe.geometry = mc::GeometryHom{0.0, out.plan.hom.indistinguishability,
                                                 out.plan.hom.sinc_width_s,
                                                 out.plan.hom.gauss_width_s,
                                                 out.plan.hom.center_s};
            } else if (out.plan.kind == PlanKind::Hbt) {
                probe.geometry = mc::GeometryHbt{};
            }
            mc::validate(probe);
        }
        return out;
    } catch (const ConfigError&) {
        throw;
    } catch (const std::exception& e) {
        bad(e.what());
    }
}

LoadedConfig load_config_file(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw IoError("cannot open config file: " + path);
    nlohmann::json j;
    try {
        f >> j;
    } catch (const std::exception& e) {
        throw ConfigError(std::string("config: invalid JSON: ") + e.what());
    }
    return parse_config(j);
}

}  // namespace spdclab::io

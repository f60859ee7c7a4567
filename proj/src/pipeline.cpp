#include "spdclab/pipeline.hpp"

#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "spdclab/timetags.hpp"

namespace spdclab::io {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

// Shortest round-trip decimal form; keeps CSV output byte-stable.
std::string fmt(double x) { return json(x).dump(); }

void atomic_write(const fs::path& path, const std::string& content) {
    const fs::path tmp = path.string() + ".tmp";
    {
        std::ofstream f(tmp, std::ios::binary);
        if (!f) throw IoError("cannot open for writing: " + tmp.string());
        f << content;
        if (!f) throw IoError("write failed: " + tmp.string());
    }
    std::error_code ec;
    fs::rename(tmp, path, ec);
    if (ec) throw IoError("rename failed for " + path.string() + ": " + ec.message());
}

std::string read_file(const fs::path& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw IoError("cannot open: " + path.string());
    std::ostringstream ss;
    ss << f.rdbuf();
    return ss.str();
}

json read_json(const fs::path& path) {
    try {
        return json::parse(read_file(path));
    } catch (const IoError&) {
        throw;
    } catch (const std::exception& e) {
        throw IoError("corrupt JSON in " + path.string() + ": " + e.what());
    }
}

mc::Geometry point_geometry(const ExperimentPlan& plan,
                            const est::ChshAngles& bell_angles, std::size_t point) {
    switch (plan.kind) {
        case PlanKind::CarSweep:
            return mc::GeometryCar{};
        case PlanKind::Hom:
            return mc::GeometryHom{plan.sweep_values[point],
                                   plan.hom.indistinguishability,
                                   plan.hom.sinc_width_s, plan.hom.gauss_width_s,
                                   plan.hom.center_s};
        case PlanKind::Bell: {
            const int i = static_cast<int>(point) / 4;
            const int j = static_cast<int>(point) % 4;
            est::BellCounts b;
            b.theta_a_rad = bell_angles.theta_a;
            b.theta_a_prime_rad = bell_angles.theta_a_prime;
            b.theta_b_rad = bell_angles.theta_b;
            b.theta_b_prime_rad = bell_angles.theta_b_prime;
            return mc::GeometryBell{b.angle_a(i), b.angle_b(j)};
        }
        default:
            return mc::GeometryHbt{};
    }
}

mc::ExperimentConfig point_config(const LoadedConfig& cfg,
                                  const est::ChshAngles& bell_angles,
                                  std::uint64_t effective_seed, std::size_t point,
                                  double sweep_override_mu = -1.0) {
    mc::ExperimentConfig c = cfg.base;
    c.pulse_count = cfg.plan.pulses_per_point[point];
    c.seed = derive_seed(effective_seed, stream::sweep_point, point);
    c.geometry = point_geometry(cfg.plan, bell_angles, point);
    if (cfg.plan.kind == PlanKind::CarSweep)
        c.source.mean_pairs_per_pulse = cfg.plan.sweep_values[point];
    if (sweep_override_mu >= 0.0) c.source.mean_pairs_per_pulse = sweep_override_mu;
    return c;
}

std::string tags_basename(PlanKind kind, std::size_t point) {
    if (kind == PlanKind::Bell) {
        return "tags_setting_" + std::to_string(point / 4) + "_" +
               std::to_string(point % 4);
    }
    return "tags_point_" + std::to_string(point);
}

struct ArtifactSink {
    fs::path dir;
    std::vector<std::string>* paths;

    void add(const std::string& name, const std::string& content) const {
        atomic_write(dir / name, content);
        paths->push_back(name);
    }
};

void emit_tags(const ArtifactSink& sink, const RunOptions& opts, PlanKind kind,
               std::size_t point, const TagStream& s1, const TagStream& s2) {
    const std::string base = tags_basename(kind, point);
    if (opts.emit_tags_csv) {
        std::ostringstream ss;
        write_tags_csv(ss, {s1, s2});
        sink.add(base + ".csv", ss.str());
    }
    if (opts.emit_tags_binary) {
        std::ostringstream ss;
        write_tags_binary(ss, {s1, s2});
        sink.add(base + ".tpt", ss.str());
    }
}

json fit_report_json(const fit::FitReport& r) {
    json params = json::object();
    json sigmas = json::object();
    for (std::size_t i = 0; i < r.names.size(); ++i) {
        params[r.names[i]] = r.values[i];
        sigmas[r.names[i]] = r.sigmas[i];
    }
    return json{{"params", params},
                {"sigmas", sigmas},
                {"residual_norm", r.residual_norm},
                {"gradient_norm", r.gradient_norm},
                {"iterations", r.iterations},
                {"converged", r.converged},
                {"flags", r.flags}};
}

json car_estimate_json(double mu, double singles1, double singles2,
                       const tt::CarEstimate& e) {
    return json{{"mean_pairs_per_pulse", mu},
                {"singles1_hz", singles1},
                {"singles2_hz", singles2},
                {"car", e.saturated ? json() : json(e.car)},
                {"zero_peak_counts", e.zero_peak_counts},
                {"mean_accidental_counts", e.mean_accidental_counts},
                {"accidental_peaks_used", e.accidental_peaks_used},
                {"stat_uncertainty", e.stat_uncertainty},
                {"saturated", e.saturated}};
}

// Per-point analysis shared between run() and analyze_dir().

void analyze_bell(const LoadedConfig& cfg, const est::ChshAngles& angles,
                  const std::array<std::array<std::uint64_t, 4>, 4>& counts,
                  double total_zero_counts, double total_duration_s,
                  double mean_singles1, double mean_singles2,
                  const ArtifactSink& sink) {
    est::BellCounts bc;
    bc.theta_a_rad = angles.theta_a;
    bc.theta_a_prime_rad = angles.theta_a_prime;
    bc.theta_b_rad = angles.theta_b;
    bc.theta_b_prime_rad = angles.theta_b_prime;
    bc.counts = counts;

    json count_records = json::array();
    for (int i = 0; i < 4; ++i)
        for (int j = 0; j < 4; ++j)
            count_records.push_back(
                {{"i", i}, {"j", j}, {"count", counts[i][j]}});
    sink.add("bell_counts.json",
             json{{"settings",
                   {{"theta_a_rad", bc.theta_a_rad},
                    {"theta_a_prime_rad", bc.theta_a_prime_rad},
                    {"theta_b_rad", bc.theta_b_rad},
                    {"theta_b_prime_rad", bc.theta_b_prime_rad}}},
                  {"counts", count_records}}
                 .dump(2) +
                 "\n");

    const est::ChshResult chsh = est::chsh_S(bc);
    sink.add("chsh.json",
             json{{"S", chsh.S},
                  {"sigma_S", chsh.sigma_S},
                  {"E_values", chsh.E},
                  {"visibility_equiv", chsh.visibility_equiv},
                  {"zero_count_cells", chsh.zero_count_cells},
                  {"window_ps", cfg.plan.bell.window_ps},
                  {"mean_zero_delay_rate_hz", total_zero_counts / total_duration_s},
                  {"mean_singles1_hz", mean_singles1},
                  {"mean_singles2_hz", mean_singles2}}
                 .dump(2) +
                 "\n");
}

void analyze_car_point(const LoadedConfig& cfg, std::size_t point, double mu,
                       const TagStream& s1, const TagStream& s2, double duration_s,
                       std::int64_t period_ps, json& points_json,
                       std::string& sweep_csv, const ArtifactSink& sink) {
    const auto& cp = cfg.plan.car;
    const std::int64_t window = cp.bin_width_ps * cp.rebin_factor;
    // range must be divisible by the bin width and by the rebinned width
    std::int64_t range = (cp.n_side_peaks + 1) * period_ps;
    if (range % window != 0) range += window - (range % window);
    const auto hist = tt::coincidence_histogram(s1, s2, cp.bin_width_ps, range);
    const auto est = tt::car_from_histogram(hist, period_ps, window, cp.n_side_peaks);
    const double singles1 = tt::singles_rate_hz(s1, duration_s);
    const double singles2 = tt::singles_rate_hz(s2, duration_s);

    const auto rebinned = tt::rebin(hist, cp.rebin_factor);
    std::ostringstream hist_csv;
    hist_csv << "bin_left_ps,count\n";
    for (std::size_t k = 0; k < rebinned.counts.size(); ++k)
        hist_csv << rebinned.offset_ps +
                        static_cast<std::int64_t>(k) * rebinned.bin_width_ps
                 << ',' << rebinned.counts[k] << '\n';
    sink.add("hist_point_" + std::to_string(point) + ".csv", hist_csv.str());

    points_json.push_back(car_estimate_json(mu, singles1, singles2, est));
    sweep_csv += fmt(mu) + "," + fmt(singles1) + "," + fmt(singles2) + "," +
                 (est.saturated ? "inf" : fmt(est.car)) + "," +
                 fmt(est.stat_uncertainty) + "," + std::to_string(est.zero_peak_counts) +
                 "," + fmt(est.mean_accidental_counts) + "," +
                 (est.saturated ? "1" : "0") + "\n";
}

void finish_hom(const LoadedConfig& cfg, const std::vector<fit::DataPoint>& scan,
                const ArtifactSink& sink) {
    std::string csv = "delay_s,coincidences\n";
    for (const auto& d : scan) csv += fmt(d.x) + "," + fmt(d.y) + "\n";
    sink.add("hom_scan.csv", csv);

    const est::HomFit fit = est::fit_hom_dip(scan);
    json j = fit_report_json(fit.report);
    j["fitted_visibility"] = fit.fitted_visibility;
    j["conservative_visibility"] = fit.conservative_visibility;
    j["window_ps"] = cfg.plan.hom.window_ps;
    sink.add("hom_fit.json", j.dump(2) + "\n");
}

void finish_hbt(const LoadedConfig& cfg, const TagStream& s1, const TagStream& s2,
                std::int64_t pulses, const ArtifactSink& sink) {
    const std::uint64_t cc =
        tt::coincidences_in_window(s1, s2, cfg.plan.hbt.window_ps);
    const auto g2 = est::g2_zero_estimate(s1.size(), s2.size(), cc,
                                          static_cast<std::uint64_t>(pulses));
    sink.add("hbt.json",
             json{{"singles1", s1.size()},
                  {"singles2", s2.size()},
                  {"coincidences", cc},
                  {"pulses", pulses},
                  {"window_ps", cfg.plan.hbt.window_ps},
                  {"g2_zero", g2.g2},
                  {"modes", std::isfinite(g2.modes) ? json(g2.modes) : json()},
                  {"modes_infinite", g2.modes_infinite},
                  {"modes_below_one", g2.modes_below_one}}
                 .dump(2) +
                 "\n");
}

void finish_gain(const std::vector<fit::DataPoint>& curve, const ArtifactSink& sink) {
    std::string csv = "pump_mw,spdc_power,sigma\n";
    for (const auto& d : curve)
        csv += fmt(d.x) + "," + fmt(d.y) + "," + fmt(d.sigma) + "\n";
    sink.add("gain_curve.csv", csv);

    const fit::FitReport fit = est::fit_spdc_power(curve);
    json j = fit_report_json(fit);
    const physics::GainParams at10{fit.param("alpha"), fit.param("gamma"), 10.0};
    j["efficiency_at_10mw"] = physics::spdc_power(at10) / 10.0;
    sink.add("gain_fit.json", j.dump(2) + "\n");
}

est::ChshAngles resolve_bell_angles(const LoadedConfig& cfg) {
    if (cfg.plan.kind != PlanKind::Bell) return {};
    if (cfg.plan.bell.angles) {
        const auto& a = *cfg.plan.bell.angles;
        return {a[0], a[1], a[2], a[3], 0.0};
    }
    return est::optimal_chsh_angles(cfg.base.source.state_visibility);
}

std::vector<TagStream> load_point_tags(const fs::path& dir, PlanKind kind,
                                       std::size_t point) {
    const std::string base = tags_basename(kind, point);
    const fs::path bin = dir / (base + ".tpt");
    const fs::path csv = dir / (base + ".csv");
    std::vector<TagStream> streams;
    if (fs::exists(bin))
        streams = read_tags_binary_file(bin.string());
    else if (fs::exists(csv))
        streams = read_tags_csv_file(csv.string());
    else
        throw IoError("analyze: no tag stream artifact " + base +
                      ".{tpt,csv} in " + dir.string() +
                      " (re-run simulate with --emit-tags)");
    if (streams.size() != 2)
        throw IoError("analyze: expected 2 channels in " + base);
    return streams;
}

}  // namespace

RunManifest run(const LoadedConfig& config, const RunOptions& options) {
    const auto t_start = std::chrono::steady_clock::now();

    const std::uint64_t seed = options.seed.value_or(config.base.seed);
    LoadedConfig cfg = config;
    cfg.base.seed = seed;
    if (options.pulses)
        for (auto& p : cfg.plan.pulses_per_point) p = *options.pulses;

    const fs::path dir =
        options.output_dir.empty() ? fs::path(cfg.plan.output_dir)
                                   : fs::path(options.output_dir);
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw IoError("cannot create run directory " + dir.string() + ": " +
                          ec.message());

    // Effective configuration: overrides applied, output dir normalized so
    // that identical (config, seed) runs are byte-identical wherever written.
    json effective = json::parse(cfg.canonical_json);
    effective["seed"] = seed;
    effective["plan"]["output_dir"] = ".";
    if (options.pulses) effective["plan"]["pulses_per_point"] = *options.pulses;

    RunManifest manifest;
    manifest.seed = seed;
    manifest.tool_version = kToolVersion;
    manifest.config_hash = canonical_hash(effective);

    ArtifactSink sink{dir, &manifest.artifact_paths};
    sink.add("run_config.json", effective.dump(2) + "\n");

    const est::ChshAngles bell_angles = resolve_bell_angles(cfg);

    switch (cfg.plan.kind) {
        case PlanKind::Bell: {
            std::array<std::array<std::uint64_t, 4>, 4> counts{};
            double zero_total = 0.0, duration_total = 0.0;
            double singles1 = 0.0, singles2 = 0.0;
            for (std::size_t point = 0; point < 16; ++point) {
                const auto c = point_config(cfg, bell_angles, seed, point);
                const auto [s1, s2] = mc::simulate(c);
                const double duration = mc::timeline_duration_s(c);
                const std::uint64_t cc =
                    tt::coincidences_in_window(s1, s2, cfg.plan.bell.window_ps);
                counts[point / 4][point % 4] = cc;
                zero_total += static_cast<double>(cc);
                duration_total += duration;
                singles1 += tt::singles_rate_hz(s1, duration) / 16.0;
                singles2 += tt::singles_rate_hz(s2, duration) / 16.0;
                emit_tags(sink, options, cfg.plan.kind, point, s1, s2);
            }
            analyze_bell(cfg, bell_angles, counts, zero_total, duration_total,
                         singles1, singles2, sink);
            break;
        }
        case PlanKind::CarSweep: {
            json points = json::array();
            std::string sweep_csv =
                "mu,singles1_hz,singles2_hz,car,car_sigma,zero_peak_counts,"
                "mean_accidental_counts,saturated\n";
            for (std::size_t point = 0; point < cfg.plan.point_count(); ++point) {
                const auto c = point_config(cfg, bell_angles, seed, point);
                const auto [s1, s2] = mc::simulate(c);
                analyze_car_point(cfg, point, cfg.plan.sweep_values[point], s1, s2,
                                  mc::timeline_duration_s(c), mc::pulse_period_ps(c),
                                  points, sweep_csv, sink);
                emit_tags(sink, options, cfg.plan.kind, point, s1, s2);
            }
            sink.add("car_sweep.csv", sweep_csv);
            sink.add("car_points.json", points.dump(2) + "\n");
            break;
        }
        case PlanKind::Hom: {
            std::vector<fit::DataPoint> scan;
            for (std::size_t point = 0; point < cfg.plan.point_count(); ++point) {
                const auto c = point_config(cfg, bell_angles, seed, point);
                const auto [s1, s2] = mc::simulate(c);
                const std::uint64_t cc =
                    tt::coincidences_in_window(s1, s2, cfg.plan.hom.window_ps);
                scan.push_back({cfg.plan.sweep_values[point],
                                static_cast<double>(cc),
                                std::sqrt(std::max<double>(1.0, static_cast<double>(cc)))});
                emit_tags(sink, options, cfg.plan.kind, point, s1, s2);
            }
            finish_hom(cfg, scan, sink);
            break;
        }
        case PlanKind::Hbt: {
            const auto c = point_config(cfg, bell_angles, seed, 0);
            const auto [s1, s2] = mc::simulate(c);
            finish_hbt(cfg, s1, s2, c.pulse_count, sink);
            emit_tags(sink, options, cfg.plan.kind, 0, s1, s2);
            break;
        }
        case PlanKind::GainSweep: {
            std::vector<fit::DataPoint> curve;
            for (std::size_t point = 0; point < cfg.plan.sweep_values.size(); ++point) {
                const double pump = cfg.plan.sweep_values[point];
                const physics::GainParams g{cfg.plan.gain.alpha,
                                            cfg.plan.gain.gamma_per_sqrt_mw, pump};
                const double model = physics::spdc_power(g);
                Rng rng = Rng::substream(seed, stream::measurement_noise, point);
                const double rel =
                    cfg.plan.gain.noise_rel > 0.0 ? cfg.plan.gain.noise_rel : 1.0e-6;
                double y = model;
                if (cfg.plan.gain.noise_rel > 0.0)
                    y = model * (1.0 + cfg.plan.gain.noise_rel * rng.normal());
                curve.push_back({pump, y, std::max(model * rel, 1.0e-300)});
            }
            finish_gain(curve, sink);
            break;
        }
    }

    const auto t_end = std::chrono::steady_clock::now();
    manifest.wall_time_s = std::chrono::duration<double>(t_end - t_start).count();
    std::sort(manifest.artifact_paths.begin(), manifest.artifact_paths.end());

    atomic_write(dir / "manifest.json",
                 json{{"config_hash", manifest.config_hash},
                      {"seed", manifest.seed},
                      {"artifact_paths", manifest.artifact_paths},
                      {"tool_version", manifest.tool_version},
                      {"wall_time_s", manifest.wall_time_s}}
                     .dump(2) +
                     "\n");
    return manifest;
}

void analyze_dir(const std::string& run_dir) {
    const fs::path dir(run_dir);
    const json manifest = read_json(dir / "manifest.json");
    if (!manifest.contains("config_hash"))
        throw IoError("manifest without config_hash in " + run_dir);
    LoadedConfig cfg = parse_config(read_json(dir / "run_config.json"));
    const std::uint64_t seed = cfg.base.seed;

    std::vector<std::string> extra_artifacts;
    ArtifactSink sink{dir, &extra_artifacts};
    const est::ChshAngles bell_angles = resolve_bell_angles(cfg);

    switch (cfg.plan.kind) {
        case PlanKind::Bell: {
            std::array<std::array<std::uint64_t, 4>, 4> counts{};
            double zero_total = 0.0, duration_total = 0.0;
            double singles1 = 0.0, singles2 = 0.0;
            for (std::size_t point = 0; point < 16; ++point) {
                const auto streams = load_point_tags(dir, cfg.plan.kind, point);
                const auto c = point_config(cfg, bell_angles, seed, point);
                const double duration = mc::timeline_duration_s(c);
                const std::uint64_t cc = tt::coincidences_in_window(
                    streams[0], streams[1], cfg.plan.bell.window_ps);
                counts[point / 4][point % 4] = cc;
                zero_total += static_cast<double>(cc);
                duration_total += duration;
                singles1 += tt::singles_rate_hz(streams[0], duration) / 16.0;
                singles2 += tt::singles_rate_hz(streams[1], duration) / 16.0;
            }
            analyze_bell(cfg, bell_angles, counts, zero_total, duration_total,
                         singles1, singles2, sink);
            break;
        }
        case PlanKind::CarSweep: {
            json points = json::array();
            std::string sweep_csv =
                "mu,singles1_hz,singles2_hz,car,car_sigma,zero_peak_counts,"
                "mean_accidental_counts,saturated\n";
            for (std::size_t point = 0; point < cfg.plan.point_count(); ++point) {
                const auto streams = load_point_tags(dir, cfg.plan.kind, point);
                const auto c = point_config(cfg, bell_angles, seed, point);
                analyze_car_point(cfg, point, cfg.plan.sweep_values[point],
                                  streams[0], streams[1], mc::timeline_duration_s(c),
                                  mc::pulse_period_ps(c), points, sweep_csv, sink);
            }
            sink.add("car_sweep.csv", sweep_csv);
            sink.add("car_points.json", points.dump(2) + "\n");
            break;
        }
        case PlanKind::Hom: {
            std::vector<fit::DataPoint> scan;
            for (std::size_t point = 0; point < cfg.plan.point_count(); ++point) {
                const auto streams = load_point_tags(dir, cfg.plan.kind, point);
                const std::uint64_t cc = tt::coincidences_in_window(
                    streams[0], streams[1], cfg.plan.hom.window_ps);
                scan.push_back({cfg.plan.sweep_values[point],
                                static_cast<double>(cc),
                                std::sqrt(std::max<double>(1.0, static_cast<double>(cc)))});
            }
            finish_hom(cfg, scan, sink);
            break;
        }
        case PlanKind::Hbt: {
            const auto streams = load_point_tags(dir, cfg.plan.kind, 0);
            finish_hbt(cfg, streams[0], streams[1], cfg.plan.pulses_per_point[0], sink);
            break;
        }
        case PlanKind::GainSweep: {
            std::vector<fit::DataPoint> curve;
            std::ifstream f(dir / "gain_curve.csv");
            if (!f) throw IoError("analyze: missing gain_curve.csv in " + run_dir);
            std::string line;
            std::getline(f, line);
            while (std::getline(f, line)) {
                if (line.empty()) continue;
                std::istringstream row(line);
                std::string a, b, c;
                std::getline(row, a, ',');
                std::getline(row, b, ',');
                std::getline(row, c, ',');
                curve.push_back({std::stod(a), std::stod(b), std::stod(c)});
            }
            finish_gain(curve, sink);
            break;
        }
    }
}

std::string report_dir(const std::string& run_dir) {
    const fs::path dir(run_dir);
    if (!fs::exists(dir / "manifest.json"))
        throw IoError("no manifest.json in " + run_dir);
    const json manifest = read_json(dir / "manifest.json");
    if (!manifest.contains("config_hash") || !manifest.contains("seed"))
        throw IoError("corrupt manifest in " + run_dir);
    const LoadedConfig cfg = parse_config(read_json(dir / "run_config.json"));

    std::ostringstream out;
    out << "run " << run_dir << "\n";
    out << "  kind: " << to_string(cfg.plan.kind)
        << "  seed: " << manifest.at("seed").get<std::uint64_t>()
        << "  config: " << manifest.at("config_hash").get<std::string>()
        << "  version: " << manifest.value("tool_version", std::string("?")) << "\n";

    switch (cfg.plan.kind) {
        case PlanKind::Bell: {
            const json chsh = read_json(dir / "chsh.json");
            const double s = chsh.at("S").get<double>();
            const double sigma = chsh.at("sigma_S").get<double>();
            char line[160];
            std::snprintf(line, sizeof line, "  S = %.4f ± %.4f (violation: %s)\n",
                          s, sigma, std::abs(s) > 2.0 ? "yes" : "no");
            out << line;
            std::snprintf(line, sizeof line,
                          "  equivalent visibility = %.4f, zero-delay rate = %.4f Hz\n",
                          chsh.at("visibility_equiv").get<double>(),
                          chsh.at("mean_zero_delay_rate_hz").get<double>());
            out << line;
            std::snprintf(line, sizeof line,
                          "  mean singles = %.1f Hz / %.1f Hz (window %lld ps)\n",
                          chsh.at("mean_singles1_hz").get<double>(),
                          chsh.at("mean_singles2_hz").get<double>(),
                          static_cast<long long>(chsh.at("window_ps").get<std::int64_t>()));
            out << line;
            break;
        }
        case PlanKind::CarSweep: {
            const json points = read_json(dir / "car_points.json");
            double best = 0.0;
            for (const auto& p : points) {
                char line[200];
                const bool saturated = p.at("saturated").get<bool>();
                const double car = saturated ? 0.0 : p.at("car").get<double>();
                best = std::max(best, car);
                std::snprintf(line, sizeof line,
                              "  mu = %-10.4g CAR = %-10s singles = %.1f / %.1f Hz\n",
                              p.at("mean_pairs_per_pulse").get<double>(),
                              saturated
                                  ? "saturated"
                                  : (std::to_string(car).substr(0, 9) + " ± " +
                                     std::to_string(p.at("stat_uncertainty").get<double>())
                                         .substr(0, 6))
                                        .c_str(),
                              p.at("singles1_hz").get<double>(),
                              p.at("singles2_hz").get<double>());
                out << line;
            }
            char line[80];
            std::snprintf(line, sizeof line, "  peak CAR = %.1f\n", best);
            out << line;
            break;
        }
        case PlanKind::Hom: {
            const json fit = read_json(dir / "hom_fit.json");
            char line[160];
            std::snprintf(line, sizeof line,
                          "  fitted visibility = %.4f ± %.4f\n",
                          fit.at("fitted_visibility").get<double>(),
                          fit.at("sigmas").at("visibility").get<double>());
            out << line;
            std::snprintf(line, sizeof line, "  conservative visibility = %.4f\n",
                          fit.at("conservative_visibility").get<double>());
            out << line;
            std::snprintf(line, sizeof line, "  converged: %s (iterations %d)\n",
                          fit.at("converged").get<bool>() ? "yes" : "no",
                          fit.at("iterations").get<int>());
            out << line;
            break;
        }
        case PlanKind::Hbt: {
            const json hbt = read_json(dir / "hbt.json");
            char line[160];
            const bool inf = hbt.at("modes_infinite").get<bool>();
            char modes[32] = "inf";
            if (!inf)
                std::snprintf(modes, sizeof modes, "%.3f",
                              hbt.at("modes").get<double>());
            std::snprintf(line, sizeof line, "  g2(0) = %.4f, modes = %s%s\n",
                          hbt.at("g2_zero").get<double>(), modes,
                          hbt.at("modes_below_one").get<bool>() ? " (below one)" : "");
            out << line;
            break;
        }
        case PlanKind::GainSweep: {
            const json fit = read_json(dir / "gain_fit.json");
            char line[200];
            std::snprintf(line, sizeof line,
                          "  alpha = %.6g ± %.2g, gamma = %.6g ± %.2g /sqrt(mW)\n",
                          fit.at("params").at("alpha").get<double>(),
                          fit.at("sigmas").at("alpha").get<double>(),
                          fit.at("params").at("gamma").get<double>(),
                          fit.at("sigmas").at("gamma").get<double>());
            out << line;
            std::snprintf(line, sizeof line, "  efficiency at 10 mW = %.4g\n",
                          fit.at("efficiency_at_10mw").get<double>());
            out << line;
            break;
        }
    }
    return out.str();
}

}  // namespace spdclab::io

#include <CLI11.hpp>

#include <fstream>
#include <iostream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "spdclab/pipeline.hpp"

namespace spdclab::io {

namespace {

using nlohmann::json;

std::vector<fit::DataPoint> read_fit_csv(const std::string& path,
                                         const std::string& expected_header,
                                         bool poisson_default_sigma) {
    std::ifstream f(path);
    if (!f) throw IoError("cannot open data file: " + path);
    std::string line;
    if (!std::getline(f, line)) throw ConfigError("fit: empty data file " + path);
    if (line.size() >= 1 && line.back() == '\r') line.pop_back();
    if (line.rfind(expected_header, 0) != 0)
        throw ConfigError("fit: expected header '" + expected_header +
                          "[,sigma]' in " + path + ", got '" + line + "'");
    std::vector<fit::DataPoint> data;
    while (std::getline(f, line)) {
        if (line.empty()) continue;
        std::istringstream row(line);
        std::string a, b, c;
        std::getline(row, a, ',');
        std::getline(row, b, ',');
        const bool has_sigma = static_cast<bool>(std::getline(row, c, ','));
        fit::DataPoint p;
        try {
            p.x = std::stod(a);
            p.y = std::stod(b);
            p.sigma = has_sigma ? std::stod(c)
                               : (poisson_default_sigma
                                      ? std::sqrt(std::max(1.0, p.y))
                                      : 1.0);
        } catch (const std::exception&) {
            throw ConfigError("fit: bad row '" + line + "' in " + path);
        }
        data.push_back(p);
    }
    return data;
}

void emit_result(const std::string& out_path, const std::string& content) {
    if (out_path.empty()) {
        std::cout << content;
        return;
    }
    std::ofstream f(out_path, std::ios::binary);
    if (!f) throw IoError("cannot open for writing: " + out_path);
    f << content;
}

json fit_report_json(const fit::FitReport& r) {
    json params = json::object();
    json sigmas = json::object();
    for (std::size_t i = 0; i < r.names.size(); ++i) {
        params[r.names[i]] = r.values[i];
        sigmas[r.names[i]] = r.sigmas[i];
    }
    return json{{"params", params},         {"sigmas", sigmas},
                {"residual_norm", r.residual_norm},
                {"gradient_norm", r.gradient_norm},
                {"iterations", r.iterations}, {"converged", r.converged},
                {"flags", r.flags}};
}

}  // namespace

int run_cli(int argc, const char* const* argv) {
    CLI::App app{"spdclab: stochastic simulator and estimators for pulsed "
                 "photon-pair counting experiments"};
    app.require_subcommand(1);

    std::string config_path, out_dir, data_path, fit_kind, run_dir, fit_out;
    std::uint64_t seed = 0;
    std::int64_t pulses = 0;
    bool emit_csv = false, emit_bin = false;
    double visibility = 1.0;
    double eta1 = 0.0, eta2_base = 0.0, d1 = 0.0, d2 = 0.0;

    auto* sim = app.add_subcommand("simulate", "execute the plan in a config file");
    sim->add_option("config", config_path, "experiment config JSON")->required();
    auto* seed_opt = sim->add_option("--seed", seed, "override the config seed");
    auto* pulses_opt =
        sim->add_option("--pulses", pulses, "override every per-point pulse budget");
    sim->add_option("--out", out_dir, "output directory (overrides the plan)");
    sim->add_flag("--emit-tags", emit_csv, "write tag streams as CSV");
    sim->add_flag("--emit-tags-binary", emit_bin, "write tag streams as TPT1 binary");

    auto* analyze = app.add_subcommand("analyze", "recompute analysis of a run dir");
    analyze->add_option("dir", run_dir, "run directory")->required();

    auto* fitcmd = app.add_subcommand("fit", "fit a data CSV (kinds: gain, car, hom)");
    fitcmd->add_option("kind", fit_kind, "gain | car | hom")->required();
    fitcmd->add_option("data", data_path, "input CSV")->required();
    fitcmd->add_option("--out", fit_out, "write the fit report JSON here");
    fitcmd->add_option("--eta1", eta1, "known channel-1 efficiency (car fit)");
    fitcmd->add_option("--eta2-base", eta2_base, "measured channel-2 efficiency (car fit)");
    fitcmd->add_option("--d1", d1, "channel-1 dark probability per window (car fit)");
    fitcmd->add_option("--d2", d2, "channel-2 dark probability per window (car fit)");

    auto* report = app.add_subcommand("report", "summarize a run directory");
    report->add_option("dir", run_dir, "run directory")->required();

    auto* angles = app.add_subcommand("bell-angles",
                                      "optimal CHSH analyzer angles for a Werner state");
    angles->add_option("--visibility", visibility, "state visibility in (0,1]")
        ->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    try {
        if (sim->parsed()) {
            const LoadedConfig cfg = load_config_file(config_path);
            RunOptions opts;
            if (seed_opt->count()) opts.seed = seed;
            if (pulses_opt->count()) opts.pulses = pulses;
            opts.output_dir = out_dir;
            opts.emit_tags_csv = emit_csv;
            opts.emit_tags_binary = emit_bin;
            const RunManifest manifest = run(cfg, opts);
            std::cout << "wrote " << manifest.artifact_paths.size() + 1
                      << " artifacts (config " << manifest.config_hash << ")\n";
        } else if (analyze->parsed()) {
            analyze_dir(run_dir);
            std::cout << "reanalyzed " << run_dir << "\n";
        } else if (report->parsed()) {
            std::cout << report_dir(run_dir);
        } else if (angles->parsed()) {
            const est::ChshAngles a = est::optimal_chsh_angles(visibility);
            std::cout << json{{"theta_a_rad", a.theta_a},
                              {"theta_a_prime_rad", a.theta_a_prime},
                              {"theta_b_rad", a.theta_b},
                              {"theta_b_prime_rad", a.theta_b_prime},
                              {"s_max", a.s_max}}
                             .dump(2)
                      << "\n";
        } else if (fitcmd->parsed()) {
            if (fit_kind == "gain") {
                const auto data = read_fit_csv(data_path, "pump_mw,spdc_power", false);
                emit_result(fit_out,
                            fit_report_json(est::fit_spdc_power(data)).dump(2) + "\n");
            } else if (fit_kind == "car") {
                if (eta1 <= 0.0 || eta2_base <= 0.0)
                    throw ConfigError("fit car: --eta1 and --eta2-base are required");
                const auto data = read_fit_csv(data_path, "mu,car", false);
                const est::CarFitKnowns knowns{eta1, eta2_base, d1, d2};
                emit_result(fit_out,
                            fit_report_json(est::fit_car_curve(data, knowns)).dump(2) +
                                "\n");
            } else if (fit_kind == "hom") {
                const auto data = read_fit_csv(data_path, "delay_s,coincidences", true);
                const est::HomFit hom = est::fit_hom_dip(data);
                json j = fit_report_json(hom.report);
                j["fitted_visibility"] = hom.fitted_visibility;
                j["conservative_visibility"] = hom.conservative_visibility;
                emit_result(fit_out, j.dump(2) + "\n");
            } else {
                throw ConfigError("fit: unknown kind '" + fit_kind +
                                  "' (expected gain, car or hom)");
            }
        }
    } catch (const ConfigError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const IoError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 4;
    } catch (const std::invalid_argument& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    }
    return 0;
}

}  // namespace spdclab::io

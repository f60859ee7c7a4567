#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include <nlohmann/json.hpp>

#include "spdclab/config.hpp"

using namespace spdclab;
using nlohmann::json;

namespace {

json minimal_config() {
    return json::parse(R"({
      "seed": 42,
      "source": {
        "mean_pairs_per_pulse": 0.01,
        "mode_count": 1.8,
        "polarization": "type0_correlated",
        "state_visibility": 1.0
      },
      "channels": {
        "transmission1": 8.0e-4,
        "transmission2": 1.2e-3,
        "dark_rate_hz1": 600,
        "dark_rate_hz2": 550,
        "rep_rate_hz": 8.0e7,
        "coincidence_window_ps": 2560
      },
      "detectors": {"jitter_sigma_ps": 100.0, "dead_time_ps": 0.0, "resolution_ps": 1},
      "plan": {
        "kind": "car_sweep",
        "pulses_per_point": 100000,
        "output_dir": "out",
        "sweep": {"parameter": "mean_pairs_per_pulse", "values": [0.001, 0.01]}
      }
    })");
}

}  // namespace

TEST_CASE("minimal config parses with expected values") {
    const auto cfg = io::parse_config(minimal_config());
    CHECK(cfg.base.seed == 42);
    CHECK(cfg.base.source.mean_pairs_per_pulse == 0.01);
    CHECK(cfg.base.source.mode_count == 1.8);
    CHECK(cfg.base.channels.transmission2 == 1.2e-3);
    CHECK(cfg.base.channels.coincidence_window_ps == 2560);
    CHECK(cfg.plan.kind == io::PlanKind::CarSweep);
    CHECK(cfg.plan.sweep_values.size() == 2);
    CHECK(cfg.plan.pulses_per_point == std::vector<std::int64_t>{100000, 100000});
    CHECK(cfg.plan.point_count() == 2);
}

TEST_CASE("itemized transmission budgets multiply") {
    json j = minimal_config();
    j["channels"]["transmission1"] = {{"germanium", 0.808},
                                      {"filter", 0.65},
                                      {"fiber", 0.8},
                                      {"coupling", 0.10},
                                      {"detector", 0.02}};
    const auto cfg = io::parse_config(j);
    CHECK(cfg.base.channels.transmission1 ==
          doctest::Approx(0.808 * 0.65 * 0.8 * 0.10 * 0.02).epsilon(1e-12));
}

TEST_CASE("mode count accepts the inf sentinel") {
    json j = minimal_config();
    j["source"]["mode_count"] = "inf";
    const auto cfg = io::parse_config(j);
    CHECK(std::isinf(cfg.base.source.mode_count));
}

TEST_CASE("config hash is stable under key reordering") {
    const char* a = R"({"alpha": 1.5, "beta": {"x": 1, "y": 2}, "gamma": [1,2,3]})";
    const char* b = R"({"gamma": [1,2,3], "beta": {"y": 2, "x": 1}, "alpha": 1.5})";
    CHECK(io::canonical_hash(json::parse(a)) == io::canonical_hash(json::parse(b)));
    const char* c = R"({"alpha": 1.5, "beta": {"x": 1, "y": 3}, "gamma": [1,2,3]})";
    CHECK(io::canonical_hash(json::parse(a)) != io::canonical_hash(json::parse(c)));

    // FNV-1a offset basis for the empty string
    CHECK(io::fnv1a_hex("") == "cbf29ce484222325");
}

TEST_CASE("config rejections") {
    json j = minimal_config();
    j.erase("channels");
    CHECK_THROWS_AS(io::parse_config(j), io::ConfigError);

    j = minimal_config();
    j["plan"]["kind"] = "banana";
    CHECK_THROWS_AS(io::parse_config(j), io::ConfigError);

    j = minimal_config();
    j["plan"]["sweep"]["parameter"] = "delay_s";  // wrong parameter for car_sweep
    CHECK_THROWS_AS(io::parse_config(j), io::ConfigError);

    j = minimal_config();
    j["plan"]["pulses_per_point"] = -5;
    CHECK_THROWS_AS(io::parse_config(j), io::ConfigError);

    j = minimal_config();
    j["channels"]["coincidence_window_ps"] = 20000;  // exceeds the pulse period
    CHECK_THROWS_AS(io::parse_config(j), io::ConfigError);

    j = minimal_config();
    j["source"]["mode_count"] = 0.5;
    CHECK_THROWS_AS(io::parse_config(j), io::ConfigError);

    j = minimal_config();
    j["plan"]["kind"] = "bell";
    j["plan"]["bell"] = {{"window_ps", 512}};
    // bell requires a singlet source
    CHECK_THROWS_AS(io::parse_config(j), io::ConfigError);

    j = minimal_config();
    j["plan"]["sweep"]["values"] = json::array();
    CHECK_THROWS_AS(io::parse_config(j), io::ConfigError);
}

TEST_CASE("bell and hom plans parse their sections") {
    json j = minimal_config();
    j["source"]["polarization"] = "type2_singlet";
    j["source"]["state_visibility"] = 0.778;
    j["plan"] = {{"kind", "bell"},
                 {"pulses_per_point", 50000},
                 {"output_dir", "bell_run"},
                 {"bell", {{"window_ps", 512}, {"angles", "optimal"}}}};
    auto cfg = io::parse_config(j);
    CHECK(cfg.plan.kind == io::PlanKind::Bell);
    CHECK(cfg.plan.point_count() == 16);
    CHECK_FALSE(cfg.plan.bell.angles.has_value());
    CHECK(cfg.plan.bell.window_ps == 512);

    j["plan"]["bell"]["angles"] = {{"theta_a_rad", 0.0},
                                   {"theta_a_prime_rad", 0.7853981633974483},
                                   {"theta_b_rad", 0.39269908169872414},
                                   {"theta_b_prime_rad", 1.1780972450961724}};
    cfg = io::parse_config(j);
    REQUIRE(cfg.plan.bell.angles.has_value());
    CHECK((*cfg.plan.bell.angles)[1] == doctest::Approx(0.7853981633974483));

    json h = minimal_config();
    h["plan"] = {{"kind", "hom"},
                 {"pulses_per_point", 1000},
                 {"sweep", {{"parameter", "delay_s"}, {"values", {-1e-13, 0.0, 1e-13}}}},
                 {"hom",
                  {{"indistinguishability", 0.881},
                   {"sinc_width_s", 3e-13},
                   {"gauss_width_s", 1.5e-13}}}};
    const auto hom = io::parse_config(h);
    CHECK(hom.plan.kind == io::PlanKind::Hom);
    CHECK(hom.plan.hom.indistinguishability == 0.881);
    CHECK(hom.plan.point_count() == 3);
}

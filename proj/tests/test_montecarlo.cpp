#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <omp.h>

#include <array>
#include <cmath>
#include <limits>

#include "spdclab/montecarlo.hpp"
#include "spdclab/timetags.hpp"

using namespace spdclab;

namespace {

mc::ExperimentConfig base_config() {
    mc::ExperimentConfig c;
    c.channels.rep_rate_hz = 80.0e6;
    c.channels.coincidence_window_ps = 2560;
    c.detectors.jitter_sigma_ps = 0.0;
    c.geometry = mc::GeometryCar{};
    c.pulse_count = 1000;
    c.seed = 99;
    return c;
}

}  // namespace

TEST_CASE("sample_pairs: empty source and bright regime") {
    Rng rng(1);
    physics::PairSourceModel off;
    off.mean_pairs_per_pulse = 0.0;
    for (int i = 0; i < 1000; ++i) CHECK(mc::sample_pairs(off, rng) == 0);

    physics::PairSourceModel bright;
    bright.mean_pairs_per_pulse = 16.0;
    bright.mode_count = 1.8;
    double sum = 0.0;
    const int n = 100000;
    for (int i = 0; i < n; ++i) sum += static_cast<double>(mc::sample_pairs(bright, rng));
    const double sigma = std::sqrt(16.0 * (1.0 + 16.0 / 1.8) / n);
    CHECK(std::abs(sum / n - 16.0) < 4.0 * sigma);
}

TEST_CASE("sample_pairs: single-mode thermal moments") {
    Rng rng(2);
    physics::PairSourceModel src;
    src.mean_pairs_per_pulse = 1.0;
    src.mode_count = 1.0;
    const int n = 1000000;
    double sum = 0.0, sum2 = 0.0;
    for (int i = 0; i < n; ++i) {
        const auto k = static_cast<double>(mc::sample_pairs(src, rng));
        sum += k;
        sum2 += k * k;
    }
    const double mean = sum / n;
    const double var = sum2 / n - mean * mean;
    CHECK(std::abs(mean - 1.0) < 4.0 * std::sqrt(2.0 / n));
    CHECK(var == doctest::Approx(2.0).epsilon(0.02));  // mu(1 + mu)
}

TEST_CASE("sample_pairs frequencies match the pmf") {
    Rng rng(3);
    physics::PairSourceModel src;
    src.mean_pairs_per_pulse = 0.5;
    src.mode_count = 2.0;
    const physics::PairCountDistribution d(0.5, 2.0);
    const int n = 500000;
    std::array<int, 7> hist{};
    for (int i = 0; i < n; ++i) {
        const auto k = mc::sample_pairs(src, rng);
        if (k < hist.size()) hist[k]++;
    }
    for (std::size_t k = 0; k < hist.size(); ++k) {
        const double expect = d.pmf(k) * n;
        if (expect < 10.0) continue;
        CHECK(std::abs(hist[k] - expect) < 5.0 * std::sqrt(expect));
    }
}

TEST_CASE("sample_pairs: Poisson limit") {
    Rng rng(4);
    physics::PairSourceModel src;
    src.mean_pairs_per_pulse = 2.0;
    src.mode_count = std::numeric_limits<double>::infinity();
    const int n = 300000;
    double sum = 0.0, sum2 = 0.0;
    for (int i = 0; i < n; ++i) {
        const auto k = static_cast<double>(mc::sample_pairs(src, rng));
        sum += k;
        sum2 += k * k;
    }
    const double mean = sum / n;
    CHECK(mean == doctest::Approx(2.0).epsilon(0.01));
    CHECK(sum2 / n - mean * mean == doctest::Approx(2.0).epsilon(0.03));
}

TEST_CASE("thin_loss: identity, annihilation, binomial statistics") {
    Rng rng(5);
    CHECK(mc::thin_loss(1000, 1.0, rng) == 1000);
    CHECK(mc::thin_loss(1000, 0.0, rng) == 0);
    const std::uint64_t kept = mc::thin_loss(1000000, 0.04, rng);
    const double sigma = std::sqrt(1000000 * 0.04 * 0.96);
    CHECK(std::abs(static_cast<double>(kept) - 40000.0) < 4.0 * sigma);
    CHECK_THROWS(mc::thin_loss(10, 1.5, rng));
}

TEST_CASE("bell_outcome: anticorrelation, oracle fraction, white noise") {
    Rng rng(6);
    for (int i = 0; i < 100000; ++i) {
        const auto [a, b] = mc::bell_outcome(0.7, 0.7, 1.0, rng);
        CHECK_FALSE((a && b));
    }
    const double kPi = 3.14159265358979323846;
    int both = 0;
    const int n = 1000000;
    for (int i = 0; i < n; ++i) {
        const auto [a, b] = mc::bell_outcome(0.0, kPi / 8.0, 1.0, rng);
        both += (a && b);
    }
    const double p = 0.5 * std::sin(kPi / 8.0) * std::sin(kPi / 8.0);
    CHECK(std::abs(static_cast<double>(both) / n - p) <
          4.0 * std::sqrt(p * (1.0 - p) / n));

    both = 0;
    for (int i = 0; i < n; ++i) {
        const auto [a, b] = mc::bell_outcome(0.4, 1.2, 0.0, rng);
        both += (a && b);
    }
    CHECK(std::abs(static_cast<double>(both) / n - 0.25) <
          4.0 * std::sqrt(0.25 * 0.75 / n));
}

TEST_CASE("hom_coincidence_prob: suppression, distinguishable limit, partial dip") {
    mc::GeometryHom g;
    g.indistinguishability = 1.0;
    g.sinc_width_s = 3.0e-13;
    g.gauss_width_s = 1.5e-13;
    g.center_s = 0.0;
    CHECK(mc::hom_coincidence_prob(0.0, g) == doctest::Approx(0.0).epsilon(1e-14));
    CHECK(mc::hom_coincidence_prob(1.0e-9, g) == doctest::Approx(0.5).epsilon(1e-12));
    g.indistinguishability = 0.881;
    CHECK(mc::hom_coincidence_prob(0.0, g) ==
          doctest::Approx(0.5 * 0.119).epsilon(1e-12));
}

TEST_CASE("detector_response: identity without jitter, darks or dead time") {
    std::vector<std::uint64_t> arrivals{100, 5000, 5000, 123456};
    Rng j(1), d(2);
    mc::DetectorParams det;
    det.jitter_sigma_ps = 0.0;
    const auto s = mc::detector_response(arrivals, 1, 0.0, 1.0, det, j, d);
    CHECK(s.tags_ps == arrivals);
    CHECK(s.channel_id == 1);
    for (auto o : s.origins) CHECK(o == TagOrigin::Photon);
}

TEST_CASE("detector_response: dark counts follow the Poisson process") {
    Rng j(3), d(4);
    mc::DetectorParams det;
    const auto s = mc::detector_response({}, 2, 550.0, 10.0, det, j, d);
    const double expect = 5500.0;
    CHECK(std::abs(static_cast<double>(s.size()) - expect) < 3.0 * std::sqrt(expect));
    CHECK(s.is_sorted());
    for (auto o : s.origins) CHECK(o == TagOrigin::Dark);
}

TEST_CASE("detector_response: jitter spread matches sigma within 5 percent") {
    std::vector<std::uint64_t> arrivals(100000, 1000000);
    Rng j(5), d(6);
    mc::DetectorParams det;
    det.jitter_sigma_ps = 100.0;
    const auto s = mc::detector_response(arrivals, 1, 0.0, 1.0, det, j, d);
    REQUIRE(s.size() == arrivals.size());
    double sum = 0.0, sum2 = 0.0;
    for (auto t : s.tags_ps) {
        const double delta = static_cast<double>(t) - 1000000.0;
        sum += delta;
        sum2 += delta * delta;
    }
    const double mean = sum / static_cast<double>(s.size());
    const double std_dev =
        std::sqrt(sum2 / static_cast<double>(s.size()) - mean * mean);
    CHECK(std::abs(std_dev - 100.0) / 100.0 < 0.05);
}

TEST_CASE("detector_response: dead time enforces minimum spacing") {
    Rng j(7), d(8);
    mc::DetectorParams det;
    det.jitter_sigma_ps = 0.0;
    det.dead_time_ps = 50000.0;
    const auto s = mc::detector_response({}, 1, 100000.0, 1.0, det, j, d);
    REQUIRE(s.size() > 100);
    for (std::size_t i = 1; i < s.size(); ++i)
        CHECK(s.tags_ps[i] - s.tags_ps[i - 1] >= 50000);
}

TEST_CASE("simulate: empty physics gives empty streams") {
    auto c = base_config();
    c.source.mean_pairs_per_pulse = 0.0;
    c.pulse_count = 100000;
    const auto [s1, s2] = mc::simulate(c);
    CHECK(s1.size() == 0);
    CHECK(s2.size() == 0);
}

TEST_CASE("simulate: dark-only run matches the Poisson oracle") {
    auto c = base_config();
    c.source.mean_pairs_per_pulse = 0.0;
    c.channels.dark_rate_hz1 = 600.0;
    c.channels.dark_rate_hz2 = 0.0;
    c.pulse_count = 100000000;  // 1.25 s at 80 MHz
    const auto [s1, s2] = mc::simulate(c);
    CHECK(std::abs(static_cast<double>(s1.size()) - 750.0) < 3.0 * std::sqrt(750.0));
    CHECK(s2.size() == 0);
}

TEST_CASE("simulate: singles rates follow R*mu*eta + D") {
    auto c = base_config();
    c.source.mean_pairs_per_pulse = 0.01;
    c.source.mode_count = 1.8;
    c.channels.transmission1 = 0.05;
    c.channels.transmission2 = 0.03;
    c.channels.dark_rate_hz1 = 100.0;
    c.channels.dark_rate_hz2 = 50.0;
    c.pulse_count = 10000000;  // 0.125 s
    const auto [s1, s2] = mc::simulate(c);
    const double expect1 = (80.0e6 * 0.01 * 0.05 + 100.0) * 0.125;
    const double expect2 = (80.0e6 * 0.01 * 0.03 + 50.0) * 0.125;
    CHECK(std::abs(static_cast<double>(s1.size()) - expect1) <
          4.0 * std::sqrt(expect1));
    CHECK(std::abs(static_cast<double>(s2.size()) - expect2) <
          4.0 * std::sqrt(expect2));
    CHECK(s1.is_sorted());
    CHECK(s2.is_sorted());
}

TEST_CASE("simulate: bright-regime tag rate is R*mu*eta") {
    auto c = base_config();
    c.source.mean_pairs_per_pulse = 2.0;
    c.source.mode_count = 1.8;
    c.channels.transmission1 = 0.05;
    c.channels.transmission2 = 0.0;
    c.pulse_count = 10000000;
    const auto [s1, s2] = mc::simulate(c);
    // thinned negative-binomial tags: variance eta^2*Var(n) + eta(1-eta)*mu
    const double var_pulse = 0.0025 * 2.0 * (1.0 + 2.0 / 1.8) + 0.0475 * 2.0;
    const double expect = 1.0e7 * 2.0 * 0.05;
    CHECK(std::abs(static_cast<double>(s1.size()) - expect) <
          4.0 * std::sqrt(1.0e7 * var_pulse));
    CHECK(s2.size() == 0);
}

TEST_CASE("simulate: dead time prunes the merged stream") {
    auto c = base_config();
    c.source.mean_pairs_per_pulse = 0.5;
    c.channels.transmission1 = 0.8;
    c.channels.transmission2 = 0.8;
    c.channels.dark_rate_hz1 = 50000.0;
    c.channels.dark_rate_hz2 = 50000.0;
    c.detectors.jitter_sigma_ps = 100.0;
    c.detectors.dead_time_ps = 40000.0;
    c.pulse_count = 1000000;
    const auto [s1, s2] = mc::simulate(c);
    REQUIRE(s1.size() > 100);
    for (std::size_t i = 1; i < s1.size(); ++i)
        CHECK(s1.tags_ps[i] - s1.tags_ps[i - 1] >= 40000);
}

TEST_CASE("simulate: deterministic across runs and worker counts") {
    auto c = base_config();
    c.source.mean_pairs_per_pulse = 0.02;
    c.channels.transmission1 = 0.1;
    c.channels.transmission2 = 0.08;
    c.channels.dark_rate_hz1 = 500.0;
    c.channels.dark_rate_hz2 = 400.0;
    c.detectors.jitter_sigma_ps = 100.0;
    c.pulse_count = 8000000;

    const auto serial = mc::simulate_serial(c);
    for (int workers : {1, 2, 8}) {
        omp_set_num_threads(workers);
        const auto parallel = mc::simulate(c);
        CHECK(parallel.first.tags_ps == serial.first.tags_ps);
        CHECK(parallel.second.tags_ps == serial.second.tags_ps);
        CHECK(parallel.first.origins == serial.first.origins);
        CHECK(parallel.second.origins == serial.second.origins);
    }
    omp_set_num_threads(omp_get_num_procs());

    const auto repeat = mc::simulate(c);
    CHECK(repeat.first.tags_ps == serial.first.tags_ps);
}

TEST_CASE("simulate: Bell geometry matches the outcome probabilities") {
    const double kPi = 3.14159265358979323846;
    auto c = base_config();
    c.source.mean_pairs_per_pulse = 0.002;
    c.source.mode_count = 1.8;
    c.source.polarization = physics::Polarization::Type2Singlet;
    c.source.state_visibility = 0.9;
    c.channels.transmission1 = 0.2;
    c.channels.transmission2 = 0.2;
    c.pulse_count = 20000000;

    const double angles_a[4] = {0.0, kPi / 2.0, kPi / 4.0, 3.0 * kPi / 4.0};
    const double angles_b[4] = {kPi / 8.0, kPi / 8.0 + kPi / 2.0, 3.0 * kPi / 8.0,
                                3.0 * kPi / 8.0 + kPi / 2.0};
    for (int i = 0; i < 4; ++i) {
        for (int j = 0; j < 4; ++j) {
            c.geometry = mc::GeometryBell{angles_a[i], angles_b[j]};
            c.seed = 1000 + 4 * i + j;
            const auto [s1, s2] = mc::simulate(c);
            const auto cc = tt::coincidences_in_window(s1, s2, 512);
            const double p =
                physics::singlet_outcome_probs(angles_a[i], angles_b[j], 0.9)[0];
            const double expect = static_cast<double>(c.pulse_count) * 0.002 * p *
                                  0.2 * 0.2;
            CHECK(std::abs(static_cast<double>(cc) - expect) <
                  4.0 * std::sqrt(expect + 1.0) + 4.0);
        }
    }
}

TEST_CASE("simulate: accidental peaks appear at the laser period") {
    auto c = base_config();
    c.source.mean_pairs_per_pulse = 0.05;
    c.channels.transmission1 = 0.1;
    c.channels.transmission2 = 0.1;
    c.channels.dark_rate_hz1 = 1000.0;
    c.channels.dark_rate_hz2 = 1000.0;
    c.detectors.jitter_sigma_ps = 100.0;
    c.pulse_count = 20000000;  // 0.25 s
    const auto [s1, s2] = mc::simulate(c);
    const auto h = tt::coincidence_histogram(s1, s2, 256, 64000);

    const auto window_counts = [&](std::int64_t center) {
        std::uint64_t sum = 0;
        for (std::size_t k = 0; k < h.counts.size(); ++k)
            if (std::llabs(h.bin_center_ps(k) - center) <= 1280) sum += h.counts[k];
        return sum;
    };
    // per-pulse click probability inside one 2560-ps window: photon term
    // mu*eta plus dark rate times the window span
    const double per_pulse1 = 0.05 * 0.1 + 1000.0 * 2560.0e-12;
    const double per_pulse2 = 0.05 * 0.1 + 1000.0 * 2560.0e-12;
    const double expect_side = per_pulse1 * per_pulse2 * 2.0e7;
    for (int m : {-4, -3, -2, -1, 1, 2, 3, 4}) {
        const auto counts = window_counts(m * 12500);
        CHECK(std::abs(static_cast<double>(counts) - expect_side) <
              4.0 * std::sqrt(expect_side));
    }
    // zero peak towers above the accidentals
    CHECK(window_counts(0) >
          10 * window_counts(12500));
}

TEST_CASE("simulate rejects invalid configurations") {
    auto c = base_config();
    c.pulse_count = 0;
    CHECK_THROWS(mc::simulate(c));

    c = base_config();
    c.pulse_count = std::numeric_limits<std::int64_t>::max() / 12500 + 1;
    CHECK_THROWS(mc::simulate(c));

    c = base_config();
    c.geometry = mc::GeometryBell{0.0, 0.0};  // requires a singlet source
    c.source.polarization = physics::Polarization::Type0Correlated;
    CHECK_THROWS(mc::simulate(c));

    c = base_config();
    c.detectors.resolution_ps = 0;
    CHECK_THROWS(mc::simulate(c));
}

namespace {

tt::CarEstimate simulate_car(double mu, double eta1, double eta2, double dark1,
                             double dark2, double seconds, std::uint64_t seed) {
    mc::ExperimentConfig c;
    c.source.mean_pairs_per_pulse = mu;
    c.source.mode_count = 1.8;
    c.channels.transmission1 = eta1;
    c.channels.transmission2 = eta2;
    c.channels.dark_rate_hz1 = dark1;
    c.channels.dark_rate_hz2 = dark2;
    c.channels.rep_rate_hz = 80.0e6;
    c.channels.coincidence_window_ps = 2560;
    c.detectors.jitter_sigma_ps = 100.0;
    c.geometry = mc::GeometryCar{};
    c.pulse_count = static_cast<std::int64_t>(seconds * 80.0e6);
    c.seed = seed;
    const auto [s1, s2] = mc::simulate(c);
    const auto h = tt::coincidence_histogram(s1, s2, 256, 256 * 1030);
    return tt::car_from_histogram(h, 12500, 2560, 20);
}

}  // namespace

TEST_CASE("simulated CAR matches the analytic model over a mu sweep") {
    // Photon-dominated singles (mu*eta well above the dark probability per
    // window), where the model's accidental term is exact.
    const double eta = 0.05, dark = 50.0;
    const double d = dark * 2560.0e-12;
    const double mus[] = {1.0e-4, 3.0e-4, 1.0e-3, 3.0e-3, 1.0e-2};
    const double seconds[] = {1200, 500, 200, 100, 50};
    for (int i = 0; i < 5; ++i) {
        const auto est = simulate_car(mus[i], eta, eta, dark, dark, seconds[i],
                                      9000 + i);
        const double model = physics::car_model(mus[i], eta, eta, d, d);
        CHECK(std::abs(est.car - model) < 3.0 * est.stat_uncertainty);
    }
}

TEST_CASE("dark-count-only run gives CAR of one") {
    // No photons: the zero-delay window holds nothing but accidentals.
    const auto est = simulate_car(0.0, 0.5, 0.5, 20000.0, 20000.0, 500.0, 9200);
    CHECK(std::abs(est.car - 1.0) < 3.0 * est.stat_uncertainty);
    CHECK(est.stat_uncertainty < 0.1);
}

TEST_CASE("dark-dominated singles inflate accidentals beyond the model") {
    // Dark counts are uniform in time rather than pulse-locked, so dark-dark
    // pairs land in a side window at rate D1*D2*Tw per unit time: the model's
    // d1*d2 term understates them by the duty-cycle factor 1/(Tw*R).
    const double eta1 = 8.0e-4, eta2 = 1.2e-3, mu = 2.0e-3;
    const double d1 = 600.0 * 2560.0e-12, d2 = 550.0 * 2560.0e-12;
    const double duty = 2560.0e-12 * 80.0e6;
    const auto est = simulate_car(mu, eta1, eta2, 600.0, 550.0, 6000.0, 9100);
    const double num = mu * eta1 * eta2;
    const double den = (mu * eta1 + d1) * (mu * eta2 + d2);
    const double corrected = num / (den + d1 * d2 * (1.0 / duty - 1.0)) + 1.0;
    const double model = physics::car_model(mu, eta1, eta2, d1, d2);
    CHECK(std::abs(est.car - corrected) < 3.0 * est.stat_uncertainty);
    CHECK(model - est.car > 5.0 * est.stat_uncertainty);
}

TEST_CASE("hbt geometry: thermal bunching raises same-pulse coincidences") {
    auto c = base_config();
    c.geometry = mc::GeometryHbt{};
    c.source.mean_pairs_per_pulse = 0.2;
    c.source.mode_count = 1.0;
    c.channels.transmission1 = 0.3;
    c.channels.transmission2 = 0.3;
    c.pulse_count = 4000000;
    const auto [s1, s2] = mc::simulate(c);
    const auto cc = tt::coincidences_in_window(s1, s2, 4096);
    // E[k1*k2] per pulse = q1*q2*mu^2*(1 + 1/M) with q = eta/2
    const double expect = 0.15 * 0.15 * 0.04 * 2.0 * 4.0e6;
    CHECK(std::abs(static_cast<double>(cc) - expect) < 5.0 * std::sqrt(expect));
}

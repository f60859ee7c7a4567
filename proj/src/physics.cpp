#include "spdclab/physics.hpp"

#include <cmath>
#include <stdexcept>

namespace spdclab::physics {

namespace {
void require(bool ok, const char* msg) {
    if (!ok) throw std::invalid_argument(msg);
}
}  // namespace

void validate(const GainParams& g) {
    require(g.alpha >= 0.0, "gain: alpha must be >= 0");
    require(g.gamma_per_sqrt_mw >= 0.0, "gain: gamma must be >= 0");
    require(g.pump_power_mw >= 0.0, "gain: pump power must be >= 0");
}

void validate(const PairSourceModel& s) {
    require(s.mean_pairs_per_pulse >= 0.0, "source: mean pairs per pulse must be >= 0");
    require(s.mode_count >= 1.0, "source: mode count must be >= 1");
    require(s.state_visibility >= 0.0 && s.state_visibility <= 1.0,
            "source: state visibility must be in [0,1]");
}

void validate(const ChannelParams& c) {
    require(c.transmission1 >= 0.0 && c.transmission1 <= 1.0,
            "channels: transmission1 must be in [0,1]");
    require(c.transmission2 >= 0.0 && c.transmission2 <= 1.0,
            "channels: transmission2 must be in [0,1]");
    require(c.dark_rate_hz1 >= 0.0 && c.dark_rate_hz2 >= 0.0,
            "channels: dark rates must be >= 0");
    require(c.rep_rate_hz > 0.0, "channels: rep rate must be > 0");
    require(c.coincidence_window_ps > 0, "channels: coincidence window must be > 0");
    require(static_cast<double>(c.coincidence_window_ps) < 1.0e12 / c.rep_rate_hz,
            "channels: coincidence window must be shorter than the pulse period");
}

void validate(const HomProfileParams& p) {
    require(p.baseline > 0.0, "hom profile: baseline must be > 0");
    require(p.visibility >= 0.0 && p.visibility <= 1.0,
            "hom profile: visibility must be in [0,1]");
    require(p.sinc_width_s > 0.0, "hom profile: sinc width must be > 0");
    require(p.gauss_width_s > 0.0, "hom profile: gauss width must be > 0");
}

double spdc_power(const GainParams& g) {
    validate(g);
    const double s = std::sinh(g.gamma_per_sqrt_mw * std::sqrt(g.pump_power_mw));
    return g.alpha * s * s;
}

double spdc_efficiency_lowpower(const GainParams& g) {
    validate(g);
    const double g2 = g.gamma_per_sqrt_mw * g.gamma_per_sqrt_mw;
    return g.alpha * g2 + g.alpha * g2 * g2 * g.pump_power_mw / 3.0;
}

PairCountDistribution::PairCountDistribution(double mean_pairs, double mode_count)
    : mu_(mean_pairs), modes_(mode_count) {
    require(mu_ >= 0.0, "pair distribution: mean must be >= 0");
    require(modes_ >= 1.0, "pair distribution: mode count must be >= 1");
    if (mu_ == 0.0) {
        p0_ = 1.0;
        p_ = 0.0;
    } else if (std::isinf(modes_)) {
        p0_ = std::exp(-mu_);
        p_ = 0.0;
    } else {
        // (M / (M + mu))^M, evaluated in log space for large M.
        p0_ = std::exp(-modes_ * std::log1p(mu_ / modes_));
        p_ = mu_ / (mu_ + modes_);
    }
}

double PairCountDistribution::variance() const {
    if (std::isinf(modes_)) return mu_;
    return mu_ * (1.0 + mu_ / modes_);
}

double PairCountDistribution::pmf_ratio(std::uint64_t n) const {
    const double dn = static_cast<double>(n);
    if (std::isinf(modes_)) return mu_ / (dn + 1.0);
    return p_ * (modes_ + dn) / (dn + 1.0);
}

double PairCountDistribution::pmf(std::uint64_t n) const {
    double p = p0_;
    for (std::uint64_t k = 0; k < n; ++k) p *= pmf_ratio(k);
    return p;
}

std::array<double, 4> singlet_outcome_probs(double theta_a, double theta_b,
                                            double v_state) {
    require(v_state >= 0.0 && v_state <= 1.0, "state visibility must be in [0,1]");
    const double c = v_state * std::cos(2.0 * (theta_a - theta_b));
    const double anti = 0.25 * (1.0 - c);  // ++ and --
    const double corr = 0.25 * (1.0 + c);  // +- and -+
    return {anti, corr, corr, anti};
}

double car_model(double mu, double eta1, double eta2, double d1, double d2) {
    require(mu >= 0.0 && eta1 >= 0.0 && eta2 >= 0.0 && d1 >= 0.0 && d2 >= 0.0,
            "car model: all arguments must be >= 0");
    if (d1 == 0.0 && d2 == 0.0) {
        // Dark-free case reduces algebraically to 1 + 1/mu.
        require(mu > 0.0 && eta1 > 0.0 && eta2 > 0.0,
                "car model: accidental probability is zero");
        return 1.0 + 1.0 / mu;
    }
    const double acc1 = mu * eta1 + d1;
    const double acc2 = mu * eta2 + d2;
    require(acc1 > 0.0 && acc2 > 0.0, "car model: accidental probability is zero");
    return mu * eta1 * eta2 / (acc1 * acc2) + 1.0;
}

double g2_from_modes(double modes) {
    require(modes >= 1.0, "g2: mode count must be >= 1");
    return 1.0 + 1.0 / modes;
}

double modes_from_g2(double g2) {
    require(g2 > 1.0, "modes: g2 <= 1 implies an unbounded mode count");
    require(g2 <= 2.0, "modes: g2 > 2 implies fewer than one mode");
    return 1.0 / (g2 - 1.0);
}

double mode_count_estimate(double filter_bandwidth_nm, double pump_bandwidth_nm) {
    require(filter_bandwidth_nm > 0.0 && pump_bandwidth_nm > 0.0,
            "mode count estimate: bandwidths must be > 0");
    const double ratio = filter_bandwidth_nm / pump_bandwidth_nm;
    return ratio < 1.0 ? 1.0 : ratio;
}

double sinc(double x) {
    if (std::abs(x) < 1.0e-8) return 1.0 - x * x / 6.0;
    return std::sin(x) / x;
}

double hom_profile(double tau_s, const HomProfileParams& p) {
    validate(p);
    const double d = tau_s - p.center_s;
    const double pi = 3.14159265358979323846;
    const double env = sinc(pi * d / p.sinc_width_s) *
                       std::exp(-d * d / (2.0 * p.gauss_width_s * p.gauss_width_s));
    return p.baseline * (1.0 - p.visibility * env);
}

}  // namespace spdclab::physics

// Closed-form physics of a pulsed SPDC pair source: gain law, pair-number
// statistics, polarization projection probabilities, the CAR model, the HOM
// dip profile, and the g2/mode-number relation. Everything here is a pure
// function of its arguments; sampling lives in montecarlo.

#pragma once

#include <array>
#include <cstdint>
#include <limits>

namespace spdclab::physics {

// Parameters of the down-conversion gain law P_spdc = alpha * sinh^2(gamma * sqrt(P_p)).
struct GainParams {
    double alpha = 0.0;              // dimensionless loss coefficient
    double gamma_per_sqrt_mw = 0.0;  // gain coefficient, 1/sqrt(mW)
    double pump_power_mw = 0.0;
};

// Pair-emission statistics and polarization state of the source.
enum class Polarization { Type0Correlated, Type2Singlet };

struct PairSourceModel {
    double mean_pairs_per_pulse = 0.0;  // mu
    double mode_count = 1.0;            // M >= 1; may be +inf for Poisson light
    Polarization polarization = Polarization::Type0Correlated;
    double state_visibility = 1.0;      // Werner weight of the singlet, in [0,1]
};

// Per-channel efficiencies and timing of the detection chain. Transmissions
// are the total channel efficiencies (filters, coupling, fiber and detector
// folded into one number).
struct ChannelParams {
    double transmission1 = 1.0;
    double transmission2 = 1.0;
    double dark_rate_hz1 = 0.0;
    double dark_rate_hz2 = 0.0;
    double rep_rate_hz = 80.0e6;
    std::int64_t coincidence_window_ps = 2560;
};

// Shape of the two-photon interference dip: an inverted sinc weighted by a
// Gaussian, riding on a flat baseline.
struct HomProfileParams {
    double baseline = 1.0;      // counts
    double visibility = 0.0;    // in [0,1]
    double sinc_width_s = 1.0;  // first-zero scale of the sinc
    double gauss_width_s = 1.0;
    double center_s = 0.0;
};

void validate(const GainParams& g);
void validate(const PairSourceModel& s);
void validate(const ChannelParams& c);
void validate(const HomProfileParams& p);

// alpha * sinh^2(gamma * sqrt(P_p)).
double spdc_power(const GainParams& g);

// Low-power expansion of spdc_power / P_p: alpha*gamma^2 + alpha*gamma^4*P_p/3.
double spdc_efficiency_lowpower(const GainParams& g);

// Pair-number distribution per pulse: M thermal modes of equal mean occupancy
// give a negative binomial with shape M and mean mu (geometric/Bose-Einstein
// at M = 1, Poisson as M -> inf). Real-valued M >= 1 is supported through the
// gamma-mixture form.
class PairCountDistribution {
  public:
    PairCountDistribution(double mean_pairs, double mode_count);

    double pmf(std::uint64_t n) const;
    double mean() const { return mu_; }
    double variance() const;
    double prob_zero() const { return p0_; }
    // pmf(n + 1) / pmf(n); the basis of inverse-CDF sampling.
    double pmf_ratio(std::uint64_t n) const;

  private:
    double mu_;
    double modes_;
    double p0_;
    double p_;  // mu / (mu + M); 0 for the Poisson limit
};

// Joint outcome probabilities {P(++), P(+-), P(-+), P(--)} for polarizers at
// angles theta_a, theta_b on a Werner state: singlet of weight v_state mixed
// with white noise. "+" means the photon passes its polarizer.
std::array<double, 4> singlet_outcome_probs(double theta_a, double theta_b,
                                            double v_state);

// CAR = mu*eta1*eta2 / ((mu*eta1 + d1)(mu*eta2 + d2)) + 1, with d_i the dark
// probabilities per coincidence window.
double car_model(double mu, double eta1, double eta2, double d1, double d2);

// g2(0) = 1 + 1/M for M-mode thermal light, and its inverse.
double g2_from_modes(double modes);
double modes_from_g2(double g2);

// M ~ filter bandwidth / pump bandwidth, clamped below at 1.
double mode_count_estimate(double filter_bandwidth_nm, double pump_bandwidth_nm);

// Expected coincidence counts of the HOM scan at relative delay tau:
// B * [1 - V * sinc(pi(tau-t0)/tau_s) * exp(-(tau-t0)^2 / (2*tau_g^2))].
double hom_profile(double tau_s, const HomProfileParams& p);

// sin(x)/x with sinc(0) = 1.
double sinc(double x);

}  // namespace spdclab::physics

// Statistical estimation: SPDC gain fit, CAR-curve fit with a free coupling
// factor, HOM-dip fit with fitted and conservative visibilities, CHSH S with
// analytic Poisson error propagation, g2/mode-number estimation, and the
// optimal-angle search.

#pragma once

#include <array>
#include <cstdint>
#include <span>

#include "spdclab/fit.hpp"

namespace spdclab::est {

// Coincidence counts of a CHSH run. Setting index 0..3 on each arm means
// {base angle, base + pi/2, primed angle, primed + pi/2}; counts[i][j] pairs
// the analyzer-a index i with the analyzer-b index j.
struct BellCounts {
    double theta_a_rad = 0.0;
    double theta_a_prime_rad = 0.0;
    double theta_b_rad = 0.0;
    double theta_b_prime_rad = 0.0;
    std::array<std::array<std::uint64_t, 4>, 4> counts{};

    // Analyzer angle of setting index i on each arm.
    double angle_a(int i) const;
    double angle_b(int j) const;
};

struct ChshResult {
    double S = 0.0;
    double sigma_S = 0.0;
    std::array<double, 4> E{};  // E(a,b), E(a,b'), E(a',b), E(a',b')
    double visibility_equiv = 0.0;  // S / (2*sqrt(2))
    bool zero_count_cells = false;  // sigma used the one-count rule somewhere
};

// S = E(a,b) - E(a,b') + E(a',b) + E(a',b'), each E the normalized four-count
// correlation ratio. Includes sigma_S from chsh_sigma.
ChshResult chsh_S(const BellCounts& counts);

// Poisson propagation: sigma_S^2 = sum_j (sqrt(C_j) * dS/dC_j)^2 through the
// analytic partial derivatives of the E ratios. Cells with C_j = 0 use
// sigma_Cj = 1 (one-count rule).
double chsh_sigma(const BellCounts& counts);

// (C_max - C_min) / (C_max + C_min).
double visibility(double c_max, double c_min);

struct G2Estimate {
    double g2 = 0.0;
    double modes = 0.0;
    bool modes_infinite = false;   // g2 <= 1
    bool modes_below_one = false;  // g2 > 2
};

// g2(0) = (coincidences/pulses) / ((singles1/pulses) * (singles2/pulses)),
// and M = 1/(g2 - 1) where that is in range.
G2Estimate g2_zero_estimate(std::uint64_t singles1, std::uint64_t singles2,
                            std::uint64_t coincidences, std::uint64_t pulses);

struct ChshAngles {
    double theta_a = 0.0;
    double theta_a_prime = 0.0;
    double theta_b = 0.0;
    double theta_b_prime = 0.0;
    double s_max = 0.0;  // |S| at the returned angles
};

// Maximize |S| over the analyzer angles for a Werner state of the given
// visibility: 1-degree grid (theta_a pinned at 0 by rotation invariance)
// followed by coordinate-wise parabolic refinement.
ChshAngles optimal_chsh_angles(double v_state);

// Weighted fit of (pump power, SPDC power) data to alpha*sinh^2(gamma*sqrt(P)).
// Initialization follows the low-power expansion: a linear fit of efficiency
// vs power gives intercept alpha*gamma^2 and slope alpha*gamma^4/3.
fit::FitReport fit_spdc_power(std::span<const fit::DataPoint> data);

struct CarFitKnowns {
    double eta1 = 0.0;
    double eta2_base = 0.0;  // measured channel-2 efficiency
    double d1 = 0.0;
    double d2 = 0.0;
};

// One-parameter fit of (mu, CAR) data to the CAR model with channel-2
// efficiency = ratio * eta2_base; reports the fitted ratio ("coupling_ratio").
fit::FitReport fit_car_curve(std::span<const fit::DataPoint> data,
                             const CarFitKnowns& knowns);

struct HomFit {
    fit::FitReport report;  // baseline, visibility, sinc_width, gauss_width, center
    double fitted_visibility = 0.0;
    // 1 - (lowest raw point) / (fitted baseline): bounded by the data rather
    // than the interpolated dip minimum.
    double conservative_visibility = 0.0;
};

// Fit (delay, coincidences) data to the sinc-weighted-Gaussian dip profile.
HomFit fit_hom_dip(std::span<const fit::DataPoint> data);

}  // namespace spdclab::est

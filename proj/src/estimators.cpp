#include "spdclab/estimators.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <vector>

#include "spdclab/physics.hpp"

namespace spdclab::est {

namespace {

constexpr double kPi = 3.14159265358979323846;
constexpr double kHalfPi = kPi / 2.0;

void require(bool ok, const std::string& msg) {
    if (!ok) throw std::invalid_argument(msg);
}

// Family signs of S = E(a,b) - E(a,b') + E(a',b) + E(a',b').
constexpr double kFamilySign[2][2] = {{1.0, -1.0}, {1.0, 1.0}};

const char* family_name(int x, int y) {
    static const char* names[2][2] = {{"(a,b)", "(a,b')"}, {"(a',b)", "(a',b')"}};
    return names[x][y];
}

}  // namespace

double BellCounts::angle_a(int i) const {
    const double base = (i < 2) ? theta_a_rad : theta_a_prime_rad;
    return base + ((i % 2) ? kHalfPi : 0.0);
}

double BellCounts::angle_b(int j) const {
    const double base = (j < 2) ? theta_b_rad : theta_b_prime_rad;
    return base + ((j % 2) ? kHalfPi : 0.0);
}

ChshResult chsh_S(const BellCounts& counts) {
    ChshResult result;
    int e_index = 0;
    for (int x = 0; x < 2; ++x) {
        for (int y = 0; y < 2; ++y) {
            const double c00 = static_cast<double>(counts.counts[2 * x][2 * y]);
            const double c11 = static_cast<double>(counts.counts[2 * x + 1][2 * y + 1]);
            const double c10 = static_cast<double>(counts.counts[2 * x + 1][2 * y]);
            const double c01 = static_cast<double>(counts.counts[2 * x][2 * y + 1]);
            const double total = c00 + c11 + c10 + c01;
            if (total <= 0.0)
                throw std::invalid_argument(std::string("chsh: zero total counts in family ") +
                                            family_name(x, y));
            const double e = (c00 + c11 - c10 - c01) / total;
            // E order: (a,b), (a,b'), (a',b), (a',b')
            const int slot = 2 * x + y;
            result.E[slot] = e;
            result.S += kFamilySign[x][y] * e;
            ++e_index;
        }
    }
    (void)e_index;
    result.sigma_S = chsh_sigma(counts);
    for (int i = 0; i < 4; ++i)
        for (int j = 0; j < 4; ++j)
            if (counts.counts[i][j] == 0) result.zero_count_cells = true;
    result.visibility_equiv = result.S / (2.0 * std::sqrt(2.0));
    return result;
}

double chsh_sigma(const BellCounts& counts) {
    double var = 0.0;
    for (int x = 0; x < 2; ++x) {
        for (int y = 0; y < 2; ++y) {
            const double c00 = static_cast<double>(counts.counts[2 * x][2 * y]);
            const double c11 = static_cast<double>(counts.counts[2 * x + 1][2 * y + 1]);
            const double c10 = static_cast<double>(counts.counts[2 * x + 1][2 * y]);
            const double c01 = static_cast<double>(counts.counts[2 * x][2 * y + 1]);
            const double total = c00 + c11 + c10 + c01;
            if (total <= 0.0)
                throw std::invalid_argument(std::string("chsh: zero total counts in family ") +
                                            family_name(x, y));
            const double numer = c00 + c11 - c10 - c01;
            const double fs = kFamilySign[x][y];
            // dE/dC = (sign * total - numer) / total^2 with sign the cell's
            // place in the numerator; sigma_C = sqrt(C), or 1 for C = 0.
            const double cells[4] = {c00, c11, c10, c01};
            const double signs[4] = {1.0, 1.0, -1.0, -1.0};
            for (int k = 0; k < 4; ++k) {
                const double deriv = fs * (signs[k] * total - numer) / (total * total);
                const double sigma_c = cells[k] > 0.0 ? std::sqrt(cells[k]) : 1.0;
                var += sigma_c * sigma_c * deriv * deriv;
            }
        }
    }
    return std::sqrt(var);
}

double visibility(double c_max, double c_min) {
    require(c_min >= 0.0, "visibility: counts must be >= 0");
    require(c_max >= c_min, "visibility: c_max must be >= c_min");
    require(c_max > 0.0, "visibility: c_max must be > 0");
    return (c_max - c_min) / (c_max + c_min);
}

G2Estimate g2_zero_estimate(std::uint64_t singles1, std::uint64_t singles2,
                            std::uint64_t coincidences, std::uint64_t pulses) {
    require(pulses > 0, "g2: pulse count must be > 0");
    require(singles1 > 0 && singles2 > 0, "g2: singles counts must be > 0");
    G2Estimate est;
    est.g2 = static_cast<double>(coincidences) * static_cast<double>(pulses) /
             (static_cast<double>(singles1) * static_cast<double>(singles2));
    if (est.g2 <= 1.0) {
        est.modes_infinite = true;
        est.modes = std::numeric_limits<double>::infinity();
    } else if (est.g2 > 2.0) {
        est.modes_below_one = true;
        est.modes = 1.0 / (est.g2 - 1.0);
    } else {
        est.modes = physics::modes_from_g2(est.g2);
    }
    return est;
}

namespace {

// S for a Werner state at theta_a = 0; E(x, y) = -V cos 2(x - y).
double werner_s(double v, double ap, double b, double bp) {
    const auto e = [v](double x, double y) { return -v * std::cos(2.0 * (x - y)); };
    return e(0.0, b) - e(0.0, bp) + e(ap, b) + e(ap, bp);
}

}  // namespace

ChshAngles optimal_chsh_angles(double v_state) {
    require(v_state > 0.0 && v_state <= 1.0, "angles: visibility must be in (0,1]");

    // Coarse 1-degree grid over [0, pi); theta_a pinned at 0 by rotation
    // invariance of the outcome probabilities.
    const double step = kPi / 180.0;
    double best[3] = {0.0, 0.0, 0.0};
    double best_abs = -1.0;
    for (int i = 0; i < 180; ++i) {
        const double ap = i * step;
        for (int j = 0; j < 180; ++j) {
            const double b = j * step;
            for (int k = 0; k < 180; ++k) {
                const double bp = k * step;
                const double s = std::abs(werner_s(v_state, ap, b, bp));
                if (s > best_abs) {
                    best_abs = s;
                    best[0] = ap;
                    best[1] = b;
                    best[2] = bp;
                }
            }
        }
    }

    // Coordinate-wise golden-section refinement around the grid optimum.
    const double gr = 0.6180339887498949;
    for (int sweep = 0; sweep < 12; ++sweep) {
        for (int c = 0; c < 3; ++c) {
            double lo = best[c] - 2.0 * step;
            double hi = best[c] + 2.0 * step;
            const auto eval = [&](double v) {
                double args[3] = {best[0], best[1], best[2]};
                args[c] = v;
                return std::abs(werner_s(v_state, args[0], args[1], args[2]));
            };
            double x1 = hi - gr * (hi - lo);
            double x2 = lo + gr * (hi - lo);
            double f1 = eval(x1), f2 = eval(x2);
            while (hi - lo > 1.0e-12) {
                if (f1 < f2) {
                    lo = x1;
                    x1 = x2;
                    f1 = f2;
                    x2 = lo + gr * (hi - lo);
                    f2 = eval(x2);
                } else {
                    hi = x2;
                    x2 = x1;
                    f2 = f1;
                    x1 = hi - gr * (hi - lo);
                    f1 = eval(x1);
                }
            }
            best[c] = 0.5 * (lo + hi);
        }
    }

    ChshAngles out;
    out.theta_a = 0.0;
    out.theta_a_prime = best[0];
    out.theta_b = best[1];
    out.theta_b_prime = best[2];
    out.s_max = std::abs(werner_s(v_state, best[0], best[1], best[2]));
    return out;
}

fit::FitReport fit_spdc_power(std::span<const fit::DataPoint> data) {
    require(data.size() >= 3, "gain fit: need at least 3 points");
    std::vector<double> distinct;
    for (const auto& d : data) {
        require(d.x > 0.0, "gain fit: pump powers must be > 0");
        if (std::find(distinct.begin(), distinct.end(), d.x) == distinct.end())
            distinct.push_back(d.x);
    }
    require(distinct.size() >= 3, "gain fit: need at least 3 distinct pump powers");

    // Low-power expansion of the efficiency y/P = alpha*gamma^2 (intercept)
    // + alpha*gamma^4/3 * P (slope) seeds the nonlinear fit.
    double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
    const double n = static_cast<double>(data.size());
    for (const auto& d : data) {
        const double e = d.y / d.x;
        sx += d.x;
        sy += e;
        sxx += d.x * d.x;
        sxy += d.x * e;
    }
    const double denom = n * sxx - sx * sx;
    double intercept = (sxx * sy - sx * sxy) / denom;
    double slope = (n * sxy - sx * sy) / denom;
    if (!(intercept > 0.0)) intercept = std::max(sy / n, 1.0e-300);
    if (!(slope > 0.0)) slope = intercept * 1.0e-3 / (sxx / n);
    double gamma0 = std::sqrt(3.0 * slope / intercept);
    // keep sinh(gamma*sqrt(P)) representable at every data point
    const double max_sqrt_p = std::sqrt(
        std::max_element(data.begin(), data.end(), [](const auto& a, const auto& b) {
            return a.x < b.x;
        })->x);
    if (gamma0 * max_sqrt_p > 300.0) gamma0 = 300.0 / max_sqrt_p;
    const double alpha0 = intercept / (gamma0 * gamma0);

    const fit::Model model = [](double x, std::span<const double> p) {
        const double s = std::sinh(p[1] * std::sqrt(x));
        return p[0] * s * s;
    };
    const fit::Jacobian jac = [](double x, std::span<const double> p,
                                 std::span<double> out) {
        const double sq = std::sqrt(x);
        const double s = std::sinh(p[1] * sq);
        out[0] = s * s;
        out[1] = p[0] * std::sinh(2.0 * p[1] * sq) * sq;
    };

    // Second seed from the bright-regime asymptote sinh^2 ~ exp(2*gamma*sqrt(P))/4:
    // log y is linear in sqrt(P) over the upper half of the powers.
    std::vector<fit::DataPoint> sorted(data.begin(), data.end());
    std::sort(sorted.begin(), sorted.end(),
              [](const auto& a, const auto& b) { return a.x < b.x; });
    double alpha1 = 0.0, gamma1 = 0.0;
    {
        double lx = 0.0, ly = 0.0, lxx = 0.0, lxy = 0.0;
        int count = 0;
        for (std::size_t i = sorted.size() / 2; i < sorted.size(); ++i) {
            if (!(sorted[i].y > 0.0)) continue;
            const double sq = std::sqrt(sorted[i].x);
            const double logy = std::log(sorted[i].y);
            lx += sq;
            ly += logy;
            lxx += sq * sq;
            lxy += sq * logy;
            ++count;
        }
        if (count >= 2) {
            const double det = count * lxx - lx * lx;
            if (det != 0.0) {
                const double slope = (count * lxy - lx * ly) / det;
                const double inter = (lxx * ly - lx * lxy) / det;
                if (slope > 0.0) {
                    gamma1 = std::min(slope / 2.0, 300.0 / max_sqrt_p);
                    alpha1 = 4.0 * std::exp(inter);
                }
            }
        }
    }

    auto report = fit::fit_least_squares(data, model, jac, {"alpha", "gamma"},
                                         {alpha0, gamma0});
    if (gamma1 > 0.0 && alpha1 > 0.0) {
        auto alt = fit::fit_least_squares(data, model, jac, {"alpha", "gamma"},
                                          {alpha1, gamma1});
        if (alt.residual_norm < report.residual_norm) report = std::move(alt);
    }
    // sinh^2 is even in gamma; report the physical sign.
    report.values[1] = std::abs(report.values[1]);
    return report;
}

fit::FitReport fit_car_curve(std::span<const fit::DataPoint> data,
                             const CarFitKnowns& knowns) {
    require(data.size() >= 3, "car fit: need at least 3 points");
    std::vector<fit::DataPoint> sorted(data.begin(), data.end());
    std::sort(sorted.begin(), sorted.end(),
              [](const auto& a, const auto& b) { return a.x < b.x; });
    bool increasing = true, decreasing = true;
    for (std::size_t i = 1; i < sorted.size(); ++i) {
        if (sorted[i].y <= sorted[i - 1].y) increasing = false;
        if (sorted[i].y >= sorted[i - 1].y) decreasing = false;
    }
    if (increasing || decreasing)
        throw std::invalid_argument("car fit: monotone data, no resolvable peak");

    if (knowns.d1 == 0.0 && knowns.d2 == 0.0) {
        // CAR = 1 + 1/mu regardless of the coupling: nothing to fit.
        fit::FitReport degenerate;
        degenerate.names = {"coupling_ratio"};
        degenerate.values = {1.0};
        degenerate.sigmas = {0.0};
        degenerate.converged = false;
        degenerate.flags.push_back("coupling_unidentifiable_dark_free");
        return degenerate;
    }

    const fit::Model model = [knowns](double mu, std::span<const double> p) {
        return physics::car_model(mu, knowns.eta1, std::abs(p[0]) * knowns.eta2_base,
                                  knowns.d1, knowns.d2);
    };
    return fit::fit_least_squares(sorted, model, nullptr, {"coupling_ratio"}, {1.0});
}

HomFit fit_hom_dip(std::span<const fit::DataPoint> data) {
    require(data.size() >= 7, "hom fit: need at least 7 delay points");
    const auto [mn, mx] = std::minmax_element(
        data.begin(), data.end(),
        [](const auto& a, const auto& b) { return a.x < b.x; });
    require(mx->x > mn->x, "hom fit: all delays identical");
    const double span = mx->x - mn->x;

    const auto lowest = std::min_element(
        data.begin(), data.end(),
        [](const auto& a, const auto& b) { return a.y < b.y; });
    const double center0 = lowest->x;

    // Baseline from the third of the points farthest from the dip.
    std::vector<fit::DataPoint> by_distance(data.begin(), data.end());
    std::sort(by_distance.begin(), by_distance.end(),
              [center0](const auto& a, const auto& b) {
                  return std::abs(a.x - center0) > std::abs(b.x - center0);
              });
    double baseline0 = 0.0;
    const std::size_t outer = std::max<std::size_t>(2, by_distance.size() / 3);
    for (std::size_t i = 0; i < outer; ++i) baseline0 += by_distance[i].y;
    baseline0 /= static_cast<double>(outer);
    if (!(baseline0 > 0.0)) baseline0 = std::max(1.0, lowest->y);

    double vis0 = 1.0 - lowest->y / baseline0;
    vis0 = std::clamp(vis0, 0.0, 1.0);

    // Half-depth width of the dip region.
    const double threshold = baseline0 * (1.0 - 0.5 * vis0);
    double wlo = center0, whi = center0;
    for (const auto& d : data) {
        if (d.y < threshold) {
            wlo = std::min(wlo, d.x);
            whi = std::max(whi, d.x);
        }
    }
    double width = whi - wlo;
    if (width <= 0.0) width = span / 10.0;

    const fit::Model model = [](double x, std::span<const double> p) {
        const double baseline = p[0];
        const double sinc_w = std::abs(p[2]);
        const double gauss_w = std::abs(p[3]);
        if (baseline <= 0.0 || sinc_w <= 0.0 || gauss_w <= 0.0)
            return std::numeric_limits<double>::quiet_NaN();
        const double d = x - p[4];
        const double env = physics::sinc(kPi * d / sinc_w) *
                           std::exp(-d * d / (2.0 * gauss_w * gauss_w));
        return baseline * (1.0 - p[1] * env);
    };
    // d sinc(u)/du = (cos u - sinc u)/u, with the small-u series -u/3 + u^3/30.
    const auto sinc_prime = [](double u) {
        if (std::abs(u) < 1.0e-4) return -u / 3.0 + u * u * u / 30.0;
        return (std::cos(u) - physics::sinc(u)) / u;
    };
    const fit::Jacobian jacobian = [sinc_prime](double x, std::span<const double> p,
                                                std::span<double> out) {
        const double baseline = p[0], vis = p[1], center = p[4];
        const double sinc_w = std::abs(p[2]), gauss_w = std::abs(p[3]);
        const double d = x - center;
        const double u = kPi * d / sinc_w;
        const double g = std::exp(-d * d / (2.0 * gauss_w * gauss_w));
        const double sc = physics::sinc(u);
        const double env = sc * g;
        out[0] = 1.0 - vis * env;
        out[1] = -baseline * env;
        out[2] = baseline * vis * g * sinc_prime(u) * u / sinc_w *
                 (p[2] < 0.0 ? -1.0 : 1.0);
        out[3] = -baseline * vis * env * d * d / (gauss_w * gauss_w * gauss_w) *
                 (p[3] < 0.0 ? -1.0 : 1.0);
        out[4] = -baseline * vis *
                 (sinc_prime(u) * (-kPi / sinc_w) * g + env * d / (gauss_w * gauss_w));
    };

    // The sinc width has a flat direction at large values (the sinc factor
    // becomes constant over the scan), so seed the solver from the best of a
    // coarse width grid instead of a single guess.
    double sinc0 = width, gauss0 = width / 2.0, best_chi2 = -1.0;
    for (double sw : {0.5 * width, width, 2.0 * width, 4.0 * width}) {
        for (double gw : {0.25 * width, 0.5 * width, width, 2.0 * width}) {
            const std::vector<double> trial{baseline0, vis0, sw, gw, center0};
            double chi2 = 0.0;
            for (const auto& d : data) {
                const double r = (d.y - model(d.x, trial)) / d.sigma;
                chi2 += r * r;
            }
            if (best_chi2 < 0.0 || chi2 < best_chi2) {
                best_chi2 = chi2;
                sinc0 = sw;
                gauss0 = gw;
            }
        }
    }

    HomFit out;
    out.report = fit::fit_least_squares(
        data, model, jacobian,
        {"baseline", "visibility", "sinc_width", "gauss_width", "center"},
        {baseline0, vis0, sinc0, gauss0, center0});
    out.report.values[2] = std::abs(out.report.values[2]);
    out.report.values[3] = std::abs(out.report.values[3]);
    out.fitted_visibility = out.report.param("visibility");
    out.conservative_visibility = 1.0 - lowest->y / out.report.param("baseline");
    return out;
}

}  // namespace spdclab::est

#include "spdclab/fit.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace spdclab::fit {

namespace {

// Solve (A + lambda*I) x = b in place for a small SPD system via Cholesky.
// Returns false if the factorization breaks down.
bool solve_damped(std::vector<double> a, int n, double lambda,
                  std::vector<double> b, std::vector<double>& x) {
    for (int i = 0; i < n; ++i) a[i * n + i] += lambda;
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j <= i; ++j) {
            double sum = a[i * n + j];
            for (int k = 0; k < j; ++k) sum -= a[i * n + k] * a[j * n + k];
            if (i == j) {
                if (sum <= 0.0) return false;
                a[i * n + i] = std::sqrt(sum);
            } else {
                a[i * n + j] = sum / a[j * n + j];
            }
        }
    }
    for (int i = 0; i < n; ++i) {
        double sum = b[i];
        for (int k = 0; k < i; ++k) sum -= a[i * n + k] * b[k];
        b[i] = sum / a[i * n + i];
    }
    x.assign(n, 0.0);
    for (int i = n - 1; i >= 0; --i) {
        double sum = b[i];
        for (int k = i + 1; k < n; ++k) sum -= a[k * n + i] * x[k];
        x[i] = sum / a[i * n + i];
    }
    return true;
}

struct Linearization {
    std::vector<double> residual;  // weighted residuals (y - f)/sigma
    std::vector<double> jac;       // weighted Jacobian, row-major n_data x n_par
    double chi2 = 0.0;
    bool finite = true;
};

Linearization linearize(std::span<const DataPoint> data, const Model& model,
                        const Jacobian& jacobian, std::span<const double> p) {
    const int np = static_cast<int>(p.size());
    Linearization lin;
    lin.residual.resize(data.size());
    lin.jac.resize(data.size() * p.size());
    std::vector<double> row(p.size());
    std::vector<double> pw(p.begin(), p.end());
    for (std::size_t i = 0; i < data.size(); ++i) {
        const double w = 1.0 / data[i].sigma;
        const double f = model(data[i].x, p);
        lin.residual[i] = (data[i].y - f) * w;
        if (!std::isfinite(lin.residual[i])) lin.finite = false;
        lin.chi2 += lin.residual[i] * lin.residual[i];
        if (jacobian) {
            jacobian(data[i].x, p, row);
        } else {
            // central finite differences with a relative step
            for (int j = 0; j < np; ++j) {
                const double keep = pw[j];
                const double h =
                    1.0e-6 * std::abs(keep) + 1.0e-9 * (keep == 0.0 ? 1.0 : std::abs(keep));
                const double step = h > 0.0 ? h : 1.0e-9;
                pw[j] = keep + step;
                const double fp = model(data[i].x, pw);
                pw[j] = keep - step;
                const double fm = model(data[i].x, pw);
                pw[j] = keep;
                row[j] = (fp - fm) / (2.0 * step);
            }
        }
        for (int j = 0; j < np; ++j) {
            lin.jac[i * p.size() + j] = row[j] * w;
            if (!std::isfinite(row[j])) lin.finite = false;
        }
    }
    return lin;
}

// J^T J (column-scaled to a unit diagonal) and the scaled gradient J^T r.
// Column scaling keeps the Cholesky factorization healthy when parameters
// span many orders of magnitude.
struct NormalEquations {
    std::vector<double> a;      // scaled J^T J
    std::vector<double> g;      // scaled J^T r
    std::vector<double> scale;  // per-parameter column norms
    double gradient_inf = 0.0;  // ||scaled gradient||_inf
};

NormalEquations assemble(const Linearization& lin, int np) {
    NormalEquations ne;
    ne.a.assign(np * np, 0.0);
    ne.g.assign(np, 0.0);
    ne.scale.assign(np, 0.0);
    const std::size_t nd = lin.residual.size();
    for (std::size_t i = 0; i < nd; ++i) {
        for (int j = 0; j < np; ++j) {
            ne.g[j] += lin.jac[i * np + j] * lin.residual[i];
            for (int k = 0; k <= j; ++k)
                ne.a[j * np + k] += lin.jac[i * np + j] * lin.jac[i * np + k];
        }
    }
    for (int j = 0; j < np; ++j) ne.scale[j] = std::sqrt(std::max(ne.a[j * np + j], 0.0));
    for (int j = 0; j < np; ++j)
        if (ne.scale[j] == 0.0) ne.scale[j] = 1.0;
    for (int j = 0; j < np; ++j) {
        for (int k = 0; k <= j; ++k) {
            ne.a[j * np + k] /= ne.scale[j] * ne.scale[k];
            ne.a[k * np + j] = ne.a[j * np + k];
        }
        ne.g[j] /= ne.scale[j];
        ne.gradient_inf = std::max(ne.gradient_inf, std::abs(ne.g[j]));
    }
    return ne;
}

}  // namespace

double FitReport::param(const std::string& name) const {
    for (std::size_t i = 0; i < names.size(); ++i)
        if (names[i] == name) return values[i];
    throw std::out_of_range("fit report has no parameter named " + name);
}

FitReport fit_least_squares(std::span<const DataPoint> data, const Model& model,
                            const Jacobian& jacobian,
                            const std::vector<std::string>& names,
                            const std::vector<double>& initial,
                            const LmOptions& options) {
    const int np = static_cast<int>(initial.size());
    if (np == 0 || names.size() != initial.size())
        throw std::invalid_argument("fit: parameter names and initial values disagree");
    if (data.size() < initial.size())
        throw std::invalid_argument("fit: fewer data points than parameters");
    for (const auto& d : data)
        if (!(d.sigma > 0.0)) throw std::invalid_argument("fit: sigmas must be > 0");

    FitReport report;
    report.names = names;
    std::vector<double> p = initial;

    Linearization lin = linearize(data, model, jacobian, p);
    if (!lin.finite)
        throw std::invalid_argument("fit: model not finite at the initial guess");

    // First-order optimality on the column-scaled gradient |J^T r| / |J_col|,
    // which is in weighted-residual units and so scale-free in both the data
    // and the parameters.
    const auto scaled_gradient = [](double g) { return g; };

    double lambda = 1.0e-3;
    int iter = 0;
    for (; iter < options.max_iterations; ++iter) {
        const NormalEquations ne = assemble(lin, np);
        report.gradient_norm = scaled_gradient(ne.gradient_inf);
        if (report.gradient_norm < options.gradient_tol) {
            report.converged = true;
            break;
        }

        bool stepped = false;
        double step_scale = 0.0;
        while (lambda < 1.0e14) {
            std::vector<double> delta;
            if (solve_damped(ne.a, np, lambda, ne.g, delta)) {
                std::vector<double> trial(p);
                step_scale = 0.0;
                for (int j = 0; j < np; ++j) {
                    const double dj = delta[j] / ne.scale[j];
                    trial[j] += dj;
                    step_scale =
                        std::max(step_scale, std::abs(dj) / (std::abs(p[j]) + 1.0));
                }
                Linearization cand = linearize(data, model, jacobian, trial);
                if (cand.finite && cand.chi2 <= lin.chi2 * (1.0 + 1.0e-12)) {
                    p = std::move(trial);
                    lin = std::move(cand);
                    lambda = std::max(lambda * 0.3, 1.0e-14);
                    stepped = true;
                    break;
                }
            }
            lambda *= 4.0;
        }

        if (!stepped) {
            report.gradient_norm = scaled_gradient(assemble(lin, np).gradient_inf);
            report.converged = report.gradient_norm < options.gradient_tol;
            if (!report.converged) report.flags.push_back("no_descent_step");
            break;
        }
        if (step_scale < options.step_tol) {
            report.gradient_norm = scaled_gradient(assemble(lin, np).gradient_inf);
            report.converged = report.gradient_norm < options.gradient_tol;
            if (!report.converged) report.flags.push_back("stalled_small_step");
            break;
        }
    }
    if (iter == options.max_iterations) {
        report.gradient_norm = scaled_gradient(assemble(lin, np).gradient_inf);
        report.converged = report.gradient_norm < options.gradient_tol;
        if (!report.converged) report.flags.push_back("max_iterations");
    }

    report.iterations = iter;
    report.values = p;
    report.residual_norm = std::sqrt(lin.chi2);

    // Standard errors: residual-scaled inverse of the (scaled) normal matrix,
    // unscaled back into parameter units.
    report.sigmas.assign(np, 0.0);
    const NormalEquations ne = assemble(lin, np);
    bool ok = true;
    std::vector<double> inv(np * np, 0.0);
    for (int col = 0; col < np && ok; ++col) {
        std::vector<double> e(np, 0.0), x;
        e[col] = 1.0;
        ok = solve_damped(ne.a, np, 0.0, e, x);
        for (int row = 0; row < np && ok; ++row) inv[row * np + col] = x[row];
    }
    if (ok) {
        const double dof = static_cast<double>(lin.residual.size()) - np;
        const double scale = dof > 0.0 ? lin.chi2 / dof : 0.0;
        for (int j = 0; j < np; ++j)
            report.sigmas[j] = std::sqrt(std::max(0.0, inv[j * np + j] * scale)) /
                               ne.scale[j];
    } else {
        report.flags.push_back("singular_covariance");
    }
    return report;
}

}  // namespace spdclab::fit

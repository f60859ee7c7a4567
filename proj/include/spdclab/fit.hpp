// Damped least squares (Gauss-Newton with adaptive Marquardt damping) for the
// small curve-fit problems in this project. Parameter standard errors come
// from the residual-scaled inverse normal matrix.

#pragma once

#include <functional>
#include <span>
#include <string>
#include <vector>

namespace spdclab::fit {

struct DataPoint {
    double x = 0.0;
    double y = 0.0;
    double sigma = 1.0;  // standard deviation; weight is 1/sigma^2
};

struct FitReport {
    std::vector<std::string> names;
    std::vector<double> values;
    std::vector<double> sigmas;
    double residual_norm = 0.0;     // sqrt(weighted chi^2)
    double gradient_norm = 0.0;     // scaled first-order optimality at exit
    int iterations = 0;
    bool converged = false;
    std::vector<std::string> flags;

    double param(const std::string& name) const;
};

using Model = std::function<double(double x, std::span<const double> params)>;
// Fills dy/dp_i for all i at one x.
using Jacobian =
    std::function<void(double x, std::span<const double> params, std::span<double> out)>;

struct LmOptions {
    int max_iterations = 200;
    double gradient_tol = 1.0e-8;  // on the scaled gradient norm
    double step_tol = 1.0e-12;     // on the relative step norm
};

// Fit `model` to `data`, starting from `initial`. Pass a null Jacobian to use
// central finite differences.
FitReport fit_least_squares(std::span<const DataPoint> data, const Model& model,
                            const Jacobian& jacobian,
                            const std::vector<std::string>& names,
                            const std::vector<double>& initial,
                            const LmOptions& options = {});

}  // namespace spdclab::fit

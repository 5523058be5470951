#pragma once

#include <functional>
#include <string>
#include <vector>

#include <Eigen/Core>

namespace rgamlss {

struct TrustRegionOptions {
    double initial_radius = 1.0;
    int max_iterations = 200;
    /// Converged when ||g||_inf < grad_tol * (1 + |f|).
    double grad_tol = 1e-7;
    double min_radius = 1e-12;
    double max_radius = 1e4;
    double eta_low = 0.25;
    double eta_high = 0.75;
    double shrink = 0.5;
    double expand = 2.0;

    void validate() const;
};

struct FitReport {
    bool converged = false;
    int iterations = 0;
    int evaluations = 0;
    int rejected_steps = 0;
    double grad_norm = 0.0;
    /// Objective values at accepted iterates, starting with the initial point.
    std::vector<double> trace;
    /// Radius used for each proposed step and the step length.
    std::vector<double> radii;
    std::vector<double> step_norms;
    std::string message;
};

/// Maximizer of g'e + 1/2 e'He subject to ||e|| <= radius.
struct SubproblemSolution {
    Eigen::VectorXd step;
    /// Multiplier nu of (-H + nu I) e = g.
    double nu = 0.0;
    bool on_boundary = false;
    bool hard_case = false;
    /// Predicted increase of the quadratic model.
    double predicted = 0.0;
};

SubproblemSolution solve_subproblem(const Eigen::VectorXd& g, const Eigen::MatrixXd& H,
                                    double radius);

/// What the optimizer needs from an objective at a point: value, gradient
/// and Hessian of the function being maximized, or ok = false when the
/// function is not finite there.
struct LocalModel {
    bool ok = true;
    double value = 0.0;
    Eigen::VectorXd gradient;
    Eigen::MatrixXd hessian;
};

using LocalEvaluator = std::function<LocalModel(const Eigen::VectorXd&)>;

struct TrustRegionResult {
    Eigen::VectorXd x;
    LocalModel at_x;
    FitReport report;
};

/// Trust-region maximization. Throws ConvergenceError if the starting
/// point itself cannot be evaluated; non-convergence is reported in the
/// FitReport.
TrustRegionResult trust_region_maximize(const LocalEvaluator& f, const Eigen::VectorXd& x0,
                                        const TrustRegionOptions& opts = {});

}  // namespace rgamlss

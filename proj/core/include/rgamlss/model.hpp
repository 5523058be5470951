#pragma once

#include <limits>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "rgamlss/objective.hpp"
#include "rgamlss/trust_region.hpp"

namespace rgamlss {

/// Outcome of fitting delta (and possibly lambda).
struct FitResult {
    Eigen::VectorXd delta;
    Eigen::VectorXd lambda;
    double c = std::numeric_limits<double>::infinity();
    /// Inner optimizer and (for automatic selection) the lambda iteration both converged.
    bool converged = false;
    FitReport report;
    /// Order-2 state at delta.
    ObjectiveState state;
    std::string method = "fixed";
    int outer_iterations = 0;
    std::vector<Eigen::VectorXd> lambda_trace;
    /// Selection criterion at the returned lambda (grid search only).
    double criterion = std::numeric_limits<double>::quiet_NaN();
    std::vector<std::string> warnings;
};

/// Maximizes the penalized objective for fixed lambda, starting at delta0
/// (initial_coefficients when null).
FitResult fit_fixed_lambda(const Objective& objective, const Eigen::VectorXd& lambda,
                           const Eigen::VectorXd* delta0 = nullptr,
                           const TrustRegionOptions& opts = {});

}  // namespace rgamlss

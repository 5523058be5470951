#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "rgamlss/model.hpp"
#include "rgamlss/smoothing_selection.hpp"

namespace rgamlss {

struct MdpConfig {
    double target = 0.95;
    int B = 100;
    double c_lo = 0.5;
    double c_hi = 20.0;
    /// Bisection stops when |MDP - target| < mdp_tol or the bracket is narrower than width_tol.
    double mdp_tol = 0.005;
    double width_tol = 0.05;
    int max_expansions = 5;
    std::uint64_t seed = 20240607;

    void validate() const;
};

/// Median over B simulated responses (drawn at the fitted parameters, by
/// inversion with per-replicate seeds) of the mean robustness weight
/// rho_c'(l_i). No refitting takes place.
double mdp(const Objective& objective, const FitResult& fit, int B, std::uint64_t seed,
           std::vector<double>* per_replicate = nullptr);

struct TuneProbe {
    double c = 0.0;
    double mdp = 0.0;
    Eigen::VectorXd lambda;
    bool converged = false;
};

struct TuneResult {
    double c = 0.0;
    double mdp = 0.0;
    FitResult fit;
    /// Every probed (c, MDP) pair in evaluation order.
    std::vector<TuneProbe> trace;
    bool at_boundary = false;
    std::vector<std::string> warnings;
};

/// Refits the model for a given objective; `warm` is the previous probe's
/// fit (null on the first call).
using RefitFunction = std::function<FitResult(const Objective&, const FitResult* warm)>;

/// Default refit: EFS with warm starts.
RefitFunction efs_refit(const FitOptions& opts = {});

/// Searches c so that MDP(c) matches the target (bracket expansion, then
/// bisection). The rho of `objective` is replaced by the log-logistic rho
/// at each probed c.
TuneResult tune_c(const Objective& objective, const MdpConfig& config,
                  const RefitFunction& refit = efs_refit());

}  // namespace rgamlss

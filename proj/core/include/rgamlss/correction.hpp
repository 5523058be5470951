#pragma once

#include <Eigen/Core>

#include "rgamlss/families.hpp"
#include "rgamlss/quadrature.hpp"
#include "rgamlss/rho.hpp"

namespace rgamlss {

struct CorrectionOptions {
    /// Relative panel-agreement tolerance of the adaptive rule.
    double rel_tol = 1e-9;
    int max_panels = 4000;
    /// Continuous supports are integrated over [q(tail), q(1 - tail)].
    double tail_prob = 1e-10;
    /// Discrete supports: stop once the covered mass reaches 1 - mass_deficit
    /// and the last added term is below last_term.
    double mass_deficit = 1e-12;
    double last_term = 1e-14;
    long max_terms = 1'000'000;
};

/// b_i = int rho*(log f(y | theta)) dy and its derivatives. Derivative
/// entries are only filled up to the requested order.
struct CorrectionValue {
    double value = 0.0;
    Eigen::Vector3d grad = Eigen::Vector3d::Zero();
    Eigen::Matrix3d hess = Eigen::Matrix3d::Zero();
};

/// Evaluates the Fisher-consistency correction for one observation by
/// adaptive Gauss-Legendre quadrature (continuous supports, in log y for
/// positive supports) or a truncated sum grown outward from the mode
/// (discrete supports). Stateless; safe to share across threads.
class CorrectionIntegrator {
public:
    explicit CorrectionIntegrator(CorrectionOptions opts = {});

    [[nodiscard]] const CorrectionOptions& options() const { return opts_; }

    /// Derivatives with respect to the canonical parameters.
    [[nodiscard]] CorrectionValue in_params(const Family& family, const ParamVector& theta,
                                            const RhoFunction& rho, int order) const;

    /// Derivatives with respect to the linear predictors.
    [[nodiscard]] CorrectionValue in_predictors(const Family& family, const Eigen::Vector3d& eta,
                                                const RhoFunction& rho, int order) const;

    /// Integration range used for continuous supports (on the y scale).
    [[nodiscard]] std::pair<double, double> continuous_range(const Family& family,
                                                             const ParamVector& theta) const;

private:
    CorrectionValue continuous(const Family& family, const ParamVector& theta,
                               const RhoFunction& rho, int order) const;
    CorrectionValue discrete(const Family& family, const ParamVector& theta,
                             const RhoFunction& rho, int order) const;

    CorrectionOptions opts_;
    AdaptiveGaussLegendre quad_;
};

double correction_term(const Family& family, const Eigen::Vector3d& eta, const RhoFunction& rho,
                       const CorrectionIntegrator& integrator);
Eigen::Vector3d correction_gradient(const Family& family, const Eigen::Vector3d& eta,
                                    const RhoFunction& rho, const CorrectionIntegrator& integrator);
Eigen::Matrix3d correction_hessian(const Family& family, const Eigen::Vector3d& eta,
                                   const RhoFunction& rho, const CorrectionIntegrator& integrator);

}  // namespace rgamlss

#pragma once

#include <memory>
#include <string>

#include <Eigen/Core>

#include "rgamlss/correction.hpp"
#include "rgamlss/design.hpp"
#include "rgamlss/families.hpp"
#include "rgamlss/rho.hpp"

namespace rgamlss {

/// Penalized robustified log-likelihood at one coefficient vector.
struct ObjectiveState {
    /// False when the likelihood or the correction could not be evaluated
    /// (overflow, inadmissible parameters, quadrature failure).
    bool ok = true;
    std::string failure;
    int order = 0;

    /// sum_i rho(l_i) - sum_i b_i - 1/2 delta' S delta.
    double value = 0.0;
    /// sum_i rho(l_i) - sum_i b_i.
    double robust_loglik = 0.0;
    double penalty = 0.0;

    Eigen::VectorXd gradient;       ///< g_p (order >= 1)
    Eigen::MatrixXd hessian;        ///< H_p = H - S (order >= 2)
    Eigen::MatrixXd hessian_unpen;  ///< H, so that M = -H (order >= 2)

    Eigen::MatrixXd eta;      ///< n x n_params
    Eigen::VectorXd loglik;   ///< l_i
    Eigen::VectorXd weights;  ///< rho'(l_i)
    /// Per-observation score multipliers: psi_i restricted to parameter d is
    /// X_d.row(i) * u(i, d) (order >= 1).
    Eigen::MatrixXd u;
};

/// Assembles the objective for a response vector, a design, a family and a
/// rho function. Immutable; evaluation is deterministic.
class Objective {
public:
    Objective(std::shared_ptr<const ModelDesign> design, FamilyPtr family, RhoPtr rho,
              Eigen::VectorXd y, CorrectionOptions integrator = {}, int threads = 1);

    [[nodiscard]] ObjectiveState evaluate(const Eigen::VectorXd& delta,
                                          const Eigen::VectorXd& lambda, int order) const;

    /// n x p matrix whose rows are the per-observation score contributions
    /// psi_i; they sum to the unpenalized gradient.
    [[nodiscard]] Eigen::MatrixXd scores(const ObjectiveState& state) const;

    [[nodiscard]] const ModelDesign& design() const { return *design_; }
    [[nodiscard]] const std::shared_ptr<const ModelDesign>& design_ptr() const { return design_; }
    [[nodiscard]] const Family& family() const { return *family_; }
    [[nodiscard]] const FamilyPtr& family_ptr() const { return family_; }
    [[nodiscard]] const RhoFunction& rho() const { return *rho_; }
    [[nodiscard]] const RhoPtr& rho_ptr() const { return rho_; }
    [[nodiscard]] const Eigen::VectorXd& response() const { return y_; }
    [[nodiscard]] const CorrectionIntegrator& integrator() const { return integrator_; }
    [[nodiscard]] int threads() const { return threads_; }

    [[nodiscard]] Objective with_rho(RhoPtr rho) const;
    [[nodiscard]] Objective with_response(Eigen::VectorXd y) const;

private:
    std::shared_ptr<const ModelDesign> design_;
    FamilyPtr family_;
    RhoPtr rho_;
    Eigen::VectorXd y_;
    CorrectionIntegrator integrator_;
    int threads_ = 1;
};

/// Robustness weights w_i = rho'(l_i) of an evaluated state.
Eigen::VectorXd robustness_weights(const ObjectiveState& state);

/// Starting coefficients: intercepts at the linked moment estimates, smooth
/// coefficients zero.
Eigen::VectorXd initial_coefficients(const ModelDesign& design, const Family& family,
                                     const Eigen::VectorXd& y);

}  // namespace rgamlss

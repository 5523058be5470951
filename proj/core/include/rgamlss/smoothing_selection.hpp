#pragma once

#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Core>

#include "rgamlss/design.hpp"
#include "rgamlss/model.hpp"

namespace rgamlss {

/// lambda-independent range space of each penalized block, used for the
/// pseudo-determinant log|S|_+ and for tr(S^+ dS_j).
class PenaltyStructure {
public:
    explicit PenaltyStructure(const ModelDesign& design);

    [[nodiscard]] int rank() const { return rank_; }
    /// log|S(lambda)|_+ (all lambda_j > 0).
    [[nodiscard]] double log_det(const Eigen::VectorXd& lambda) const;
    /// tr(S(lambda)^+ dS/dlambda_j) for every j.
    [[nodiscard]] Eigen::VectorXd trace_inv_dS(const Eigen::VectorXd& lambda) const;
    /// S_b^+ D_k for smoothing parameter j, in the coordinates of its block.
    [[nodiscard]] Eigen::MatrixXd pinv_times_dS(const Eigen::VectorXd& lambda, int j) const;

private:
    struct Group {
        int first_lambda = 0;
        Eigen::MatrixXd range;
        /// U' D_k U for each penalty of the block.
        std::vector<Eigen::MatrixXd> reduced;
    };
    std::vector<Group> groups_;
    int n_lambda_ = 0;
    int rank_ = 0;
};

/// l_LA = l~(delta) - 1/2 delta'S delta + 1/2 log|S|_+ - 1/2 log|Mp|.
/// Throws ConditionViolation when Mp is not positive definite.
double laplace_marginal(double robust_loglik, const Eigen::VectorXd& delta,
                        const Eigen::VectorXd& lambda, const Eigen::MatrixXd& Mp,
                        const ModelDesign& design, const PenaltyStructure& penalties);
double laplace_marginal(const FitResult& fit, const ModelDesign& design,
                        const PenaltyStructure& penalties);

/// Derivative of l_LA in lambda_j with delta and Mp held fixed except for
/// their explicit S dependence.
Eigen::VectorXd laplace_lambda_gradient(const Eigen::VectorXd& delta, const Eigen::VectorXd& lambda,
                                        const Eigen::MatrixXd& Mp, const ModelDesign& design,
                                        const PenaltyStructure& penalties);

struct EfsOptions {
    int max_iterations = 100;
    /// Converged when max_j |log lambda_j^new - log lambda_j| < tol.
    double tol = 1e-4;
    double ratio_min = 0.1;
    double ratio_max = 10.0;
    double lambda_min = 1e-8;
    double lambda_max = 1e7;
    /// Upper bound of the adaptive exponent applied to the EFS ratio while
    /// successive updates keep moving lambda_j in the same direction (1 = plain EFS).
    double max_acceleration = 64.0;
};

struct EfsStep {
    Eigen::VectorXd lambda;
    Eigen::VectorXd numerator;
    Eigen::VectorXd denominator;
    Eigen::VectorXd ratio;
};

/// One extended Fellner-Schall update from the unpenalized negative Hessian
/// M (Mp = M + S). The numerator tr(S^+ dS_j) - tr(Mp^{-1} dS_j) is
/// evaluated as tr(Mp^{-1} M S^+ dS_j), which avoids cancellation at large
/// lambda. Throws ConditionViolation when a numerator is not positive (a
/// sign that M is not positive definite).
EfsStep efs_update(const Eigen::VectorXd& lambda, const Eigen::VectorXd& delta,
                   const Eigen::MatrixXd& M, const ModelDesign& design,
                   const PenaltyStructure& penalties, const EfsOptions& opts = {});

struct FitOptions {
    TrustRegionOptions trust_region;
    EfsOptions efs;
};

/// Alternates fit_fixed_lambda and efs_update.
FitResult fit_efs(const Objective& objective, const Eigen::VectorXd& lambda0,
                  const FitOptions& opts = {}, const Eigen::VectorXd* delta0 = nullptr);

enum class CriterionKind { RAIC, RBIC };

CriterionKind criterion_from_name(std::string_view name);
std::string criterion_name(CriterionKind kind);

struct CriterionValue {
    CriterionKind kind = CriterionKind::RAIC;
    double value = 0.0;
    /// tr((M + S)^{-1} Q), the edf.
    double trace = 0.0;
    double robust_loglik = 0.0;
};

CriterionValue raic(const Objective& objective, const FitResult& fit);
CriterionValue rbic(const Objective& objective, const FitResult& fit);
CriterionValue criterion(CriterionKind kind, const Objective& objective, const FitResult& fit);

/// Log-spaced lambda grid "lo:hi:n" (lambda values, lo < hi, n >= 2).
struct LambdaGrid {
    double lo = 1e-3;
    double hi = 1e6;
    int n = 19;

    static LambdaGrid parse(std::string_view text);
    [[nodiscard]] std::vector<double> values() const;
};

struct GridOptions {
    FitOptions fit;
    /// Golden-section refinement stops when the log-lambda bracket is below
    /// rel_tol * max(1, |log lambda|).
    double rel_tol = 1e-5;
};

/// Grid search over one or two smoothing parameters followed by
/// golden-section refinement on log lambda. Warns in FitResult::warnings
/// when the minimizer sits on the grid boundary.
FitResult grid_search(CriterionKind kind, const Objective& objective, const LambdaGrid& grid,
                      const GridOptions& opts = {});

}  // namespace rgamlss

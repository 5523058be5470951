#pragma once

#include <vector>

#include <Eigen/Core>

#include "rgamlss/model.hpp"

namespace rgamlss {

struct CovarianceBundle {
    Eigen::MatrixXd M;          ///< negative Hessian of the robust log-likelihood
    Eigen::MatrixXd Mp;         ///< M + S
    Eigen::MatrixXd Q;          ///< sum_i psi_i psi_i'
    Eigen::MatrixXd sandwich;   ///< Mp^{-1} Q Mp^{-T}
    Eigen::MatrixXd posterior;  ///< Mp^{-1}
    /// Diagonal of Mp^{-1} Q; its trace is the edf.
    Eigen::VectorXd edf_diag;
};

/// Throws ConditionViolation naming the smallest eigenvalue when Mp is not
/// positive definite.
CovarianceBundle covariances(const Objective& objective, const FitResult& fit);

struct EdfTable {
    double total = 0.0;
    /// One entry per distribution parameter.
    std::vector<double> per_param;
};

EdfTable edf(const Objective& objective, const FitResult& fit);
EdfTable edf(const ModelDesign& design, const CovarianceBundle& cov);

enum class CovarianceKind { Sandwich, Posterior };

struct IntervalBands {
    Eigen::MatrixXd eta;    ///< n x n_params
    Eigen::MatrixXd se;
    Eigen::MatrixXd lower;
    Eigen::MatrixXd upper;
};

/// eta_d(x) +/- z_{(1+level)/2} * sqrt(x_d' Cov_dd x_d) for each row of the
/// per-parameter design matrices.
IntervalBands pointwise_ci(const ModelDesign& design, const std::vector<Eigen::MatrixXd>& rows,
                           const Eigen::VectorXd& delta, const Eigen::MatrixXd& cov, double level);
IntervalBands pointwise_ci(const Objective& objective, const FitResult& fit, CovarianceKind kind,
                           double level);

}  // namespace rgamlss

#pragma once

#include <cmath>
#include <memory>
#include <random>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>

#include "rgamlss/smoothing_selection.hpp"

namespace rgamlss::test {

/// Gaussian regression with unit variance on a single smooth: the
/// log-likelihood is exactly quadratic in the coefficients.
struct Ridge {
    std::shared_ptr<const ModelDesign> design;
    Eigen::VectorXd y;
    Eigen::MatrixXd X;

    explicit Ridge(std::uint64_t seed, int n = 120, int k = 12, double noise = 1.0) {
        std::mt19937_64 rng(seed);
        std::uniform_real_distribution<double> u(0.0, 1.0);
        std::normal_distribution<double> z(0.0, noise);
        CovariateTable data;
        std::vector<double> x(static_cast<std::size_t>(n));
        y.resize(n);
        for (int i = 0; i < n; ++i) {
            x[static_cast<std::size_t>(i)] = u(rng);
            y[i] = 2.0 * std::sin(2.0 * M_PI * x[static_cast<std::size_t>(i)]) + z(rng);
        }
        data["x"] = x;
        SmoothSpec s;
        s.vars = {"x"};
        s.k = {k};
        design = std::make_shared<const ModelDesign>(ModelDesign::assemble({s}, data, 1));
        X = design->X(0);
    }

    [[nodiscard]] Eigen::MatrixXd M() const { return X.transpose() * X; }

    [[nodiscard]] Eigen::VectorXd delta(double lambda) const {
        const Eigen::MatrixXd Mp = M() + design->S(Eigen::VectorXd::Constant(1, lambda));
        return Mp.ldlt().solve(X.transpose() * y);
    }

    [[nodiscard]] double loglik(const Eigen::VectorXd& d) const {
        return -0.5 * (y - X * d).squaredNorm() - 0.5 * static_cast<double>(y.size()) * std::log(2.0 * M_PI);
    }

    [[nodiscard]] double laplace(double lambda, const PenaltyStructure& ps) const {
        const Eigen::VectorXd l = Eigen::VectorXd::Constant(1, lambda);
        const Eigen::VectorXd d = delta(lambda);
        return laplace_marginal(loglik(d), d, l, M() + design->S(l), *design, ps);
    }

    /// log of the marginal density of y with a flat prior on the penalty
    /// null space and N(0, Lambda^{-1}) on its range, minus (m/2) log(2 pi).
    [[nodiscard]] double exact_marginal(double lambda) const {
        const Eigen::MatrixXd S = design->S(Eigen::VectorXd::Constant(1, lambda));
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(S);
        const double tol = 1e-9 * es.eigenvalues().cwiseAbs().maxCoeff();
        std::vector<int> range;
        std::vector<int> null;
        for (Eigen::Index i = 0; i < S.rows(); ++i) {
            (es.eigenvalues()[i] > tol ? range : null).push_back(static_cast<int>(i));
        }
        const Eigen::MatrixXd R = es.eigenvectors()(Eigen::all, range);
        const Eigen::MatrixXd N = es.eigenvectors()(Eigen::all, null);
        const Eigen::VectorXd lam = es.eigenvalues()(range);
        const Eigen::Index n = y.size();
        const Eigen::MatrixXd XR = X * R;
        const Eigen::MatrixXd Sigma =
            Eigen::MatrixXd::Identity(n, n) + XR * lam.cwiseInverse().asDiagonal() * XR.transpose();
        const Eigen::MatrixXd A = X * N;
        const Eigen::LLT<Eigen::MatrixXd> ls(Sigma);
        const Eigen::MatrixXd SiA = ls.solve(A);
        const Eigen::VectorXd Siy = ls.solve(y);
        const Eigen::MatrixXd AtSiA = A.transpose() * SiA;
        const Eigen::VectorXd b = A.transpose() * Siy;
        const double quad = y.dot(Siy) - b.dot(AtSiA.ldlt().solve(b));
        const Eigen::MatrixXd L = ls.matrixL();
        const double logdet_sigma = 2.0 * L.diagonal().array().log().sum();
        const double logdet_a = std::log(AtSiA.determinant());
        const double m = static_cast<double>(null.size());
        return -0.5 * static_cast<double>(n) * std::log(2.0 * M_PI) - 0.5 * logdet_sigma - 0.5 * quad +
               0.5 * m * std::log(2.0 * M_PI) - 0.5 * logdet_a - 0.5 * m * std::log(2.0 * M_PI);
    }

    /// Plain iterated EFS on the quadratic problem; `path` receives every iterate.
    [[nodiscard]] double iterate_efs(double lambda0, const PenaltyStructure& ps,
                                     std::vector<double>* path = nullptr) const {
        Eigen::VectorXd l = Eigen::VectorXd::Constant(1, lambda0);
        EfsOptions opts;
        opts.max_acceleration = 1.0;
        for (int it = 0; it < 5000; ++it) {
            const EfsStep st = efs_update(l, delta(l[0]), M(), *design, ps, opts);
            if (path != nullptr) path->push_back(st.lambda[0]);
            const double change = std::abs(std::log(st.lambda[0] / l[0]));
            l = st.lambda;
            if (change < 1e-10) break;
        }
        return l[0];
    }
};

}  // namespace rgamlss::test

#include "rgamlss/inference.hpp"

#include <cmath>
#include <string>

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>
#include <boost/math/special_functions/erf.hpp>

#include "rgamlss/error.hpp"

namespace rgamlss {

CovarianceBundle covariances(const Objective& objective, const FitResult& fit) {
    const ModelDesign& md = objective.design();
    const ObjectiveState& st = fit.state;
    if (!st.ok || st.order < 2) throw InvalidArgument("covariances need an order-2 fitted state");
    CovarianceBundle cb;
    cb.M = -st.hessian_unpen;
    cb.Mp = -st.hessian;
    const Eigen::MatrixXd psi = objective.scores(st);
    cb.Q = psi.transpose() * psi;
    Eigen::LLT<Eigen::MatrixXd> llt(cb.Mp);
    if (llt.info() != Eigen::Success) {
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(cb.Mp, Eigen::EigenvaluesOnly);
        throw ConditionViolation("penalized information matrix is not positive definite (smallest eigenvalue " +
                                 std::to_string(es.eigenvalues()[0]) + ")");
    }
    const Eigen::Index p = md.n_coef();
    cb.posterior = llt.solve(Eigen::MatrixXd::Identity(p, p));
    cb.posterior = (0.5 * (cb.posterior + cb.posterior.transpose())).eval();
    const Eigen::MatrixXd a = llt.solve(cb.Q);
    cb.edf_diag = a.diagonal();
    cb.sandwich = a * cb.posterior;
    cb.sandwich = (0.5 * (cb.sandwich + cb.sandwich.transpose())).eval();
    return cb;
}

EdfTable edf(const ModelDesign& design, const CovarianceBundle& cov) {
    EdfTable t;
    t.total = cov.edf_diag.sum();
    for (int d = 0; d < design.n_params(); ++d) {
        t.per_param.push_back(cov.edf_diag.segment(design.param_offset(d), design.param_size(d)).sum());
    }
    return t;
}

EdfTable edf(const Objective& objective, const FitResult& fit) {
    return edf(objective.design(), covariances(objective, fit));
}

IntervalBands pointwise_ci(const ModelDesign& design, const std::vector<Eigen::MatrixXd>& rows,
                           const Eigen::VectorXd& delta, const Eigen::MatrixXd& cov, double level) {
    if (!(level > 0.0 && level < 1.0)) throw InvalidArgument("confidence level must lie in (0, 1)");
    const int np = design.n_params();
    if (static_cast<int>(rows.size()) != np) throw InvalidArgument("need one design matrix per parameter");
    const double z = std::sqrt(2.0) * boost::math::erf_inv(level);
    const Eigen::Index n = rows.front().rows();
    IntervalBands out;
    out.eta.resize(n, np);
    out.se.resize(n, np);
    for (int d = 0; d < np; ++d) {
        const int off = design.param_offset(d);
        const int sz = design.param_size(d);
        const Eigen::MatrixXd& x = rows[static_cast<std::size_t>(d)];
        out.eta.col(d) = x * delta.segment(off, sz);
        const Eigen::MatrixXd xc = x * cov.block(off, off, sz, sz);
        out.se.col(d) = (xc.array() * x.array()).rowwise().sum().max(0.0).sqrt();
    }
    out.lower = out.eta - z * out.se;
    out.upper = out.eta + z * out.se;
    return out;
}

IntervalBands pointwise_ci(const Objective& objective, const FitResult& fit, CovarianceKind kind,
                           double level) {
    const CovarianceBundle cb = covariances(objective, fit);
    const ModelDesign& md = objective.design();
    std::vector<Eigen::MatrixXd> rows;
    for (int d = 0; d < md.n_params(); ++d) rows.push_back(md.X(d));
    return pointwise_ci(md, rows, fit.delta,
                        kind == CovarianceKind::Sandwich ? cb.sandwich : cb.posterior, level);
}

}  // namespace rgamlss

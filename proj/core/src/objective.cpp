#include "rgamlss/objective.hpp"

#include <algorithm>
#include <cmath>
#include <thread>
#include <vector>

#include "rgamlss/error.hpp"

namespace rgamlss {

namespace {

struct ObsTerms {
    bool ok = true;
    std::string failure;
    double rho = 0.0;
    double b = 0.0;
    double loglik = 0.0;
    double weight = 0.0;
    Eigen::Vector3d u = Eigen::Vector3d::Zero();
    Eigen::Matrix3d w = Eigen::Matrix3d::Zero();
};

}  // namespace

Objective::Objective(std::shared_ptr<const ModelDesign> design, FamilyPtr family, RhoPtr rho,
                     Eigen::VectorXd y, CorrectionOptions integrator, int threads)
    : design_(std::move(design)),
      family_(std::move(family)),
      rho_(std::move(rho)),
      y_(std::move(y)),
      integrator_(integrator),
      threads_(std::max(1, threads)) {
    if (!design_ || !family_ || !rho_) throw InvalidArgument("objective needs design, family and rho");
    if (y_.size() != design_->n_obs()) {
        throw InvalidArgument("response length " + std::to_string(y_.size()) +
                              " does not match the design (" + std::to_string(design_->n_obs()) + ")");
    }
    if (design_->n_params() != family_->n_params()) {
        throw InvalidArgument("design parameter count does not match family " +
                              std::string(family_->code()));
    }
    for (Eigen::Index i = 0; i < y_.size(); ++i) {
        if (!family_->support().contains(y_[i])) {
            throw DomainError("response value " + std::to_string(y_[i]) + " at row " +
                              std::to_string(i) + " outside the support of " +
                              std::string(family_->code()));
        }
    }
}

Objective Objective::with_rho(RhoPtr rho) const {
    Objective o = *this;
    o.rho_ = std::move(rho);
    return o;
}

Objective Objective::with_response(Eigen::VectorXd y) const {
    return Objective(design_, family_, rho_, std::move(y), integrator_.options(), threads_);
}

ObjectiveState Objective::evaluate(const Eigen::VectorXd& delta, const Eigen::VectorXd& lambda,
                                   int order) const {
    const ModelDesign& md = *design_;
    const int n = md.n_obs();
    const int np = md.n_params();
    ObjectiveState st;
    st.order = order;
    if (delta.size() != md.n_coef()) throw InvalidArgument("coefficient vector has the wrong length");
    if (!delta.allFinite()) {
        st.ok = false;
        st.failure = "non-finite coefficients";
        return st;
    }
    st.eta = md.predictors(delta);

    std::vector<ObsTerms> terms(static_cast<std::size_t>(n));
    const int corr_order = order;
    auto work = [&](int begin, int end) {
        for (int i = begin; i < end; ++i) {
            ObsTerms& t = terms[static_cast<std::size_t>(i)];
            const Eigen::Vector3d eta = [&] {
                Eigen::Vector3d e = Eigen::Vector3d::Zero();
                for (int d = 0; d < np; ++d) e[d] = st.eta(i, d);
                return e;
            }();
            const LinkedParams lp = family_->linked(eta);
            if (!family_->admissible(lp.theta)) {
                t.ok = false;
                t.failure = "inadmissible parameters at row " + std::to_string(i);
                continue;
            }
            const double yi = y_[i];
            ParamDerivatives pd;
            family_->derivatives_batch(std::span<const double>(&yi, 1), lp.theta, order,
                                       std::span<ParamDerivatives>(&pd, 1));
            const PredictorDerivatives g = chain_to_predictors(pd, lp.jac, np, order);
            if (!std::isfinite(g.logf)) {
                t.ok = false;
                t.failure = "non-finite log-likelihood at row " + std::to_string(i);
                continue;
            }
            CorrectionValue cv;
            try {
                cv = integrator_.in_predictors(*family_, eta, *rho_, corr_order);
            } catch (const Error& e) {
                t.ok = false;
                t.failure = e.what();
                continue;
            }
            t.loglik = g.logf;
            t.rho = rho_->rho(g.logf);
            t.b = cv.value;
            t.weight = rho_->rho_prime(g.logf);
            if (order >= 1) t.u = t.weight * g.d1 - cv.grad;
            if (order >= 2) {
                const double r2 = rho_->rho_second(g.logf);
                t.w = r2 * g.d1 * g.d1.transpose() + t.weight * g.d2 - cv.hess;
            }
            if (!std::isfinite(t.rho) || !std::isfinite(t.b) || !t.u.allFinite() || !t.w.allFinite()) {
                t.ok = false;
                t.failure = "non-finite objective terms at row " + std::to_string(i);
            }
        }
    };
    const int nt = std::min(threads_, std::max(1, n / 16));
    if (nt <= 1) {
        work(0, n);
    } else {
        std::vector<std::thread> pool;
        for (int k = 0; k < nt; ++k) {
            pool.emplace_back(work, n * k / nt, n * (k + 1) / nt);
        }
        for (auto& th : pool) th.join();
    }

    st.loglik.resize(n);
    st.weights.resize(n);
    double sum_rho = 0.0;
    double sum_b = 0.0;
    for (int i = 0; i < n; ++i) {
        const ObsTerms& t = terms[static_cast<std::size_t>(i)];
        if (!t.ok) {
            st.ok = false;
            st.failure = t.failure;
            return st;
        }
        st.loglik[i] = t.loglik;
        st.weights[i] = t.weight;
        sum_rho += t.rho;
        sum_b += t.b;
    }
    const Eigen::VectorXd s_delta = md.S_times(lambda, delta);
    st.robust_loglik = sum_rho - sum_b;
    st.penalty = 0.5 * delta.dot(s_delta);
    st.value = st.robust_loglik - st.penalty;
    if (!std::isfinite(st.value)) {
        st.ok = false;
        st.failure = "non-finite objective value";
        return st;
    }
    if (order < 1) return st;

    st.u.resize(n, np);
    for (int i = 0; i < n; ++i) {
        for (int d = 0; d < np; ++d) st.u(i, d) = terms[static_cast<std::size_t>(i)].u[d];
    }
    const int p = md.n_coef();
    Eigen::VectorXd grad(p);
    for (int d = 0; d < np; ++d) {
        grad.segment(md.param_offset(d), md.param_size(d)) = md.X(d).transpose() * st.u.col(d);
    }
    st.gradient = grad - s_delta;
    if (order < 2) return st;

    Eigen::MatrixXd h(p, p);
    Eigen::VectorXd wdh(n);
    for (int d = 0; d < np; ++d) {
        for (int e = d; e < np; ++e) {
            for (int i = 0; i < n; ++i) wdh[i] = terms[static_cast<std::size_t>(i)].w(d, e);
            const Eigen::MatrixXd blk =
                md.X(d).transpose() * (md.X(e).array().colwise() * wdh.array()).matrix();
            h.block(md.param_offset(d), md.param_offset(e), md.param_size(d), md.param_size(e)) = blk;
            if (e != d) {
                h.block(md.param_offset(e), md.param_offset(d), md.param_size(e), md.param_size(d)) =
                    blk.transpose();
            }
        }
    }
    h = (0.5 * (h + h.transpose())).eval();
    st.hessian_unpen = h;
    st.hessian = h - md.S(lambda);
    return st;
}

Eigen::MatrixXd Objective::scores(const ObjectiveState& state) const {
    if (state.order < 1 || state.u.rows() != design_->n_obs()) {
        throw InvalidArgument("scores need a state evaluated with order >= 1");
    }
    const ModelDesign& md = *design_;
    Eigen::MatrixXd psi(md.n_obs(), md.n_coef());
    for (int d = 0; d < md.n_params(); ++d) {
        psi.middleCols(md.param_offset(d), md.param_size(d)) =
            md.X(d).array().colwise() * state.u.col(d).array();
    }
    return psi;
}

Eigen::VectorXd robustness_weights(const ObjectiveState& state) { return state.weights; }

Eigen::VectorXd initial_coefficients(const ModelDesign& design, const Family& family,
                                     const Eigen::VectorXd& y) {
    Eigen::VectorXd delta = Eigen::VectorXd::Zero(design.n_coef());
    const std::vector<double> yv(y.data(), y.data() + y.size());
    const ParamVector est = family.moment_estimates(yv);
    for (int d = 0; d < design.n_params(); ++d) {
        delta[design.param_offset(d)] = family.link(d).forward(est[static_cast<std::size_t>(d)]);
    }
    return delta;
}

}  // namespace rgamlss

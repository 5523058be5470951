#include "rgamlss/smoothing_selection.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <string>

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>

#include "rgamlss/error.hpp"
#include "rgamlss/inference.hpp"

namespace rgamlss {

PenaltyStructure::PenaltyStructure(const ModelDesign& design) : n_lambda_(design.n_lambda()) {
    for (const auto& b : design.blocks()) {
        Eigen::MatrixXd total = Eigen::MatrixXd::Zero(b.n_cols(), b.n_cols());
        for (const auto& d : b.penalties) total += d / std::max(1.0, d.cwiseAbs().maxCoeff());
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(total);
        const Eigen::VectorXd ev = es.eigenvalues();
        const double tol = 1e-10 * std::max(1.0, ev.maxCoeff());
        std::vector<Eigen::Index> keep;
        for (Eigen::Index i = 0; i < ev.size(); ++i) {
            if (ev[i] > tol) keep.push_back(i);
        }
        Eigen::MatrixXd u(b.n_cols(), static_cast<Eigen::Index>(keep.size()));
        for (std::size_t i = 0; i < keep.size(); ++i) {
            u.col(static_cast<Eigen::Index>(i)) = es.eigenvectors().col(keep[i]);
        }
        Group g;
        g.first_lambda = b.lambda_offset;
        g.range = u;
        for (const auto& d : b.penalties) g.reduced.push_back(u.transpose() * d * u);
        rank_ += static_cast<int>(keep.size());
        groups_.push_back(std::move(g));
    }
}

double PenaltyStructure::log_det(const Eigen::VectorXd& lambda) const {
    double out = 0.0;
    for (const auto& g : groups_) {
        if (g.reduced.empty() || g.reduced.front().rows() == 0) continue;
        Eigen::MatrixXd s = Eigen::MatrixXd::Zero(g.reduced.front().rows(), g.reduced.front().cols());
        for (std::size_t k = 0; k < g.reduced.size(); ++k) {
            s += lambda[g.first_lambda + static_cast<Eigen::Index>(k)] * g.reduced[k];
        }
        Eigen::LLT<Eigen::MatrixXd> llt(s);
        if (llt.info() != Eigen::Success) {
            throw ConditionViolation("penalty matrix not positive definite on its range space");
        }
        out += 2.0 * llt.matrixLLT().diagonal().array().log().sum();
    }
    return out;
}

Eigen::VectorXd PenaltyStructure::trace_inv_dS(const Eigen::VectorXd& lambda) const {
    Eigen::VectorXd out = Eigen::VectorXd::Zero(n_lambda_);
    for (const auto& g : groups_) {
        if (g.reduced.empty() || g.reduced.front().rows() == 0) continue;
        Eigen::MatrixXd s = Eigen::MatrixXd::Zero(g.reduced.front().rows(), g.reduced.front().cols());
        for (std::size_t k = 0; k < g.reduced.size(); ++k) {
            s += lambda[g.first_lambda + static_cast<Eigen::Index>(k)] * g.reduced[k];
        }
        Eigen::LLT<Eigen::MatrixXd> llt(s);
        if (llt.info() != Eigen::Success) {
            throw ConditionViolation("penalty matrix not positive definite on its range space");
        }
        for (std::size_t k = 0; k < g.reduced.size(); ++k) {
            out[g.first_lambda + static_cast<Eigen::Index>(k)] = llt.solve(g.reduced[k]).trace();
        }
    }
    return out;
}

Eigen::MatrixXd PenaltyStructure::pinv_times_dS(const Eigen::VectorXd& lambda, int j) const {
    for (const auto& g : groups_) {
        const int k = j - g.first_lambda;
        if (k < 0 || k >= static_cast<int>(g.reduced.size())) continue;
        const Eigen::Index r = g.range.cols();
        Eigen::MatrixXd s = Eigen::MatrixXd::Zero(r, r);
        for (std::size_t q = 0; q < g.reduced.size(); ++q) {
            s += lambda[g.first_lambda + static_cast<Eigen::Index>(q)] * g.reduced[q];
        }
        Eigen::LLT<Eigen::MatrixXd> llt(s);
        if (llt.info() != Eigen::Success) {
            throw ConditionViolation("penalty matrix not positive definite on its range space");
        }
        // U (U'SU)^{-1} U'D U U' with D = U (U'DU) U' on the range space.
        return g.range * llt.solve(g.reduced[static_cast<std::size_t>(k)]) * g.range.transpose();
    }
    throw InvalidArgument("smoothing parameter index " + std::to_string(j) + " out of range");
}

namespace {

Eigen::LLT<Eigen::MatrixXd> factor_pd(const Eigen::MatrixXd& mp) {
    Eigen::LLT<Eigen::MatrixXd> llt(mp);
    if (llt.info() != Eigen::Success) {
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(mp, Eigen::EigenvaluesOnly);
        throw ConditionViolation("M + S is not positive definite (smallest eigenvalue " +
                                 std::to_string(es.eigenvalues()[0]) + ")");
    }
    return llt;
}

}  // namespace

double laplace_marginal(double robust_loglik, const Eigen::VectorXd& delta,
                        const Eigen::VectorXd& lambda, const Eigen::MatrixXd& Mp,
                        const ModelDesign& design, const PenaltyStructure& penalties) {
    const auto llt = factor_pd(Mp);
    const double logdet_mp = 2.0 * llt.matrixLLT().diagonal().array().log().sum();
    const double quad = delta.dot(design.S_times(lambda, delta));
    return robust_loglik - 0.5 * quad + 0.5 * penalties.log_det(lambda) - 0.5 * logdet_mp;
}

double laplace_marginal(const FitResult& fit, const ModelDesign& design,
                        const PenaltyStructure& penalties) {
    return laplace_marginal(fit.state.robust_loglik, fit.delta, fit.lambda, -fit.state.hessian,
                            design, penalties);
}

Eigen::VectorXd laplace_lambda_gradient(const Eigen::VectorXd& delta, const Eigen::VectorXd& lambda,
                                        const Eigen::MatrixXd& Mp, const ModelDesign& design,
                                        const PenaltyStructure& penalties) {
    const auto llt = factor_pd(Mp);
    const Eigen::VectorXd ts = penalties.trace_inv_dS(lambda);
    Eigen::VectorXd out(design.n_lambda());
    for (int j = 0; j < design.n_lambda(); ++j) {
        const double tm = llt.solve(design.dS(j)).trace();
        out[j] = 0.5 * (ts[j] - tm - design.quad_form(j, delta));
    }
    return out;
}

EfsStep efs_update(const Eigen::VectorXd& lambda, const Eigen::VectorXd& delta,
                   const Eigen::MatrixXd& M, const ModelDesign& design,
                   const PenaltyStructure& penalties, const EfsOptions& opts) {
    const int m = design.n_lambda();
    if (lambda.size() != m) throw InvalidArgument("lambda has the wrong length");
    if ((lambda.array() <= 0.0).any()) throw InvalidArgument("EFS needs strictly positive lambda");
    const auto llt = factor_pd(M + design.S(lambda));
    EfsStep st;
    st.lambda = lambda;
    st.numerator.resize(m);
    st.denominator.resize(m);
    st.ratio.resize(m);
    for (int j = 0; j < m; ++j) {
        const auto [bi, k] = design.lambda_owner(j);
        const auto& b = design.blocks()[static_cast<std::size_t>(bi)];
        const Eigen::MatrixXd a = penalties.pinv_times_dS(lambda, j);
        const Eigen::MatrixXd ma = M.middleCols(b.offset, b.n_cols()) * a;
        const double num = llt.solve(ma).middleRows(b.offset, b.n_cols()).trace();
        const double den = design.quad_form(j, delta);
        st.numerator[j] = num;
        st.denominator[j] = den;
        double ratio;
        if (!(num > 0.0)) {
            throw ConditionViolation("EFS numerator " + std::to_string(num) + " for lambda_" +
                                     std::to_string(j) + " = " + std::to_string(lambda[j]) +
                                     " is not positive");
        }
        if (!(den > 0.0)) {
            ratio = opts.ratio_max;
        } else {
            ratio = std::clamp(num / den, opts.ratio_min, opts.ratio_max);
        }
        st.ratio[j] = ratio;
        st.lambda[j] = std::clamp(lambda[j] * ratio, opts.lambda_min, opts.lambda_max);
    }
    return st;
}

FitResult fit_efs(const Objective& objective, const Eigen::VectorXd& lambda0,
                  const FitOptions& opts, const Eigen::VectorXd* delta0) {
    const ModelDesign& md = objective.design();
    if (lambda0.size() != md.n_lambda()) throw InvalidArgument("lambda0 has the wrong length");
    if (md.n_lambda() == 0) {
        FitResult fit = fit_fixed_lambda(objective, lambda0, delta0, opts.trust_region);
        fit.method = "efs";
        return fit;
    }
    const PenaltyStructure penalties(md);
    Eigen::VectorXd lambda = lambda0;
    FitResult fit = fit_fixed_lambda(objective, lambda, delta0, opts.trust_region);
    std::vector<Eigen::VectorXd> trace{lambda};
    bool lambda_converged = false;
    int it = 0;
    // Per-component exponent on the EFS ratio: doubled while log-updates keep
    // their sign. After a sign change the step is the secant root between the
    // last two iterates. Fixed points are unchanged.
    Eigen::VectorXd accel = Eigen::VectorXd::Ones(md.n_lambda());
    Eigen::VectorXd prev_log_ratio = Eigen::VectorXd::Zero(md.n_lambda());
    Eigen::VectorXd prev_log_lambda = lambda.array().log();
    for (; it < opts.efs.max_iterations; ++it) {
        const EfsStep step = efs_update(lambda, fit.delta, -fit.state.hessian_unpen, md, penalties, opts.efs);
        const double change =
            (step.lambda.array().log() - lambda.array().log()).abs().maxCoeff();
        if (change < opts.efs.tol) {
            lambda_converged = true;
            break;
        }
        Eigen::VectorXd next = lambda;
        for (Eigen::Index j = 0; j < lambda.size(); ++j) {
            const double lr = std::log(step.ratio[j]);
            const double x = std::log(lambda[j]);
            double log_step = lr;
            if (lr * prev_log_ratio[j] > 0.0) {
                accel[j] = std::min(2.0 * accel[j], opts.efs.max_acceleration);
                log_step = accel[j] * lr;
            } else {
                accel[j] = 1.0;
                if (lr * prev_log_ratio[j] < 0.0) {
                    log_step = -lr * (x - prev_log_lambda[j]) / (lr - prev_log_ratio[j]);
                }
            }
            prev_log_ratio[j] = lr;
            prev_log_lambda[j] = x;
            const double mult = std::clamp(std::exp(log_step), opts.efs.ratio_min, opts.efs.ratio_max);
            next[j] = std::clamp(lambda[j] * mult, opts.efs.lambda_min, opts.efs.lambda_max);
        }
        lambda = next;
        trace.push_back(lambda);
        const Eigen::VectorXd warm = fit.delta;
        fit = fit_fixed_lambda(objective, lambda, &warm, opts.trust_region);
    }
    fit.method = "efs";
    fit.outer_iterations = it;
    fit.lambda_trace = std::move(trace);
    if (!lambda_converged) fit.warnings.push_back("EFS: iteration limit reached before lambda converged");
    for (Eigen::Index j = 0; j < lambda.size(); ++j) {
        if (lambda[j] >= opts.efs.lambda_max * (1.0 - 1e-12)) {
            fit.warnings.push_back("EFS: lambda_" + std::to_string(j) + " reached its upper bound");
        }
    }
    fit.converged = fit.report.converged && lambda_converged;
    return fit;
}

CriterionKind criterion_from_name(std::string_view name) {
    if (name == "raic" || name == "RAIC") return CriterionKind::RAIC;
    if (name == "rbic" || name == "RBIC") return CriterionKind::RBIC;
    throw InvalidArgument("unknown criterion '" + std::string(name) + "' (expected raic or rbic)");
}

std::string criterion_name(CriterionKind kind) { return kind == CriterionKind::RAIC ? "raic" : "rbic"; }

CriterionValue criterion(CriterionKind kind, const Objective& objective, const FitResult& fit) {
    CriterionValue cv;
    cv.kind = kind;
    cv.trace = edf(objective, fit).total;
    cv.robust_loglik = fit.state.robust_loglik;
    const double k = kind == CriterionKind::RAIC ? 2.0
                                                 : std::log(static_cast<double>(objective.design().n_obs()));
    cv.value = -2.0 * cv.robust_loglik + k * cv.trace;
    return cv;
}

CriterionValue raic(const Objective& objective, const FitResult& fit) {
    return criterion(CriterionKind::RAIC, objective, fit);
}

CriterionValue rbic(const Objective& objective, const FitResult& fit) {
    return criterion(CriterionKind::RBIC, objective, fit);
}

LambdaGrid LambdaGrid::parse(std::string_view text) {
    std::string s(text);
    for (char& ch : s) {
        if (ch == ':') ch = ' ';
    }
    std::istringstream is(s);
    LambdaGrid g;
    if (!(is >> g.lo >> g.hi >> g.n) || !(is >> std::ws).eof()) {
        throw InvalidArgument("lambda grid must look like lo:hi:n, got '" + std::string(text) + "'");
    }
    if (!(g.lo > 0.0 && g.hi > g.lo) || g.n < 2) {
        throw InvalidArgument("lambda grid needs 0 < lo < hi and n >= 2");
    }
    return g;
}

std::vector<double> LambdaGrid::values() const {
    std::vector<double> v;
    const double a = std::log(lo);
    const double b = std::log(hi);
    for (int i = 0; i < n; ++i) v.push_back(std::exp(a + (b - a) * i / (n - 1)));
    return v;
}

namespace {

struct Probe {
    FitResult fit;
    double value = 0.0;
};

class GridEvaluator {
public:
    GridEvaluator(CriterionKind kind, const Objective& objective, const GridOptions& opts)
        : kind_(kind), objective_(objective), opts_(opts) {}

    Probe at(const Eigen::VectorXd& loglam, const Eigen::VectorXd* warm) {
        Probe pr;
        const Eigen::VectorXd lambda = loglam.array().exp();
        pr.fit = fit_fixed_lambda(objective_, lambda, warm, opts_.fit.trust_region);
        pr.value = criterion(kind_, objective_, pr.fit).value;
        return pr;
    }

private:
    CriterionKind kind_;
    const Objective& objective_;
    const GridOptions& opts_;
};

// Golden-section minimization of coordinate j of log lambda on [a, b].
Probe golden(GridEvaluator& ev, Eigen::VectorXd base, int j, double a, double b, Probe best,
             double rel_tol) {
    const double invphi = (std::sqrt(5.0) - 1.0) / 2.0;
    double c = b - invphi * (b - a);
    double d = a + invphi * (b - a);
    Eigen::VectorXd warm = best.fit.delta;
    base[j] = c;
    Probe pc = ev.at(base, &warm);
    base[j] = d;
    Probe pd = ev.at(base, &warm);
    while (b - a > rel_tol * std::max(1.0, std::abs(0.5 * (a + b)))) {
        if (pc.value < pd.value) {
            b = d;
            d = c;
            pd = std::move(pc);
            c = b - invphi * (b - a);
            base[j] = c;
            warm = pd.fit.delta;
            pc = ev.at(base, &warm);
        } else {
            a = c;
            c = d;
            pc = std::move(pd);
            d = a + invphi * (b - a);
            base[j] = d;
            warm = pc.fit.delta;
            pd = ev.at(base, &warm);
        }
    }
    Probe& cand = pc.value < pd.value ? pc : pd;
    if (cand.value < best.value) return std::move(cand);
    return best;
}

}  // namespace

FitResult grid_search(CriterionKind kind, const Objective& objective, const LambdaGrid& grid,
                      const GridOptions& opts) {
    const ModelDesign& md = objective.design();
    const int m = md.n_lambda();
    if (m > 2) {
        throw InvalidArgument("grid search supports at most two smoothing parameters (model has " +
                              std::to_string(m) + "); use EFS instead");
    }
    GridEvaluator ev(kind, objective, opts);
    if (m == 0) {
        Probe p = ev.at(Eigen::VectorXd(0), nullptr);
        p.fit.method = criterion_name(kind);
        p.fit.criterion = p.value;
        return std::move(p.fit);
    }
    const std::vector<double> vals = grid.values();
    std::vector<double> logv;
    for (double v : vals) logv.push_back(std::log(v));
    const int n = grid.n;

    // Sequential scan; each fit starts from its predecessor's coefficients.
    Probe best;
    bool have = false;
    std::vector<int> best_idx(static_cast<std::size_t>(m), 0);
    Eigen::VectorXd warm;
    bool have_warm = false;
    const int total = m == 1 ? n : n * n;
    for (int t = 0; t < total; ++t) {
        Eigen::VectorXd ll(m);
        std::vector<int> idx(static_cast<std::size_t>(m));
        if (m == 1) {
            idx[0] = t;
        } else {
            const int i = t / n;
            const int jj = t % n;
            idx[0] = i;
            idx[1] = i % 2 == 0 ? jj : n - 1 - jj;  // serpentine keeps neighbours adjacent
        }
        for (int j = 0; j < m; ++j) ll[j] = logv[static_cast<std::size_t>(idx[static_cast<std::size_t>(j)])];
        Probe p = ev.at(ll, have_warm ? &warm : nullptr);
        warm = p.fit.delta;
        have_warm = true;
        if (!have || p.value < best.value) {
            best = std::move(p);
            best_idx = idx;
            have = true;
        }
    }

    std::vector<std::string> warnings;
    for (int j = 0; j < m; ++j) {
        const int i = best_idx[static_cast<std::size_t>(j)];
        if (i == 0 || i == n - 1) {
            warnings.push_back("grid search: criterion minimized at the grid boundary for lambda_" +
                               std::to_string(j) + " = " + std::to_string(vals[static_cast<std::size_t>(i)]));
        }
    }
    // Golden-section refinement between the neighbours of the best grid
    // point, cycling over coordinates when there are two.
    const int rounds = m == 1 ? 1 : 2;
    for (int r = 0; r < rounds; ++r) {
        for (int j = 0; j < m; ++j) {
            const int i = best_idx[static_cast<std::size_t>(j)];
            if (i == 0 || i == n - 1) continue;
            const Eigen::VectorXd base = best.fit.lambda.array().log();
            best = golden(ev, base, j, logv[static_cast<std::size_t>(i - 1)],
                          logv[static_cast<std::size_t>(i + 1)], std::move(best), opts.rel_tol);
        }
    }
    FitResult fit = std::move(best.fit);
    fit.method = criterion_name(kind);
    fit.criterion = best.value;
    fit.warnings.insert(fit.warnings.end(), warnings.begin(), warnings.end());
    return fit;
}

}  // namespace rgamlss

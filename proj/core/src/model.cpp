#include "rgamlss/model.hpp"

#include "rgamlss/error.hpp"

namespace rgamlss {

FitResult fit_fixed_lambda(const Objective& objective, const Eigen::VectorXd& lambda,
                           const Eigen::VectorXd* delta0, const TrustRegionOptions& opts) {
    const ModelDesign& md = objective.design();
    if (lambda.size() != md.n_lambda()) {
        throw InvalidArgument("expected " + std::to_string(md.n_lambda()) + " smoothing parameters, got " +
                              std::to_string(lambda.size()));
    }
    if ((lambda.array() < 0.0).any()) throw InvalidArgument("smoothing parameters must be >= 0");
    Eigen::VectorXd start;
    if (delta0 != nullptr) {
        start = *delta0;
    } else if (objective.rho().is_identity()) {
        start = initial_coefficients(md, objective.family(), objective.response());
    } else {
        // Robust fits start from the classical fit: from the intercept-only
        // point, well-fitting but extreme responses can look like outliers.
        const Objective classical = objective.with_rho(make_identity_rho());
        start = fit_fixed_lambda(classical, lambda, nullptr, opts).delta;
    }

    // The accepted iterate always carries the largest value seen so far, so
    // keeping the best state avoids a final re-evaluation.
    ObjectiveState best;
    bool have_best = false;
    auto eval = [&](const Eigen::VectorXd& x) {
        ObjectiveState st = objective.evaluate(x, lambda, 2);
        LocalModel lm;
        lm.ok = st.ok;
        if (!st.ok) return lm;
        lm.value = st.value;
        lm.gradient = st.gradient;
        lm.hessian = st.hessian;
        if (!have_best || st.value > best.value) {
            best = std::move(st);
            have_best = true;
        }
        return lm;
    };
    TrustRegionResult tr = trust_region_maximize(eval, start, opts);

    FitResult fit;
    fit.delta = tr.x;
    fit.lambda = lambda;
    fit.c = objective.rho().tuning_constant();
    fit.report = tr.report;
    fit.converged = tr.report.converged;
    if (have_best && best.value == tr.at_x.value) {
        fit.state = std::move(best);
    } else {
        fit.state = objective.evaluate(tr.x, lambda, 2);
    }
    if (!fit.converged) fit.warnings.push_back("trust region: " + tr.report.message);
    return fit;
}

}  // namespace rgamlss

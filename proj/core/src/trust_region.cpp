#include "rgamlss/trust_region.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <Eigen/Eigenvalues>

#include "rgamlss/error.hpp"

namespace rgamlss {

void TrustRegionOptions::validate() const {
    if (!(initial_radius > 0.0)) throw InvalidArgument("initial radius must be positive");
    if (!(0.0 < eta_low && eta_low < eta_high && eta_high < 1.0)) {
        throw InvalidArgument("need 0 < eta_low < eta_high < 1");
    }
    if (!(0.0 < shrink && shrink < 1.0 && expand > 1.0)) {
        throw InvalidArgument("need shrink < 1 < expand");
    }
    if (!(min_radius > 0.0 && max_radius >= initial_radius)) {
        throw InvalidArgument("invalid radius bounds");
    }
    if (max_iterations < 1 || !(grad_tol > 0.0)) throw InvalidArgument("invalid stopping rule");
}

SubproblemSolution solve_subproblem(const Eigen::VectorXd& g, const Eigen::MatrixXd& H,
                                    double radius) {
    const Eigen::Index p = g.size();
    SubproblemSolution out;
    if (p == 0) {
        out.step = Eigen::VectorXd::Zero(0);
        return out;
    }
    // Minimize -g'e + 1/2 e'Be with B = -H.
    const Eigen::MatrixXd B = -0.5 * (H + H.transpose());
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(B);
    const Eigen::VectorXd lam = es.eigenvalues();
    const Eigen::MatrixXd& Q = es.eigenvectors();
    const Eigen::VectorXd gam = Q.transpose() * g;
    const double lmin = lam[0];
    const double scale = std::max(1.0, lam.cwiseAbs().maxCoeff());

    auto step_for = [&](double nu) {
        Eigen::VectorXd c(p);
        for (Eigen::Index i = 0; i < p; ++i) {
            const double den = lam[i] + nu;
            c[i] = den > 0.0 ? gam[i] / den : 0.0;
        }
        return c;
    };
    auto finish = [&](const Eigen::VectorXd& coef, double nu, bool boundary) {
        out.step = Q * coef;
        out.nu = nu;
        out.on_boundary = boundary;
        out.predicted = g.dot(out.step) - 0.5 * out.step.dot(B * out.step);
        return out;
    };

    if (lmin > 1e-14 * scale) {
        const Eigen::VectorXd c = step_for(0.0);
        if (c.norm() <= radius) return finish(c, 0.0, false);
    }

    // Boundary solution: find nu > max(0, -lmin) with ||e(nu)|| = radius.
    const double nu_floor = std::max(0.0, -lmin);
    // Hard case: g has no weight on the bottom eigenspace and the shifted
    // step stays inside the ball.
    const double tol_gam = 1e-12 * std::max(1.0, g.norm());
    double bottom_weight = 0.0;
    Eigen::Index n_bottom = 0;
    for (Eigen::Index i = 0; i < p; ++i) {
        if (lam[i] - lmin <= 1e-12 * scale) {
            bottom_weight += gam[i] * gam[i];
            ++n_bottom;
        }
    }
    if (std::sqrt(bottom_weight) <= tol_gam) {
        Eigen::VectorXd c(p);
        for (Eigen::Index i = 0; i < p; ++i) {
            c[i] = i < n_bottom ? 0.0 : gam[i] / (lam[i] + nu_floor);
        }
        const double cn = c.norm();
        if (cn <= radius) {
            const double tau = std::sqrt(std::max(0.0, radius * radius - cn * cn));
            c[0] = tau;
            out.hard_case = true;
            return finish(c, nu_floor, true);
        }
    }

    double lo = nu_floor;
    double hi = nu_floor + g.norm() / radius + 1e-300;
    // Ensure hi is feasible (||e(hi)|| <= radius).
    while (step_for(hi).norm() > radius) hi *= 2.0;
    double nu = hi;
    for (int it = 0; it < 300; ++it) {
        const Eigen::VectorXd c = step_for(nu);
        const double cn = c.norm();
        if (std::abs(cn - radius) <= 1e-12 * radius) break;
        if (cn > radius) {
            lo = nu;
        } else {
            hi = nu;
        }
        // Newton on 1/||e(nu)|| - 1/radius, kept inside the bracket.
        double dnorm = 0.0;
        for (Eigen::Index i = 0; i < p; ++i) {
            const double den = lam[i] + nu;
            if (den > 0.0) dnorm += c[i] * c[i] / den;
        }
        double next = nu + (cn / radius - 1.0) * cn * cn / std::max(dnorm, 1e-300);
        if (!(next > lo && next < hi) || !std::isfinite(next)) next = 0.5 * (lo + hi);
        if (hi - lo <= 1e-15 * std::max(1.0, hi)) break;
        nu = next;
    }
    Eigen::VectorXd c = step_for(nu);
    const double cn = c.norm();
    if (cn > radius) c *= radius / cn;
    return finish(c, nu, true);
}

TrustRegionResult trust_region_maximize(const LocalEvaluator& f, const Eigen::VectorXd& x0,
                                        const TrustRegionOptions& opts) {
    opts.validate();
    TrustRegionResult res;
    res.x = x0;
    res.at_x = f(x0);
    FitReport& rep = res.report;
    rep.evaluations = 1;
    if (!res.at_x.ok || !std::isfinite(res.at_x.value)) {
        throw ConvergenceError("objective is not finite at the starting point");
    }
    rep.trace.push_back(res.at_x.value);
    double radius = opts.initial_radius;

    for (int it = 0; it < opts.max_iterations; ++it) {
        const LocalModel& cur = res.at_x;
        rep.grad_norm = cur.gradient.size() ? cur.gradient.cwiseAbs().maxCoeff() : 0.0;
        if (rep.grad_norm < opts.grad_tol * (1.0 + std::abs(cur.value))) {
            rep.converged = true;
            rep.message = "gradient tolerance reached";
            return res;
        }
        rep.iterations = it + 1;
        const SubproblemSolution sp = solve_subproblem(cur.gradient, cur.hessian, radius);
        const double step_norm = sp.step.norm();
        rep.radii.push_back(radius);
        rep.step_norms.push_back(step_norm);
        const Eigen::VectorXd trial_x = res.x + sp.step;
        LocalModel trial = f(trial_x);
        ++rep.evaluations;
        const bool finite = trial.ok && std::isfinite(trial.value);
        const double actual = finite ? trial.value - cur.value : -std::numeric_limits<double>::infinity();
        const double rho = sp.predicted > 0.0 ? actual / sp.predicted : -1.0;

        if (!finite || rho < opts.eta_low) {
            radius = opts.shrink * std::min(radius, std::max(step_norm, opts.min_radius));
        } else if (rho > opts.eta_high && sp.on_boundary) {
            radius = std::min(opts.expand * radius, opts.max_radius);
        }
        if (finite && actual > 0.0) {
            res.x = trial_x;
            res.at_x = std::move(trial);
            rep.trace.push_back(res.at_x.value);
        } else {
            ++rep.rejected_steps;
        }
        if (radius < opts.min_radius || (finite && sp.predicted <= 1e-15 * (1.0 + std::abs(cur.value)) &&
                                         actual <= 0.0)) {
            const auto& g = res.at_x.gradient;
            rep.grad_norm = g.size() ? g.cwiseAbs().maxCoeff() : 0.0;
            rep.converged = rep.grad_norm < opts.grad_tol * (1.0 + std::abs(res.at_x.value));
            // At the limit of floating-point resolution no further progress is possible.
            if (!rep.converged && rep.grad_norm < 1e-4 * (1.0 + std::abs(res.at_x.value))) {
                rep.converged = true;
                rep.message = "stalled at floating-point resolution";
            } else {
                rep.message = rep.converged ? "gradient tolerance reached" : "trust region collapsed";
            }
            return res;
        }
    }
    const auto& g = res.at_x.gradient;
    rep.grad_norm = g.size() ? g.cwiseAbs().maxCoeff() : 0.0;
    rep.converged = rep.grad_norm < opts.grad_tol * (1.0 + std::abs(res.at_x.value));
    rep.message = rep.converged ? "gradient tolerance reached" : "iteration limit reached";
    return res;
}

}  // namespace rgamlss

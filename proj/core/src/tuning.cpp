#include "rgamlss/tuning.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>

#include "rgamlss/error.hpp"
#include "rgamlss/random.hpp"

namespace rgamlss {

void MdpConfig::validate() const {
    if (!(target > 0.0 && target < 1.0)) throw InvalidArgument("target MDP must lie in (0, 1)");
    if (B < 20) throw InvalidArgument("MDP needs at least 20 replicates");
    if (!(c_lo > 0.0 && c_lo < c_hi)) throw InvalidArgument("c bracket needs 0 < c_lo < c_hi");
    if (!(mdp_tol > 0.0 && width_tol > 0.0)) throw InvalidArgument("tolerances must be positive");
    if (max_expansions < 0) throw InvalidArgument("max_expansions must be non-negative");
}

double mdp(const Objective& objective, const FitResult& fit, int B, std::uint64_t seed,
           std::vector<double>* per_replicate) {
    if (B < 1) throw InvalidArgument("MDP needs at least one replicate");
    const Family& fam = objective.family();
    const RhoFunction& rho = objective.rho();
    const Eigen::MatrixXd eta = objective.design().predictors(fit.delta);
    const Eigen::Index n = eta.rows();
    std::vector<ParamVector> theta(static_cast<std::size_t>(n));
    for (Eigen::Index i = 0; i < n; ++i) {
        Eigen::Vector3d e = Eigen::Vector3d::Zero();
        for (Eigen::Index d = 0; d < eta.cols(); ++d) e[d] = eta(i, d);
        theta[static_cast<std::size_t>(i)] = fam.params_from_predictors(e);
    }
    std::vector<double> props(static_cast<std::size_t>(B));
    for (int b = 0; b < B; ++b) {
        std::mt19937_64 rng(derive_seed(seed, static_cast<std::uint64_t>(b)));
        std::uniform_real_distribution<double> unif(0.0, 1.0);
        double sum = 0.0;
        for (Eigen::Index i = 0; i < n; ++i) {
            double u = unif(rng);
            u = std::clamp(u, 1e-15, 1.0 - 1e-15);
            const auto& t = theta[static_cast<std::size_t>(i)];
            const double y = fam.quantile(u, t);
            double l = 0.0;
            fam.log_density_batch(std::span<const double>(&y, 1), t, std::span<double>(&l, 1));
            sum += rho.rho_prime(l);
        }
        props[static_cast<std::size_t>(b)] = sum / static_cast<double>(n);
    }
    if (per_replicate != nullptr) *per_replicate = props;
    std::vector<double> s = props;
    std::sort(s.begin(), s.end());
    const std::size_t m = s.size();
    return m % 2 == 1 ? s[m / 2] : 0.5 * (s[m / 2 - 1] + s[m / 2]);
}

RefitFunction efs_refit(const FitOptions& opts) {
    return [opts](const Objective& obj, const FitResult* warm) {
        if (warm == nullptr) {
            const Eigen::VectorXd l0 = Eigen::VectorXd::Ones(obj.design().n_lambda());
            return fit_efs(obj, l0, opts);
        }
        return fit_efs(obj, warm->lambda, opts, &warm->delta);
    };
}

namespace {

std::string curve_text(const std::vector<TuneProbe>& trace) {
    std::vector<TuneProbe> s = trace;
    std::sort(s.begin(), s.end(), [](const TuneProbe& a, const TuneProbe& b) { return a.c < b.c; });
    std::ostringstream os;
    for (const auto& p : s) os << " (c=" << p.c << ", MDP=" << p.mdp << ")";
    return os.str();
}

}  // namespace

TuneResult tune_c(const Objective& objective, const MdpConfig& config, const RefitFunction& refit) {
    config.validate();
    TuneResult res;
    FitResult last;
    bool have_last = false;
    struct Point {
        double c;
        double mdp;
        FitResult fit;
    };
    auto probe = [&](double c) {
        const Objective obj = objective.with_rho(make_log_logistic_rho(c));
        FitResult fit = refit(obj, have_last ? &last : nullptr);
        const double m = mdp(obj, fit, config.B, config.seed);
        res.trace.push_back(TuneProbe{c, m, fit.lambda, fit.converged});
        last = fit;
        have_last = true;
        return Point{c, m, std::move(fit)};
    };

    Point hi = probe(config.c_hi);
    int expansions = 0;
    bool expanded_up = false;
    while (hi.mdp < config.target && expansions < config.max_expansions) {
        hi = probe(hi.c * 2.0);
        ++expansions;
        expanded_up = true;
    }
    if (hi.mdp < config.target) {
        if (std::abs(hi.mdp - config.target) < config.mdp_tol) {
            res.c = hi.c;
            res.mdp = hi.mdp;
            res.fit = std::move(hi.fit);
            res.at_boundary = true;
            res.warnings.push_back("tune: target MDP only approached at the expanded upper bound c = " +
                                   std::to_string(res.c));
            return res;
        }
        throw ConvergenceError("tune: MDP stays below the target up to c = " + std::to_string(hi.c) +
                               ";" + curve_text(res.trace));
    }
    if (expanded_up && std::abs(hi.mdp - config.target) < config.mdp_tol) {
        res.c = hi.c;
        res.mdp = hi.mdp;
        res.fit = std::move(hi.fit);
        res.at_boundary = true;
        res.warnings.push_back("tune: bracket expanded to c = " + std::to_string(hi.c) +
                               "; returning the upper bound (MDP saturates near 1)");
        return res;
    }
    Point lo = probe(config.c_lo);
    expansions = 0;
    while (lo.mdp > config.target && expansions < config.max_expansions) {
        lo = probe(lo.c / 2.0);
        ++expansions;
    }
    if (lo.mdp > config.target) {
        throw ConvergenceError("tune: MDP stays above the target down to c = " + std::to_string(lo.c) +
                               ";" + curve_text(res.trace));
    }

    Point best = std::abs(lo.mdp - config.target) < std::abs(hi.mdp - config.target) ? lo : hi;
    while (std::abs(best.mdp - config.target) >= config.mdp_tol && hi.c - lo.c >= config.width_tol) {
        Point mid = probe(0.5 * (lo.c + hi.c));
        const bool closer = std::abs(mid.mdp - config.target) < std::abs(best.mdp - config.target);
        if (mid.mdp < config.target) {
            if (closer) best = mid;
            lo = std::move(mid);
        } else {
            if (closer) best = mid;
            hi = std::move(mid);
        }
    }
    res.c = best.c;
    res.mdp = best.mdp;
    res.fit = std::move(best.fit);

    // Monotonicity diagnostic over the probed points.
    std::vector<TuneProbe> s = res.trace;
    std::sort(s.begin(), s.end(), [](const TuneProbe& a, const TuneProbe& b) { return a.c < b.c; });
    for (std::size_t i = 1; i < s.size(); ++i) {
        if (s[i].mdp < s[i - 1].mdp - 0.01) {
            res.warnings.push_back("tune: MDP not monotone in c;" + curve_text(res.trace));
            break;
        }
    }
    return res;
}

}  // namespace rgamlss

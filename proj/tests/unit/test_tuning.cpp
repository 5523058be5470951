#include <algorithm>
#include <cmath>

#include "doctest.h"
#include "rgamlss/error.hpp"
#include "rgamlss/tuning.hpp"
#include "toys.hpp"

using namespace rgamlss;

namespace {

/// E[rho_c'(log p(Y))] for Y ~ Poisson(mu), summed directly.
double expected_weight_poisson(double mu, double c) {
    const auto rho = make_log_logistic_rho(c);
    double total = 0.0;
    double logp = -mu;
    for (int y = 0; y < 2000; ++y) {
        if (y > 0) logp += std::log(mu) - std::log(static_cast<double>(y));
        total += std::exp(logp) * rho->rho_prime(logp);
        if (y > mu && logp < -60.0) break;
    }
    return total;
}

}  // namespace

TEST_CASE("MDP at large c is essentially one") {
    const auto t = test::poisson_toy(80, 8, 101);
    const Objective obj = t.objective(make_log_logistic_rho(50.0));
    const FitResult fit = fit_fixed_lambda(obj, Eigen::VectorXd::Ones(1));
    CHECK(mdp(obj, fit, 50, 7) > 1.0 - 1e-6);
}

TEST_CASE("MDP against an exact expectation") {
    const auto t = test::poisson_toy(200, 8, 102);
    const double c = 2.0;
    const Objective obj = t.objective(make_log_logistic_rho(c));
    const FitResult fit = fit_fixed_lambda(obj, Eigen::VectorXd::Ones(1));
    const Eigen::MatrixXd eta = t.design->predictors(fit.delta);
    double expected = 0.0;
    for (Eigen::Index i = 0; i < eta.rows(); ++i) expected += expected_weight_poisson(std::exp(eta(i, 0)), c);
    expected /= static_cast<double>(eta.rows());

    std::vector<double> reps;
    const double med = mdp(obj, fit, 400, 11, &reps);
    REQUIRE(reps.size() == 400);
    double mean = 0.0;
    for (double r : reps) mean += r;
    mean /= 400.0;
    double var = 0.0;
    for (double r : reps) var += (r - mean) * (r - mean);
    const double sd = std::sqrt(var / 399.0);
    CHECK(std::abs(mean - expected) < 4.0 * sd / std::sqrt(400.0));
    // The replicate means are close to symmetric, so the median sits near the mean.
    CHECK(std::abs(med - expected) < sd);
    for (double r : reps) {
        CHECK(r > 0.0);
        CHECK(r <= 1.0);
    }
}

TEST_CASE("MDP is monotone in c and reproducible") {
    const auto t = test::gamma_toy(90, 7, 103);
    const Objective base = t.objective(make_log_logistic_rho(3.0));
    const FitResult fit = fit_fixed_lambda(base, Eigen::VectorXd::Ones(2));
    double prev = 0.0;
    for (int k = 0; k < 10; ++k) {
        const double c = 0.5 + 2.0 * k;
        const double v = mdp(base.with_rho(make_log_logistic_rho(c)), fit, 60, 21);
        CHECK(v >= prev);
        CHECK(v > 0.0);
        CHECK(v <= 1.0);
        prev = v;
    }
    CHECK(mdp(base, fit, 60, 21) == mdp(base, fit, 60, 21));
    CHECK(mdp(base, fit, 60, 21) != mdp(base, fit, 60, 22));
}

TEST_CASE("tune_c hits the target") {
    const auto t = test::poisson_toy(120, 8, 104);
    const Objective obj = t.objective(make_log_logistic_rho(3.0));
    MdpConfig cfg;
    cfg.B = 40;
    const TuneResult res = tune_c(obj, cfg);
    CHECK(res.c >= cfg.c_lo);
    CHECK(res.c <= cfg.c_hi);
    CHECK_FALSE(res.at_boundary);
    CHECK(res.warnings.empty());
    REQUIRE(res.trace.size() >= 3);
    bool probed = false;
    for (const auto& p : res.trace) probed = probed || p.c == res.c;
    CHECK(probed);
    CHECK(std::abs(res.mdp - cfg.target) < cfg.mdp_tol);
    const Objective tuned = obj.with_rho(make_log_logistic_rho(res.c));
    CHECK(mdp(tuned, res.fit, cfg.B, cfg.seed) == res.mdp);

    // A fixed-lambda refit tunes the same way.
    const RefitFunction fixed = [](const Objective& o, const FitResult* warm) {
        return fit_fixed_lambda(o, Eigen::VectorXd::Constant(1, 5.0), warm ? &warm->delta : nullptr);
    };
    const TuneResult res2 = tune_c(obj, cfg, fixed);
    CHECK(std::abs(res2.mdp - cfg.target) < cfg.mdp_tol);
}

TEST_CASE("targets near one end at the upper bound") {
    const auto t = test::poisson_toy(60, 6, 105);
    const Objective obj = t.objective(make_log_logistic_rho(3.0));
    MdpConfig cfg;
    cfg.B = 20;
    cfg.target = 1.0 - 1e-9;
    const RefitFunction fixed = [](const Objective& o, const FitResult* warm) {
        return fit_fixed_lambda(o, Eigen::VectorXd::Ones(1), warm ? &warm->delta : nullptr);
    };
    const TuneResult res = tune_c(obj, cfg, fixed);
    CHECK(res.at_boundary);
    CHECK_FALSE(res.warnings.empty());
    CHECK(res.c > cfg.c_hi);
}

TEST_CASE("configuration validation") {
    MdpConfig cfg;
    cfg.target = 1.0;
    CHECK_THROWS_AS(cfg.validate(), InvalidArgument);
    cfg = MdpConfig{};
    cfg.B = 5;
    CHECK_THROWS_AS(cfg.validate(), InvalidArgument);
    cfg = MdpConfig{};
    cfg.c_lo = 30.0;
    CHECK_THROWS_AS(cfg.validate(), InvalidArgument);
    CHECK_NOTHROW(MdpConfig{}.validate());
}

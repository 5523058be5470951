#include <algorithm>
#include <cmath>
#include <random>

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>

#include "doctest.h"
#include "rgamlss/error.hpp"
#include "rgamlss/inference.hpp"
#include "rgamlss/smoothing_selection.hpp"
#include "ridge.hpp"
#include "toys.hpp"

using namespace rgamlss;

using test::Ridge;

TEST_CASE("Laplace marginal is exact for a quadratic log-likelihood") {
    const Ridge r(81);
    const PenaltyStructure ps(*r.design);
    for (double lambda : {1e-2, 0.7, 15.0, 3e3}) {
        CAPTURE(lambda);
        CHECK(r.laplace(lambda, ps) == doctest::Approx(r.exact_marginal(lambda)).epsilon(1e-9));
    }
}

TEST_CASE("log-determinant homogeneity") {
    const Ridge r(82);
    const PenaltyStructure ps(*r.design);
    const Eigen::VectorXd l = Eigen::VectorXd::Constant(1, 3.0);
    const double diff = 0.5 * ps.log_det(2.0 * l) - 0.5 * ps.log_det(l);
    CHECK(diff == doctest::Approx(0.5 * ps.rank() * std::log(2.0)).epsilon(1e-12));
    CHECK(ps.rank() == 10);
}

TEST_CASE("marginal falls off for heavy smoothing of a curved signal") {
    const Ridge r(83, 200, 12, 0.3);
    const PenaltyStructure ps(*r.design);
    double prev = r.laplace(1e2, ps);
    for (double lambda = 1e3; lambda <= 1e7; lambda *= 10.0) {
        const double v = r.laplace(lambda, ps);
        CHECK(v < prev);
        prev = v;
    }
}

TEST_CASE("iterated EFS reaches the marginal maximizer of a ridge toy") {
    const Ridge r(84);
    const PenaltyStructure ps(*r.design);
    std::vector<double> path;
    const double efs = r.iterate_efs(1.0, ps, &path);
    CHECK(path.size() > 1);
    CHECK(*std::min_element(path.begin(), path.end()) > 0.0);
    double best = -std::numeric_limits<double>::infinity();
    double arg = 0.0;
    const int m = 10000;
    for (int i = 0; i < m; ++i) {
        const double lambda = std::exp(std::log(1e-4) + (std::log(1e6) - std::log(1e-4)) * i / (m - 1));
        const double v = r.laplace(lambda, ps);
        if (v > best) {
            best = v;
            arg = lambda;
        }
    }
    CHECK(std::abs(efs - arg) / arg < 0.01);

    // At the fixed point the ratio is one and the lambda-gradient vanishes.
    const Eigen::VectorXd l = Eigen::VectorXd::Constant(1, efs);
    const Eigen::VectorXd d = r.delta(efs);
    const EfsStep st = efs_update(l, d, r.M(), *r.design, ps);
    CHECK(st.ratio[0] == doctest::Approx(1.0).epsilon(1e-8));
    const Eigen::VectorXd grad = laplace_lambda_gradient(d, l, r.M() + r.design->S(l), *r.design, ps);
    CHECK(std::abs(grad[0] * efs) < 1e-3);
}

TEST_CASE("EFS ratio agrees in sign with the marginal gradient") {
    const auto t = test::gamma_toy(80, 8, 85);
    const Objective obj = t.objective(make_log_logistic_rho(3.0));
    const PenaltyStructure ps(*t.design);
    std::mt19937_64 rng(86);
    // Below about 0.05 the scale smooth can chase a single observation toward zero scale.
    std::uniform_real_distribution<double> ul(std::log(0.2), std::log(1e4));
    int agreements = 0;
    int skipped = 0;
    for (int k = 0; k < 20; ++k) {
        const Eigen::VectorXd lambda = (Eigen::VectorXd(2) << std::exp(ul(rng)), std::exp(ul(rng))).finished();
        const FitResult fit = fit_fixed_lambda(obj, lambda);
        REQUIRE(fit.converged);
        const Eigen::MatrixXd M = -fit.state.hessian_unpen;
        const double min_eig = Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(M).eigenvalues().minCoeff();
        EfsStep st;
        try {
            st = efs_update(lambda, fit.delta, M, *t.design, ps);
        } catch (const ConditionViolation&) {
            // Only an indefinite robust information matrix can break the update.
            CHECK(min_eig < 0.0);
            ++skipped;
            continue;
        }
        for (int j = 0; j < 2; ++j) {
            CHECK(st.numerator[j] > 0.0);
            CHECK(st.lambda[j] > 0.0);
            auto l_la = [&](double lj) {
                Eigen::VectorXd l = lambda;
                l[j] = lj;
                return laplace_marginal(fit.state.robust_loglik, fit.delta, l, M + t.design->S(l), *t.design, ps);
            };
            const double h = 1e-6 * lambda[j];
            const double fd = (l_la(lambda[j] + h) - l_la(lambda[j] - h)) / (2 * h);
            const Eigen::VectorXd an =
                laplace_lambda_gradient(fit.delta, lambda, M + t.design->S(lambda), *t.design, ps);
            CHECK(lambda[j] * std::abs(an[j] - fd) < 1e-6 + 1e-5 * lambda[j] * std::abs(fd));
            if ((st.ratio[j] < 1.0) == (fd < 0.0)) ++agreements;
        }
    }
    CHECK(skipped <= 5);
    CHECK(agreements == 2 * (20 - skipped));
}

TEST_CASE("fit_efs basin stability and heavy smoothing of noise") {
    const auto t = test::poisson_toy(150, 10, 87);
    const Objective obj = t.objective(make_log_logistic_rho(4.0));
    std::vector<double> found;
    for (double l0 : {1e-3, 1.0, 1e3}) {
        const FitResult fit = fit_efs(obj, Eigen::VectorXd::Constant(1, l0));
        CHECK(fit.converged);
        for (const auto& l : fit.lambda_trace) CHECK(l.minCoeff() > 0.0);
        found.push_back(fit.lambda[0]);
    }
    CHECK(std::abs(found[1] / found[0] - 1.0) < 0.05);
    CHECK(std::abs(found[2] / found[0] - 1.0) < 0.05);

    // Constant mean: no smooth signal to find.
    test::Toy noise = t;
    std::mt19937_64 rng(88);
    std::poisson_distribution<int> po(4.0);
    for (auto& v : noise.y) v = po(rng);
    const FitResult flat = fit_efs(noise.objective(make_log_logistic_rho(4.0)), Eigen::VectorXd::Ones(1));
    CHECK(flat.lambda[0] >= 1e3);
}

TEST_CASE("criteria") {
    const auto t = test::poisson_toy(90, 6, 89);
    SUBCASE("RBIC minus RAIC") {
        const Objective obj = t.objective(make_log_logistic_rho(3.0));
        const FitResult fit = fit_fixed_lambda(obj, Eigen::VectorXd::Constant(1, 5.0));
        const auto a = raic(obj, fit);
        const auto b = rbic(obj, fit);
        CHECK(b.value - a.value == doctest::Approx((std::log(90.0) - 2.0) * a.trace).epsilon(1e-12));
        CHECK(a.trace == doctest::Approx(edf(obj, fit).total).epsilon(1e-14));
    }
    SUBCASE("unpenalized large-c value equals the TIC form") {
        const Objective obj = t.objective(make_log_logistic_rho(50.0));
        const FitResult fit = fit_fixed_lambda(obj, Eigen::VectorXd::Zero(1));
        const Eigen::MatrixXd M = -fit.state.hessian_unpen;
        const Eigen::MatrixXd psi = obj.scores(fit.state);
        const Eigen::MatrixXd Q = psi.transpose() * psi;
        const double tic = -2.0 * fit.state.robust_loglik + 2.0 * M.ldlt().solve(Q).trace();
        CHECK(raic(obj, fit).value == doctest::Approx(tic).epsilon(1e-8));
    }
    SUBCASE("trace falls as lambda grows") {
        const Objective obj = t.objective(make_log_logistic_rho(3.0));
        double prev = std::numeric_limits<double>::infinity();
        FitResult warm;
        for (int i = 0; i < 20; ++i) {
            const double lambda = std::exp(std::log(1e-3) + (std::log(1e6) - std::log(1e-3)) * i / 19.0);
            warm = fit_fixed_lambda(obj, Eigen::VectorXd::Constant(1, lambda), i == 0 ? nullptr : &warm.delta);
            const double tr = raic(obj, warm).trace;
            CHECK(tr < prev);
            prev = tr;
        }
    }
    CHECK(criterion_from_name("rbic") == CriterionKind::RBIC);
    CHECK_THROWS_AS(criterion_from_name("gcv"), InvalidArgument);
}

TEST_CASE("grid search") {
    const auto t = test::poisson_toy(100, 10, 90);
    const Objective obj = t.objective(make_log_logistic_rho(4.0));
    SUBCASE("dense scan oracle and determinism") {
        const LambdaGrid grid{1e-3, 1e5, 9};
        const FitResult fit = grid_search(CriterionKind::RBIC, obj, grid);
        CHECK(fit.warnings.empty());
        double best = std::numeric_limits<double>::infinity();
        double arg = 0.0;
        Eigen::VectorXd warm;
        const int m = 200;
        for (int i = 0; i < m; ++i) {
            const double lambda = std::exp(std::log(1e-3) + (std::log(1e5) - std::log(1e-3)) * i / (m - 1));
            const FitResult f = fit_fixed_lambda(obj, Eigen::VectorXd::Constant(1, lambda), i == 0 ? nullptr : &warm);
            warm = f.delta;
            const double v = rbic(obj, f).value;
            if (v < best) {
                best = v;
                arg = lambda;
            }
        }
        const double spacing = (std::log(1e5) - std::log(1e-3)) / (m - 1);
        CHECK(std::abs(std::log(fit.lambda[0] / arg)) <= spacing);
        CHECK(fit.criterion <= best + 1e-6);
        const FitResult again = grid_search(CriterionKind::RBIC, obj, grid);
        CHECK(again.lambda[0] == fit.lambda[0]);
    }
    SUBCASE("boundary warning") {
        const FitResult fit = grid_search(CriterionKind::RAIC, obj, LambdaGrid{1e4, 1e7, 4});
        CHECK_FALSE(fit.warnings.empty());
    }
    SUBCASE("more than two smoothing parameters") {
        const auto g = test::gamma_toy(60, 6, 91);
        CovariateTable data = g.data;
        data["z"] = data["x"];
        std::mt19937_64 rng(92);
        std::shuffle(data["z"].begin(), data["z"].end(), rng);
        std::vector<SmoothSpec> specs;
        for (int p = 0; p < 2; ++p) {
            SmoothSpec s;
            s.vars = {"x", "z"};
            s.k = {5, 5};
            s.param = p;
            specs.push_back(s);
        }
        const auto md = std::make_shared<const ModelDesign>(ModelDesign::assemble(specs, data, 2));
        const Objective big(md, g.family, make_log_logistic_rho(3.0), g.y);
        CHECK_THROWS_AS(grid_search(CriterionKind::RAIC, big, LambdaGrid{}), InvalidArgument);
    }
    CHECK(LambdaGrid::parse("1e-4:1e6:21").n == 21);
    CHECK_THROWS_AS(LambdaGrid::parse("1:0.5:3"), InvalidArgument);
}

TEST_CASE("robust criterion resists a gross outlier") {
    const auto t = test::poisson_toy(120, 10, 93);
    test::Toy dirty = t;
    dirty.y[17] = 10.0 * t.y.maxCoeff() + 50.0;
    const LambdaGrid grid{1e-3, 1e6, 19};
    auto selected = [&](const test::Toy& toy, RhoPtr rho) {
        return std::log(grid_search(CriterionKind::RAIC, toy.objective(rho), grid).lambda[0]);
    };
    const double robust_shift =
        std::abs(selected(dirty, make_log_logistic_rho(4.0)) - selected(t, make_log_logistic_rho(4.0)));
    const double classical_shift = std::abs(selected(dirty, make_identity_rho()) - selected(t, make_identity_rho()));
    CHECK(robust_shift < classical_shift);
}

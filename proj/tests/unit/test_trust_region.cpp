#include <algorithm>
#include <cmath>
#include <deque>
#include <random>
#include <vector>

#include <Eigen/Dense>

#include "doctest.h"
#include "rgamlss/error.hpp"
#include "rgamlss/model.hpp"
#include "rgamlss/trust_region.hpp"
#include "toys.hpp"

using namespace rgamlss;

namespace {

double model_value(const Eigen::VectorXd& g, const Eigen::MatrixXd& H, const Eigen::VectorXd& e) {
    return g.dot(e) + 0.5 * e.dot(H * e);
}

/// Negated Rosenbrock function in n dimensions.
LocalModel neg_rosenbrock(const Eigen::VectorXd& x) {
    const Eigen::Index n = x.size();
    LocalModel m;
    m.gradient = Eigen::VectorXd::Zero(n);
    m.hessian = Eigen::MatrixXd::Zero(n, n);
    for (Eigen::Index i = 0; i + 1 < n; ++i) {
        const double a = x[i + 1] - x[i] * x[i];
        const double b = 1.0 - x[i];
        m.value -= 100.0 * a * a + b * b;
        m.gradient[i] -= -400.0 * x[i] * a - 2.0 * b;
        m.gradient[i + 1] -= 200.0 * a;
        m.hessian(i, i) -= 1200.0 * x[i] * x[i] - 400.0 * x[i + 1] + 2.0;
        m.hessian(i, i + 1) -= -400.0 * x[i];
        m.hessian(i + 1, i) -= -400.0 * x[i];
        m.hessian(i + 1, i + 1) -= 200.0;
    }
    return m;
}

}  // namespace

TEST_CASE("subproblem reference steps") {
    const Eigen::MatrixXd H = -Eigen::MatrixXd::Identity(2, 2);
    const auto inner = solve_subproblem(Eigen::Vector2d(0.1, 0.0), H, 1.0);
    CHECK((inner.step - Eigen::Vector2d(0.1, 0.0)).norm() < 1e-12);
    CHECK_FALSE(inner.on_boundary);
    CHECK(inner.nu == 0.0);
    const auto edge = solve_subproblem(Eigen::Vector2d(3.0, 4.0), H, 1.0);
    CHECK((edge.step - Eigen::Vector2d(0.6, 0.8)).norm() < 1e-10);
    CHECK(edge.on_boundary);
}

TEST_CASE("indefinite subproblem against boundary sampling") {
    std::mt19937_64 rng(71);
    std::uniform_real_distribution<double> ang(0.0, 2.0 * M_PI);
    for (int trial = 0; trial < 4; ++trial) {
        const double th = ang(rng);
        Eigen::Matrix2d Q;
        Q << std::cos(th), -std::sin(th), std::sin(th), std::cos(th);
        const Eigen::MatrixXd H = Q * Eigen::Vector2d(1.0, -2.0).asDiagonal() * Q.transpose();
        // The last trial puts g orthogonal to the ascent eigenvector (hard case).
        const Eigen::VectorXd g = trial < 3 ? Eigen::VectorXd(Eigen::Vector2d(std::cos(ang(rng)), std::sin(ang(rng))))
                                            : Eigen::VectorXd(0.3 * Q.col(1));
        const double radius = 1.3;
        const auto sol = solve_subproblem(g, H, radius);
        CHECK(sol.step.norm() <= radius + 1e-12);
        double best = -std::numeric_limits<double>::infinity();
        const int m = 1'000'000;
        for (int k = 0; k < m; ++k) {
            const double a = 2.0 * M_PI * k / m;
            const Eigen::Vector2d e(radius * std::cos(a), radius * std::sin(a));
            best = std::max(best, model_value(g, H, e));
        }
        CHECK(std::abs(model_value(g, H, sol.step) - best) < 1e-3);
        CHECK(model_value(g, H, sol.step) >= best - 1e-9);
        CHECK(sol.predicted == doctest::Approx(model_value(g, H, sol.step)).epsilon(1e-10));
    }
}

TEST_CASE("More-Sorensen optimality conditions") {
    std::mt19937_64 rng(72);
    std::normal_distribution<double> z;
    for (int trial = 0; trial < 50; ++trial) {
        const int n = 2 + trial % 6;
        Eigen::MatrixXd A(n, n);
        for (auto& v : A.reshaped()) v = z(rng);
        const Eigen::MatrixXd H = 0.5 * (A + A.transpose());
        Eigen::VectorXd g(n);
        for (auto& v : g) v = z(rng);
        const double radius = 0.1 + std::abs(z(rng));
        const auto s = solve_subproblem(g, H, radius);
        const Eigen::VectorXd resid = (-H + s.nu * Eigen::MatrixXd::Identity(n, n)) * s.step - g;
        CHECK(resid.norm() < 1e-8 * std::max(1.0, g.norm()));
        CHECK(s.nu >= 0.0);
        CHECK(std::abs(s.nu * (radius - s.step.norm())) < 1e-8);
        CHECK(s.step.norm() <= radius + 1e-12);
        const double min_eig = Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(-H).eigenvalues().minCoeff();
        CHECK(min_eig + s.nu >= -1e-8);
    }
}

TEST_CASE("concave quadratic converges in Newton steps") {
    Eigen::MatrixXd A(3, 3);
    A << 4, 1, 0, 1, 3, 0.5, 0, 0.5, 2;
    const Eigen::Vector3d a(0.3, -0.4, 0.2);
    auto f = [&](const Eigen::VectorXd& x) {
        LocalModel m;
        const Eigen::VectorXd d = x - a;
        m.value = -0.5 * d.dot(A * d);
        m.gradient = -A * d;
        m.hessian = -A;
        return m;
    };
    const auto res = trust_region_maximize(f, Eigen::VectorXd::Zero(3));
    CHECK(res.report.converged);
    CHECK(res.report.iterations <= 3);
    CHECK((res.x - a).cwiseAbs().maxCoeff() < 1e-10);
}

TEST_CASE("Poisson toy optimum matches a first-order oracle") {
    const auto t = test::poisson_toy(50, 8, 73);
    const Objective obj = t.objective(make_log_logistic_rho(3.0));
    const Eigen::VectorXd lambda = Eigen::VectorXd::Constant(1, 2.0);
    const Eigen::VectorXd zero = Eigen::VectorXd::Zero(t.design->n_coef());
    const FitResult fit = fit_fixed_lambda(obj, lambda, &zero);
    CHECK(fit.converged);

    // Gradient ascent with Barzilai-Borwein steps and a non-monotone Armijo test.
    Eigen::VectorXd x = zero;
    ObjectiveState st = obj.evaluate(x, lambda, 1);
    Eigen::VectorXd x_prev;
    Eigen::VectorXd g_prev;
    std::deque<double> recent;
    for (int it = 0; it < 20000 && st.gradient.cwiseAbs().maxCoeff() > 1e-10; ++it) {
        double step = 1e-3;
        if (it > 0) {
            const Eigen::VectorXd s = x - x_prev;
            const double sy = s.dot(st.gradient - g_prev);
            if (sy < 0.0) step = -s.dot(s) / sy;
        }
        recent.push_back(st.value);
        if (recent.size() > 10) recent.pop_front();
        const double floor = *std::min_element(recent.begin(), recent.end());
        const double gg = st.gradient.squaredNorm();
        x_prev = x;
        g_prev = st.gradient;
        ObjectiveState trial;
        for (int back = 0; back < 60; ++back) {
            trial = obj.evaluate(x + step * st.gradient, lambda, 1);
            if (trial.ok && trial.value >= floor + 1e-4 * step * gg) break;
            step *= 0.5;
        }
        x = x + step * st.gradient;
        st = trial;
    }
    CHECK(st.gradient.cwiseAbs().maxCoeff() < 1e-8);
    CHECK(std::abs(fit.state.value - st.value) < 1e-6);

    // At the optimum the penalized negative Hessian is positive definite.
    CHECK(Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(-fit.state.hessian).eigenvalues().minCoeff() > 0.0);
}

TEST_CASE("non-finite trial points are rejected") {
    const double target = 9.0;
    auto f = [&](const Eigen::VectorXd& x) {
        LocalModel m;
        if (std::abs(x[0]) > 10.0) {
            m.ok = false;
            return m;
        }
        m.value = std::exp(target) * x[0] - std::exp(x[0]);
        m.gradient = Eigen::VectorXd::Constant(1, std::exp(target) - std::exp(x[0]));
        m.hessian = Eigen::MatrixXd::Constant(1, 1, -std::exp(x[0]));
        return m;
    };
    TrustRegionOptions opts;
    opts.initial_radius = 20.0;
    TrustRegionResult res;
    CHECK_NOTHROW(res = trust_region_maximize(f, Eigen::VectorXd::Constant(1, 5.0), opts));
    CHECK(res.report.converged);
    CHECK(res.report.rejected_steps >= 1);
    CHECK(res.x[0] == doctest::Approx(target).epsilon(1e-9));

    auto bad = [](const Eigen::VectorXd&) {
        LocalModel m;
        m.ok = false;
        return m;
    };
    CHECK_THROWS_AS(trust_region_maximize(bad, Eigen::VectorXd::Zero(2)), ConvergenceError);
}

TEST_CASE("trust-region invariants") {
    for (int n : {2, 4, 6}) {
        CAPTURE(n);
        std::vector<Eigen::VectorXd> points;
        std::vector<LocalModel> models;
        auto f = [&](const Eigen::VectorXd& x) {
            LocalModel m = neg_rosenbrock(x);
            points.push_back(x);
            models.push_back(m);
            return m;
        };
        Eigen::VectorXd x0 = Eigen::VectorXd::Constant(n, -1.2);
        x0[n - 1] = 1.0;
        TrustRegionOptions opts;
        opts.max_iterations = 500;
        const auto res = trust_region_maximize(f, x0, opts);
        CHECK(res.report.converged);
        CHECK((res.x - Eigen::VectorXd::Ones(n)).cwiseAbs().maxCoeff() < 1e-5);

        const auto& tr = res.report.trace;
        for (std::size_t k = 1; k < tr.size(); ++k) CHECK(tr[k] >= tr[k - 1]);
        const auto& radii = res.report.radii;
        const auto& norms = res.report.step_norms;
        REQUIRE(radii.size() == norms.size());
        for (std::size_t k = 0; k < radii.size(); ++k) CHECK(norms[k] <= radii[k] + 1e-12);

        // Replay the acceptance decisions from the evaluation log.
        std::size_t cur = 0;
        int rejected = 0;
        int expanded = 0;
        for (std::size_t k = 0; k + 1 < radii.size(); ++k) {
            const std::size_t prop = k + 1;
            const Eigen::VectorXd s = points[prop] - points[cur];
            const double predicted = model_value(models[cur].gradient, models[cur].hessian, s);
            const double actual = models[prop].value - models[cur].value;
            const bool boundary = std::abs(s.norm() - radii[k]) <= 1e-8 * radii[k];
            if (!(actual > 0.0)) {
                CHECK(radii[k + 1] < radii[k]);
                ++rejected;
            } else {
                if (actual / predicted > opts.eta_high && boundary && radii[k] < opts.max_radius) {
                    CHECK(radii[k + 1] > radii[k]);
                    ++expanded;
                }
                cur = prop;
            }
        }
        CHECK(rejected + expanded > 0);
    }
}

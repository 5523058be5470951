#include <cmath>
#include <limits>
#include <random>

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/quadrature/tanh_sinh.hpp>

#include "doctest.h"
#include "rgamlss/correction.hpp"
#include "rgamlss/error.hpp"
#include "rgamlss/quadrature.hpp"
#include "rgamlss/rho.hpp"
#include "toys.hpp"

using namespace rgamlss;

namespace {

double logistic(double x) { return 1.0 / (1.0 + std::exp(-x)); }

}  // namespace

TEST_CASE("rho reference values") {
    for (double c : {0.5, 2.0, 7.0}) CHECK(LogLogisticRho(c).rho(0.0) == 0.0);
    CHECK(LogLogisticRho(2.0).rho(-5.0) == doctest::Approx(-2.078340659469230).epsilon(1e-14));
    const LogLogisticRho r50(50.0);
    for (double z = -10.0; z <= 10.0; z += 0.25) CHECK(std::abs(r50.rho(z) - z) < 1e-15);
    const LogLogisticRho r(3.0);
    CHECK(std::isfinite(r.rho(700.0)));
    CHECK(std::isfinite(r.rho(-700.0)));
    CHECK(r.rho(700.0) == doctest::Approx(700.0 - std::log1p(std::exp(3.0)) + 3.0));
}

TEST_CASE("rho derivatives") {
    std::mt19937_64 rng(21);
    std::uniform_real_distribution<double> uz(-20.0, 5.0);
    std::uniform_real_distribution<double> uc(0.5, 10.0);
    for (int k = 0; k < 100; ++k) {
        const double z = uz(rng);
        const LogLogisticRho r(uc(rng));
        const double h = 1e-5;
        CHECK(std::abs((r.rho(z + h) - r.rho(z - h)) / (2 * h) - r.rho_prime(z)) < 1e-8);
        CHECK(std::abs((r.rho_prime(z + h) - r.rho_prime(z - h)) / (2 * h) - r.rho_second(z)) < 1e-8);
        CHECK(r.rho_prime(z) >= 0.0);
        CHECK(r.rho_prime(z) <= 1.0);
    }
    for (double c : {0.7, 3.1, 5.8}) CHECK(LogLogisticRho(c).rho_prime(-c) == doctest::Approx(0.5).epsilon(1e-15));
    CHECK(LogLogisticRho(2.0).rho_prime(800.0) == 1.0);
    CHECK(LogLogisticRho(2.0).rho_prime(-800.0) == 0.0);
}

TEST_CASE("rho_prime is non-decreasing in c") {
    for (double z = -30.0; z <= 5.0; z += 0.5) {
        double prev = 0.0;
        for (double c = 0.25; c < 40.0; c *= 1.5) {
            const double w = LogLogisticRho(c).rho_prime(z);
            CHECK(w >= prev);
            prev = w;
        }
    }
}

TEST_CASE("rho_star matches its defining integral") {
    const LogLogisticRho r(2.0);
    CHECK(r.rho_star(-800.0) == 0.0);
    CHECK(r.rho_star(-60.0) < 1e-40);
    CHECK(r.rho_star(0.0) == doctest::Approx(0.7121515952016140).epsilon(1e-14));

    auto integrand = [](double s) { return std::exp(s) * logistic(s + 2.0); };
    const double numeric = boost::math::quadrature::gauss_kronrod<double, 61>::integrate(
        integrand, -std::numeric_limits<double>::infinity(), 0.0, 15, 1e-13);
    CHECK(r.rho_star(0.0) == doctest::Approx(numeric).epsilon(1e-11));

    std::mt19937_64 rng(22);
    std::uniform_real_distribution<double> uz(-15.0, 3.0);
    for (int k = 0; k < 50; ++k) {
        const double z = uz(rng);
        const double h = 1e-5;
        const double fd = (r.rho_star(z + h) - r.rho_star(z - h)) / (2 * h);
        CHECK(fd == doctest::Approx(std::exp(z) * r.rho_prime(z)).epsilon(1e-7));
    }

    const LogLogisticRho r50(50.0);
    for (double z = -40.0; z <= 0.0; z += 0.5) CHECK(std::abs(r50.rho_star(z) - std::exp(z)) < 1e-10);
    CHECK(IdentityRho().rho_star(-1.5) == doctest::Approx(std::exp(-1.5)));
}

TEST_CASE("the e^{+c} variant of rho_star fails the defining derivative") {
    // e^z - e^{c} log(1 + e^{z+c}) is not an antiderivative of e^z rho'(z).
    const double c = 2.0;
    auto variant = [c](double z) { return std::exp(z) - std::exp(c) * std::log1p(std::exp(z + c)); };
    const LogLogisticRho r(c);
    const double z = -1.0;
    const double h = 1e-5;
    const double fd = (variant(z + h) - variant(z - h)) / (2 * h);
    CHECK(std::abs(fd - std::exp(z) * r.rho_prime(z)) > 1.0);
}

TEST_CASE("Gauss-Legendre rule") {
    const auto& rule = GaussLegendreRule::default_rule();
    REQUIRE(rule.size() == 40);
    double wsum = 0.0;
    double m78 = 0.0;
    double m79 = 0.0;
    for (int i = 0; i < rule.size(); ++i) {
        const double x = rule.nodes()[static_cast<std::size_t>(i)];
        const double w = rule.weights()[static_cast<std::size_t>(i)];
        wsum += w;
        m78 += w * std::pow(x, 78);
        m79 += w * std::pow(x, 79);
    }
    CHECK(wsum == doctest::Approx(2.0).epsilon(1e-15));
    CHECK(m78 == doctest::Approx(2.0 / 79.0).epsilon(1e-13));
    CHECK(std::abs(m79) < 1e-15);
}

TEST_CASE("adaptive quadrature") {
    AdaptiveGaussLegendre quad;
    const std::vector<double> bp{0.0, 1.0, 3.0};
    AdaptiveStats stats;
    const auto v = quad.integrate(
        [](std::span<const double> x, std::span<double> out) {
            for (std::size_t i = 0; i < x.size(); ++i) {
                out[2 * i] = std::exp(x[i]);
                out[2 * i + 1] = 1.0 / std::sqrt(x[i]);
            }
        },
        bp, 2, &stats);
    CHECK(v[0] == doctest::Approx(std::exp(3.0) - 1.0).epsilon(1e-13));
    // Endpoint singularity: panel agreement understates the error slightly.
    CHECK(v[1] == doctest::Approx(2.0 * std::sqrt(3.0)).epsilon(1e-8));
    CHECK(stats.panels > 2);

    AdaptiveOptions tight;
    tight.max_panels = 4;
    tight.rel_tol = 1e-14;
    AdaptiveGaussLegendre small(GaussLegendreRule::default_rule(), tight);
    const std::vector<double> bp2{1e-6, 1.0};
    CHECK_THROWS_AS(small.integrate(
                        [](std::span<const double> x, std::span<double> out) {
                            for (std::size_t i = 0; i < x.size(); ++i) out[i] = std::sin(1.0 / x[i]);
                        },
                        bp2, 1),
                    QuadratureError);
}

TEST_CASE("correction term large-c limit") {
    const CorrectionIntegrator integ;
    const auto rho = make_log_logistic_rho(50.0);
    std::mt19937_64 rng(23);
    std::uniform_real_distribution<double> u(-2.0, 2.0);
    for (const auto& code : implemented_family_codes()) {
        CAPTURE(code);
        const auto f = make_family(code);
        const Eigen::Vector3d eta(u(rng) + (code == "N" ? 0.0 : 0.5), 0.3 * u(rng), 0.0);
        CHECK(correction_term(*f, eta, *rho, integ) == doctest::Approx(1.0).epsilon(1e-6));
        CHECK(correction_gradient(*f, eta, *rho, integ).cwiseAbs().maxCoeff() < 1e-6);
        CHECK(correction_hessian(*f, eta, *rho, integ).cwiseAbs().maxCoeff() < 1e-5);
    }
}

TEST_CASE("correction term oracles") {
    const CorrectionIntegrator integ;
    SUBCASE("Poisson truncated sum") {
        const auto f = make_family("PO");
        const LogLogisticRho r(2.0);
        double brute = 0.0;
        for (int y = 0; y <= 300; ++y) brute += r.rho_star(f->log_density(y, {1.0, 0.0, 0.0}));
        const double b = correction_term(*f, Eigen::Vector3d(0.0, 0.0, 0.0), r, integ);
        CHECK(b == doctest::Approx(brute).epsilon(1e-12));
        CHECK(b == doctest::Approx(0.4596656755635575).epsilon(1e-12));
    }
    SUBCASE("gamma dense trapezoid") {
        const auto f = make_family("GA");
        const LogLogisticRho r(3.0);
        const ParamVector t{1.0, 0.5, 0.0};
        const double upper = f->quantile(0.999999, t);
        const int m = 2'000'000;
        const double h = upper / m;
        double trap = 0.0;
        for (int i = 1; i < m; ++i) trap += r.rho_star(f->log_density(i * h, t));
        trap += 0.5 * r.rho_star(f->log_density(upper, t));
        trap *= h;
        const double b = correction_term(*f, f->predictors_from_params(t), r, integ);
        CHECK(std::abs(b - trap) < 1e-7);
        CHECK(b == doctest::Approx(0.7572448994556231).epsilon(1e-10));
    }
    SUBCASE("normal high precision") {
        const auto f = make_family("N");
        const LogLogisticRho r(2.0);
        CHECK(correction_term(*f, Eigen::Vector3d(0.0, 0.0, 0.0), r, integ) ==
              doctest::Approx(0.4367471220104325).epsilon(1e-10));
    }
}

TEST_CASE("correction derivatives") {
    const CorrectionIntegrator integ;
    SUBCASE("Poisson gradient") {
        const auto f = make_family("PO");
        const LogLogisticRho r(2.0);
        const Eigen::Vector3d eta(std::log(2.0), 0.0, 0.0);
        const double h = 1e-5;
        const double fd = (correction_term(*f, eta + Eigen::Vector3d(h, 0, 0), r, integ) -
                           correction_term(*f, eta - Eigen::Vector3d(h, 0, 0), r, integ)) /
                          (2 * h);
        CHECK(std::abs(correction_gradient(*f, eta, r, integ)[0] - fd) < 1e-6);
    }
    SUBCASE("symmetric Gaussian location") {
        const auto f = make_family("N");
        for (double c : {1.0, 2.0, 4.0}) {
            const LogLogisticRho r(c);
            CHECK(std::abs(correction_gradient(*f, Eigen::Vector3d(0.7, -0.2, 0.0), r, integ)[0]) < 1e-8);
        }
    }
    SUBCASE("Hessian against differenced gradients") {
        std::mt19937_64 rng(24);
        const auto codes = implemented_family_codes();
        std::uniform_int_distribution<std::size_t> pick(0, codes.size() - 1);
        std::uniform_real_distribution<double> u(-1.0, 1.0);
        std::uniform_real_distribution<double> uc(1.0, 6.0);
        for (int k = 0; k < 20; ++k) {
            const auto f = make_family(codes[pick(rng)]);
            CAPTURE(f->code());
            const LogLogisticRho r(uc(rng));
            const int np = f->n_params();
            Eigen::Vector3d eta(0.5 + u(rng), 0.4 * u(rng), 0.0);
            if (f->code() == "NBI") eta[1] = -1.0 + 0.5 * u(rng);
            auto grad = [&](const Eigen::VectorXd& e) {
                Eigen::Vector3d full = Eigen::Vector3d::Zero();
                full.head(np) = e;
                return Eigen::VectorXd(correction_gradient(*f, full, r, integ).head(np));
            };
            auto value = [&](const Eigen::VectorXd& e) {
                Eigen::Vector3d full = Eigen::Vector3d::Zero();
                full.head(np) = e;
                return correction_term(*f, full, r, integ);
            };
            const Eigen::VectorXd e = eta.head(np);
            const Eigen::MatrixXd H = correction_hessian(*f, eta, r, integ).topLeftCorner(np, np);
            CHECK(test::scaled_error(H, test::central_jacobian(grad, e, 1e-4)) < 1e-5);
            CHECK(test::scaled_error(grad(e), test::central_gradient(value, e, 1e-4)) < 1e-6);
            CHECK((H - H.transpose()).cwiseAbs().maxCoeff() == 0.0);
        }
    }
}

TEST_CASE("score expectation vanishes") {
    // E_f[rho'(l) dl/deta] - db/deta = 0 with the expectation taken by independent quadrature.
    const CorrectionIntegrator integ;
    const LogLogisticRho r(2.5);
    SUBCASE("gamma") {
        const auto f = make_family("GA");
        const Eigen::Vector3d eta(0.4, -0.6, 0.0);
        const ParamVector t = f->params_from_predictors(eta);
        boost::math::quadrature::tanh_sinh<double> ts;
        Eigen::Vector2d e;
        for (int d = 0; d < 2; ++d) {
            e[d] = ts.integrate(
                [&](double y) {
                    const auto pd = d_log_density(*f, y, eta, 1);
                    return std::exp(pd.logf) * r.rho_prime(pd.logf) * pd.d1[d];
                },
                0.0, std::numeric_limits<double>::infinity());
        }
        const Eigen::Vector3d g = correction_gradient(*f, eta, r, integ);
        CHECK(std::abs(e[0] - g[0]) < 1e-9);
        CHECK(std::abs(e[1] - g[1]) < 1e-9);
        (void)t;
    }
    SUBCASE("negative binomial") {
        const auto f = make_family("NBI");
        const Eigen::Vector3d eta(1.5, -0.5, 0.0);
        Eigen::Vector2d e = Eigen::Vector2d::Zero();
        for (int y = 0; y < 3000; ++y) {
            const auto pd = d_log_density(*f, y, eta, 1);
            e += std::exp(pd.logf) * r.rho_prime(pd.logf) * pd.d1.head(2);
        }
        const Eigen::Vector3d g = correction_gradient(*f, eta, r, integ);
        CHECK(std::abs(e[0] - g[0]) < 1e-9);
        CHECK(std::abs(e[1] - g[1]) < 1e-9);
    }
}

TEST_CASE("bounded influence") {
    // sup_y |rho'(l) dl/deta_1| over a dense grid shrinks as c decreases.
    const auto f = make_family("N");
    const Eigen::Vector3d eta(0.0, 0.0, 0.0);
    auto sup_score = [&](const RhoFunction& r, double range) {
        double s = 0.0;
        for (double y = -range; y <= range; y += 0.01) {
            const auto pd = d_log_density(*f, y, eta, 1);
            s = std::max(s, std::abs(r.rho_prime(pd.logf) * pd.d1[0]));
        }
        return s;
    };
    double prev = std::numeric_limits<double>::infinity();
    for (double c : {8.0, 4.0, 2.0, 1.0}) {
        const LogLogisticRho r(c);
        const double s = sup_score(r, 50.0);
        CHECK(std::isfinite(s));
        CHECK(s == doctest::Approx(sup_score(r, 100.0)).epsilon(1e-12));
        CHECK(s < prev);
        prev = s;
    }
    CHECK(sup_score(IdentityRho(), 100.0) > 1.9 * sup_score(IdentityRho(), 50.0));
}

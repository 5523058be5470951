#include "rgamlss/families.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>

#include <boost/math/special_functions/beta.hpp>
#include <boost/math/special_functions/digamma.hpp>
#include <boost/math/special_functions/erf.hpp>
#include <boost/math/special_functions/gamma.hpp>
#include <boost/math/special_functions/trigamma.hpp>

#include "rgamlss/error.hpp"

namespace rgamlss {

namespace {

constexpr double kLogSqrt2Pi = 0.91893853320467274178;
constexpr double kEulerGamma = 0.57721566490153286061;

double open_uniform(std::mt19937_64& rng) {
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    double u = 0.0;
    do {
        u = unif(rng);
    } while (u <= 0.0 || u >= 1.0);
    return u;
}

double std_normal_cdf(double z) { return 0.5 * std::erfc(-z / std::numbers::sqrt2); }

double std_normal_quantile(double p) {
    return -std::numbers::sqrt2 * boost::math::erfc_inv(2.0 * p);
}

double sigmoid(double x) {
    if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
    const double e = std::exp(x);
    return e / (1.0 + e);
}

bool positive_finite(double v) { return std::isfinite(v) && v > 0.0; }

struct SampleMoments {
    double mean = 0.0;
    double var = 0.0;
};

SampleMoments moments(std::span<const double> y) {
    SampleMoments m;
    if (y.empty()) return m;
    m.mean = std::accumulate(y.begin(), y.end(), 0.0) / static_cast<double>(y.size());
    double ss = 0.0;
    for (double v : y) ss += (v - m.mean) * (v - m.mean);
    m.var = y.size() > 1 ? ss / static_cast<double>(y.size() - 1) : 0.0;
    return m;
}

// Location-scale families with log f = -log(sigma) + phi((y - mu) / sigma).
// Callers fill phi, phi' and phi'' at u; this turns them into (mu, sigma) derivatives.
void location_scale_derivs(double u, double sigma, double phi, double dphi, double d2phi,
                           int order, ParamDerivatives& out) {
    out.logf = -std::log(sigma) + phi;
    out.d1.setZero();
    out.d2.setZero();
    if (order < 1) return;
    out.d1[0] = -dphi / sigma;
    out.d1[1] = (-1.0 - u * dphi) / sigma;
    if (order < 2) return;
    const double s2 = sigma * sigma;
    out.d2(0, 0) = d2phi / s2;
    out.d2(0, 1) = out.d2(1, 0) = (dphi + u * d2phi) / s2;
    out.d2(1, 1) = (1.0 + 2.0 * u * dphi + u * u * d2phi) / s2;
}

class NormalFamily final : public Family {
public:
    explicit NormalFamily(std::array<Link, 3> links)
        : Family("N", 2, Support{}, links) {}

    bool admissible(const ParamVector& t) const override {
        return std::isfinite(t[0]) && positive_finite(t[1]);
    }

    void log_density_batch(std::span<const double> y, const ParamVector& t,
                           std::span<double> out) const override {
        const double ls = std::log(t[1]);
        for (std::size_t j = 0; j < y.size(); ++j) {
            const double u = (y[j] - t[0]) / t[1];
            out[j] = -ls - kLogSqrt2Pi - 0.5 * u * u;
        }
    }

    void derivatives_batch(std::span<const double> y, const ParamVector& t, int order,
                           std::span<ParamDerivatives> out) const override {
        for (std::size_t j = 0; j < y.size(); ++j) {
            const double u = (y[j] - t[0]) / t[1];
            location_scale_derivs(u, t[1], -kLogSqrt2Pi - 0.5 * u * u, -u, -1.0, order, out[j]);
        }
    }

    double mean(const ParamVector& t) const override { return t[0]; }
    double variance(const ParamVector& t) const override { return t[1] * t[1]; }
    double cdf(double y, const ParamVector& t) const override {
        return std_normal_cdf((y - t[0]) / t[1]);
    }
    double quantile(double p, const ParamVector& t) const override {
        return t[0] + t[1] * std_normal_quantile(p);
    }
    ParamVector moment_estimates(std::span<const double> y) const override {
        const auto m = moments(y);
        return {m.mean, std::sqrt(std::max(m.var, 1e-8)), 0.0};
    }

protected:
    double sample_unchecked(const ParamVector& t, std::mt19937_64& rng) const override {
        std::normal_distribution<double> d(t[0], t[1]);
        return d(rng);
    }
};

class LogNormalFamily final : public Family {
public:
    explicit LogNormalFamily(std::array<Link, 3> links)
        : Family("LN", 2, Support{SupportKind::ContinuousInterval, 0.0,
                                  std::numeric_limits<double>::infinity()},
                 links) {}

    bool admissible(const ParamVector& t) const override {
        return std::isfinite(t[0]) && positive_finite(t[1]);
    }

    void log_density_batch(std::span<const double> y, const ParamVector& t,
                           std::span<double> out) const override {
        const double ls = std::log(t[1]);
        for (std::size_t j = 0; j < y.size(); ++j) {
            const double ly = std::log(y[j]);
            const double u = (ly - t[0]) / t[1];
            out[j] = -ly - ls - kLogSqrt2Pi - 0.5 * u * u;
        }
    }

    void derivatives_batch(std::span<const double> y, const ParamVector& t, int order,
                           std::span<ParamDerivatives> out) const override {
        for (std::size_t j = 0; j < y.size(); ++j) {
            const double ly = std::log(y[j]);
            const double u = (ly - t[0]) / t[1];
            location_scale_derivs(u, t[1], -kLogSqrt2Pi - 0.5 * u * u, -u, -1.0, order, out[j]);
            out[j].logf -= ly;
        }
    }

    double mean(const ParamVector& t) const override {
        return std::exp(t[0] + 0.5 * t[1] * t[1]);
    }
    double variance(const ParamVector& t) const override {
        const double s2 = t[1] * t[1];
        return std::expm1(s2) * std::exp(2.0 * t[0] + s2);
    }
    double cdf(double y, const ParamVector& t) const override {
        if (y <= 0.0) return 0.0;
        return std_normal_cdf((std::log(y) - t[0]) / t[1]);
    }
    double quantile(double p, const ParamVector& t) const override {
        return std::exp(t[0] + t[1] * std_normal_quantile(p));
    }
    ParamVector moment_estimates(std::span<const double> y) const override {
        std::vector<double> ly(y.size());
        std::transform(y.begin(), y.end(), ly.begin(), [](double v) { return std::log(v); });
        const auto m = moments(ly);
        return {m.mean, std::sqrt(std::max(m.var, 1e-8)), 0.0};
    }

protected:
    double sample_unchecked(const ParamVector& t, std::mt19937_64& rng) const override {
        std::lognormal_distribution<double> d(t[0], t[1]);
        return d(rng);
    }
};

// Gamma with E(Y) = mu and V(Y) = sigma^2 mu^2, i.e. shape 1/sigma^2.
class GammaFamily final : public Family {
public:
    explicit GammaFamily(std::array<Link, 3> links)
        : Family("GA", 2, Support{SupportKind::ContinuousInterval, 0.0,
                                  std::numeric_limits<double>::infinity()},
                 links) {}

    bool admissible(const ParamVector& t) const override {
        return positive_finite(t[0]) && positive_finite(t[1]);
    }

    void log_density_batch(std::span<const double> y, const ParamVector& t,
                           std::span<double> out) const override {
        const double mu = t[0];
        const double a = 1.0 / (t[1] * t[1]);
        const double cst = -a * std::log(mu) + a * std::log(a) - std::lgamma(a);
        for (std::size_t j = 0; j < y.size(); ++j) {
            out[j] = (a - 1.0) * std::log(y[j]) - a * y[j] / mu + cst;
        }
    }

    void derivatives_batch(std::span<const double> y, const ParamVector& t, int order,
                           std::span<ParamDerivatives> out) const override {
        const double mu = t[0];
        const double sigma = t[1];
        const double a = 1.0 / (sigma * sigma);
        const double log_mu = std::log(mu);
        const double log_a = std::log(a);
        const double cst = -a * log_mu + a * log_a - std::lgamma(a);
        double da = 0.0, d2a = 0.0, psi = 0.0, psi1 = 0.0;
        if (order >= 1) {
            da = -2.0 / (sigma * sigma * sigma);
            psi = boost::math::digamma(a);
        }
        if (order >= 2) {
            d2a = 6.0 / (sigma * sigma * sigma * sigma);
            psi1 = boost::math::trigamma(a);
        }
        for (std::size_t j = 0; j < y.size(); ++j) {
            auto& o = out[j];
            const double yj = y[j];
            const double ly = std::log(yj);
            o.logf = (a - 1.0) * ly - a * yj / mu + cst;
            o.d1.setZero();
            o.d2.setZero();
            if (order < 1) continue;
            const double l_mu = a * (yj - mu) / (mu * mu);
            const double l_a = ly - yj / mu - log_mu + log_a + 1.0 - psi;
            o.d1[0] = l_mu;
            o.d1[1] = l_a * da;
            if (order < 2) continue;
            const double l_mumu = a / (mu * mu) - 2.0 * a * yj / (mu * mu * mu);
            const double l_aa = 1.0 / a - psi1;
            const double l_mua = (yj - mu) / (mu * mu);
            o.d2(0, 0) = l_mumu;
            o.d2(0, 1) = o.d2(1, 0) = l_mua * da;
            o.d2(1, 1) = l_aa * da * da + l_a * d2a;
        }
    }

    double mean(const ParamVector& t) const override { return t[0]; }
    double variance(const ParamVector& t) const override {
        return t[0] * t[0] * t[1] * t[1];
    }
    double cdf(double y, const ParamVector& t) const override {
        if (y <= 0.0) return 0.0;
        const double a = 1.0 / (t[1] * t[1]);
        return boost::math::gamma_p(a, y * a / t[0]);
    }
    double quantile(double p, const ParamVector& t) const override {
        const double a = 1.0 / (t[1] * t[1]);
        return boost::math::gamma_p_inv(a, p) * t[0] / a;
    }
    ParamVector moment_estimates(std::span<const double> y) const override {
        const auto m = moments(y);
        const double mu = std::max(m.mean, 1e-8);
        return {mu, std::max(std::sqrt(m.var) / mu, 1e-3), 0.0};
    }

protected:
    double sample_unchecked(const ParamVector& t, std::mt19937_64& rng) const override {
        const double a = 1.0 / (t[1] * t[1]);
        std::gamma_distribution<double> d(a, t[0] / a);
        return d(rng);
    }
};

// Weibull with scale mu and shape sigma.
class WeibullFamily final : public Family {
public:
    explicit WeibullFamily(std::array<Link, 3> links)
        : Family("WEI", 2, Support{SupportKind::ContinuousInterval, 0.0,
                                   std::numeric_limits<double>::infinity()},
                 links) {}

    bool admissible(const ParamVector& t) const override {
        return positive_finite(t[0]) && positive_finite(t[1]);
    }

    void log_density_batch(std::span<const double> y, const ParamVector& t,
                           std::span<double> out) const override {
        const double mu = t[0];
        const double sigma = t[1];
        const double cst = std::log(sigma) - std::log(mu);
        const double lmu = std::log(mu);
        for (std::size_t j = 0; j < y.size(); ++j) {
            const double tt = std::log(y[j]) - lmu;
            out[j] = cst + (sigma - 1.0) * tt - std::exp(sigma * tt);
        }
    }

    void derivatives_batch(std::span<const double> y, const ParamVector& t, int order,
                           std::span<ParamDerivatives> out) const override {
        const double mu = t[0];
        const double sigma = t[1];
        const double lmu = std::log(mu);
        const double cst = std::log(sigma) - lmu;
        for (std::size_t j = 0; j < y.size(); ++j) {
            auto& o = out[j];
            const double tt = std::log(y[j]) - lmu;
            const double z = std::exp(sigma * tt);
            o.logf = cst + (sigma - 1.0) * tt - z;
            o.d1.setZero();
            o.d2.setZero();
            if (order < 1) continue;
            o.d1[0] = sigma * (z - 1.0) / mu;
            o.d1[1] = 1.0 / sigma + tt - tt * z;
            if (order < 2) continue;
            o.d2(0, 0) = -sigma * (sigma * z + z - 1.0) / (mu * mu);
            o.d2(0, 1) = o.d2(1, 0) = (z - 1.0) / mu + sigma * tt * z / mu;
            o.d2(1, 1) = -1.0 / (sigma * sigma) - tt * tt * z;
        }
    }

    double mean(const ParamVector& t) const override {
        return t[0] * std::tgamma(1.0 / t[1] + 1.0);
    }
    double variance(const ParamVector& t) const override {
        const double g1 = std::tgamma(1.0 / t[1] + 1.0);
        return t[0] * t[0] * (std::tgamma(2.0 / t[1] + 1.0) - g1 * g1);
    }
    double cdf(double y, const ParamVector& t) const override {
        if (y <= 0.0) return 0.0;
        return -std::expm1(-std::pow(y / t[0], t[1]));
    }
    double quantile(double p, const ParamVector& t) const override {
        return t[0] * std::pow(-std::log1p(-p), 1.0 / t[1]);
    }
    ParamVector moment_estimates(std::span<const double> y) const override {
        const auto m = moments(y);
        const double mean = std::max(m.mean, 1e-8);
        const double cv = std::max(std::sqrt(m.var) / mean, 1e-3);
        const double shape = std::clamp(std::pow(cv, -1.086), 0.1, 50.0);
        return {mean / std::tgamma(1.0 + 1.0 / shape), shape, 0.0};
    }

protected:
    double sample_unchecked(const ParamVector& t, std::mt19937_64& rng) const override {
        std::weibull_distribution<double> d(t[1], t[0]);
        return d(rng);
    }
};

// Gumbel (minimum) with log f = -log sigma + u - exp(u).
class GumbelFamily final : public Family {
public:
    explicit GumbelFamily(std::array<Link, 3> links) : Family("GU", 2, Support{}, links) {}

    bool admissible(const ParamVector& t) const override {
        return std::isfinite(t[0]) && positive_finite(t[1]);
    }

    void log_density_batch(std::span<const double> y, const ParamVector& t,
                           std::span<double> out) const override {
        const double ls = std::log(t[1]);
        for (std::size_t j = 0; j < y.size(); ++j) {
            const double u = (y[j] - t[0]) / t[1];
            out[j] = -ls + u - std::exp(u);
        }
    }

    void derivatives_batch(std::span<const double> y, const ParamVector& t, int order,
                           std::span<ParamDerivatives> out) const override {
        for (std::size_t j = 0; j < y.size(); ++j) {
            const double u = (y[j] - t[0]) / t[1];
            const double eu = std::exp(u);
            location_scale_derivs(u, t[1], u - eu, 1.0 - eu, -eu, order, out[j]);
        }
    }

    double mean(const ParamVector& t) const override { return t[0] - kEulerGamma * t[1]; }
    double variance(const ParamVector& t) const override {
        return std::numbers::pi * std::numbers::pi * t[1] * t[1] / 6.0;
    }
    double cdf(double y, const ParamVector& t) const override {
        return -std::expm1(-std::exp((y - t[0]) / t[1]));
    }
    double quantile(double p, const ParamVector& t) const override {
        return t[0] + t[1] * std::log(-std::log1p(-p));
    }
    ParamVector moment_estimates(std::span<const double> y) const override {
        const auto m = moments(y);
        const double sigma = std::max(std::sqrt(m.var) * std::sqrt(6.0) / std::numbers::pi, 1e-4);
        return {m.mean + kEulerGamma * sigma, sigma, 0.0};
    }

protected:
    double sample_unchecked(const ParamVector& t, std::mt19937_64& rng) const override {
        return quantile(open_uniform(rng), t);
    }
};

class LogisticFamily final : public Family {
public:
    explicit LogisticFamily(std::array<Link, 3> links) : Family("LO", 2, Support{}, links) {}

    bool admissible(const ParamVector& t) const override {
        return std::isfinite(t[0]) && positive_finite(t[1]);
    }

    void log_density_batch(std::span<const double> y, const ParamVector& t,
                           std::span<double> out) const override {
        const double ls = std::log(t[1]);
        for (std::size_t j = 0; j < y.size(); ++j) {
            const double au = std::abs((y[j] - t[0]) / t[1]);
            out[j] = -ls - au - 2.0 * std::log1p(std::exp(-au));
        }
    }

    void derivatives_batch(std::span<const double> y, const ParamVector& t, int order,
                           std::span<ParamDerivatives> out) const override {
        for (std::size_t j = 0; j < y.size(); ++j) {
            const double u = (y[j] - t[0]) / t[1];
            const double au = std::abs(u);
            const double s = sigmoid(u);
            location_scale_derivs(u, t[1], -au - 2.0 * std::log1p(std::exp(-au)), 1.0 - 2.0 * s,
                                  -2.0 * s * (1.0 - s), order, out[j]);
        }
    }

    double mean(const ParamVector& t) const override { return t[0]; }
    double variance(const ParamVector& t) const override {
        return std::numbers::pi * std::numbers::pi * t[1] * t[1] / 3.0;
    }
    double cdf(double y, const ParamVector& t) const override {
        return sigmoid((y - t[0]) / t[1]);
    }
    double quantile(double p, const ParamVector& t) const override {
        return t[0] + t[1] * (std::log(p) - std::log1p(-p));
    }
    ParamVector moment_estimates(std::span<const double> y) const override {
        const auto m = moments(y);
        return {m.mean, std::max(std::sqrt(m.var * 3.0) / std::numbers::pi, 1e-4), 0.0};
    }

protected:
    double sample_unchecked(const ParamVector& t, std::mt19937_64& rng) const override {
        return quantile(open_uniform(rng), t);
    }
};

// Shared CDF inversion for the count families: unimodal pmf, walk from the mean.
double discrete_quantile(const Family& f, double p, const ParamVector& t) {
    const double lower = f.support().lower;
    double k = std::max(lower, std::floor(f.mean(t)));
    while (k > lower && f.cdf(k - 1.0, t) >= p) k -= 1.0;
    while (f.cdf(k, t) < p) k += 1.0;
    return k;
}

class PoissonFamily final : public Family {
public:
    explicit PoissonFamily(std::array<Link, 3> links)
        : Family("PO", 1, Support{SupportKind::NonNegativeIntegers, 0.0,
                                  std::numeric_limits<double>::infinity()},
                 links) {}

    bool admissible(const ParamVector& t) const override { return positive_finite(t[0]); }

    void log_density_batch(std::span<const double> y, const ParamVector& t,
                           std::span<double> out) const override {
        const double lmu = std::log(t[0]);
        for (std::size_t j = 0; j < y.size(); ++j) {
            out[j] = y[j] * lmu - t[0] - std::lgamma(y[j] + 1.0);
        }
    }

    void derivatives_batch(std::span<const double> y, const ParamVector& t, int order,
                           std::span<ParamDerivatives> out) const override {
        const double mu = t[0];
        const double lmu = std::log(mu);
        for (std::size_t j = 0; j < y.size(); ++j) {
            auto& o = out[j];
            o.logf = y[j] * lmu - mu - std::lgamma(y[j] + 1.0);
            o.d1.setZero();
            o.d2.setZero();
            if (order >= 1) o.d1[0] = y[j] / mu - 1.0;
            if (order >= 2) o.d2(0, 0) = -y[j] / (mu * mu);
        }
    }

    double mean(const ParamVector& t) const override { return t[0]; }
    double variance(const ParamVector& t) const override { return t[0]; }
    double cdf(double y, const ParamVector& t) const override {
        if (y < 0.0) return 0.0;
        return boost::math::gamma_q(std::floor(y) + 1.0, t[0]);
    }
    double quantile(double p, const ParamVector& t) const override {
        return discrete_quantile(*this, p, t);
    }
    double mode(const ParamVector& t) const override { return std::floor(t[0]); }
    ParamVector moment_estimates(std::span<const double> y) const override {
        return {std::max(moments(y).mean, 1e-8), 0.0, 0.0};
    }

protected:
    double sample_unchecked(const ParamVector& t, std::mt19937_64& rng) const override {
        std::poisson_distribution<long long> d(t[0]);
        return static_cast<double>(d(rng));
    }
};

// Negative binomial type I: E(Y) = mu, V(Y) = mu + sigma mu^2.
class NegBinomialFamily final : public Family {
public:
    explicit NegBinomialFamily(std::array<Link, 3> links)
        : Family("NBI", 2, Support{SupportKind::NonNegativeIntegers, 0.0,
                                   std::numeric_limits<double>::infinity()},
                 links) {}

    bool admissible(const ParamVector& t) const override {
        return positive_finite(t[0]) && positive_finite(t[1]);
    }

    void log_density_batch(std::span<const double> y, const ParamVector& t,
                           std::span<double> out) const override {
        const double mu = t[0];
        const double sigma = t[1];
        const double a = 1.0 / sigma;
        const double lq = std::log1p(sigma * mu);
        const double lsm = std::log(sigma * mu);
        const double lga = std::lgamma(a);
        for (std::size_t j = 0; j < y.size(); ++j) {
            const double yj = y[j];
            out[j] = std::lgamma(yj + a) - lga - std::lgamma(yj + 1.0) + yj * lsm - (yj + a) * lq;
        }
    }

    void derivatives_batch(std::span<const double> y, const ParamVector& t, int order,
                           std::span<ParamDerivatives> out) const override {
        const double mu = t[0];
        const double sigma = t[1];
        const double a = 1.0 / sigma;
        const double q = 1.0 + sigma * mu;
        const double lq = std::log1p(sigma * mu);
        const double lsm = std::log(sigma * mu);
        const double lga = std::lgamma(a);
        const double da = -1.0 / (sigma * sigma);
        const double d2a = 2.0 / (sigma * sigma * sigma);
        double psi_a = 0.0, psi1_a = 0.0;
        if (order >= 1) psi_a = boost::math::digamma(a);
        if (order >= 2) psi1_a = boost::math::trigamma(a);
        for (std::size_t j = 0; j < y.size(); ++j) {
            auto& o = out[j];
            const double yj = y[j];
            o.logf = std::lgamma(yj + a) - lga - std::lgamma(yj + 1.0) + yj * lsm - (yj + a) * lq;
            o.d1.setZero();
            o.d2.setZero();
            if (order < 1) continue;
            const double dpsi = boost::math::digamma(yj + a) - psi_a;
            const double big_a = dpsi - lq;
            o.d1[0] = yj / mu - (yj + a) * sigma / q;
            o.d1[1] = da * big_a + yj / sigma - (yj + a) * mu / q;
            if (order < 2) continue;
            const double dpsi1 = boost::math::trigamma(yj + a) - psi1_a;
            o.d2(0, 0) = -yj / (mu * mu) + (yj + a) * sigma * sigma / (q * q);
            o.d2(0, 1) = o.d2(1, 0) = 1.0 / (sigma * q) - (yj + a) / (q * q);
            o.d2(1, 1) = d2a * big_a + da * da * dpsi1 - 2.0 * da * mu / q - yj / (sigma * sigma) +
                         (yj + a) * mu * mu / (q * q);
        }
    }

    double mean(const ParamVector& t) const override { return t[0]; }
    double variance(const ParamVector& t) const override {
        return t[0] + t[1] * t[0] * t[0];
    }
    double cdf(double y, const ParamVector& t) const override {
        if (y < 0.0) return 0.0;
        const double a = 1.0 / t[1];
        const double p = 1.0 / (1.0 + t[1] * t[0]);
        return boost::math::ibeta(a, std::floor(y) + 1.0, p);
    }
    double quantile(double p, const ParamVector& t) const override {
        return discrete_quantile(*this, p, t);
    }
    double mode(const ParamVector& t) const override {
        return std::max(0.0, std::floor(t[0] * (1.0 - t[1])));
    }
    ParamVector moment_estimates(std::span<const double> y) const override {
        const auto m = moments(y);
        const double mu = std::max(m.mean, 1e-8);
        return {mu, std::clamp((m.var - mu) / (mu * mu), 0.05, 10.0), 0.0};
    }

protected:
    double sample_unchecked(const ParamVector& t, std::mt19937_64& rng) const override {
        const double a = 1.0 / t[1];
        std::gamma_distribution<double> g(a, t[0] / a);
        const double rate = g(rng);
        if (!(rate > 0.0)) return 0.0;
        std::poisson_distribution<long long> d(rate);
        return static_cast<double>(d(rng));
    }
};

// Zero-truncated Poisson: exp(-mu) mu^y / (y! (1 - exp(-mu))), y >= 1.
class ZeroTruncPoissonFamily final : public Family {
public:
    explicit ZeroTruncPoissonFamily(std::array<Link, 3> links)
        : Family("ZTP", 1, Support{SupportKind::PositiveIntegers, 1.0,
                                   std::numeric_limits<double>::infinity()},
                 links) {}

    bool admissible(const ParamVector& t) const override { return positive_finite(t[0]); }

    void log_density_batch(std::span<const double> y, const ParamVector& t,
                           std::span<double> out) const override {
        const double mu = t[0];
        const double cst = -mu - std::log(-std::expm1(-mu));
        const double lmu = std::log(mu);
        for (std::size_t j = 0; j < y.size(); ++j) {
            out[j] = y[j] * lmu - std::lgamma(y[j] + 1.0) + cst;
        }
    }

    void derivatives_batch(std::span<const double> y, const ParamVector& t, int order,
                           std::span<ParamDerivatives> out) const override {
        const double mu = t[0];
        const double lmu = std::log(mu);
        const double em1 = std::expm1(mu);
        const double cst = -mu - std::log(-std::expm1(-mu));
        const double curv = 1.0 / (em1 * -std::expm1(-mu));
        for (std::size_t j = 0; j < y.size(); ++j) {
            auto& o = out[j];
            o.logf = y[j] * lmu - std::lgamma(y[j] + 1.0) + cst;
            o.d1.setZero();
            o.d2.setZero();
            if (order >= 1) o.d1[0] = y[j] / mu - 1.0 - 1.0 / em1;
            if (order >= 2) o.d2(0, 0) = -y[j] / (mu * mu) + curv;
        }
    }

    double mean(const ParamVector& t) const override {
        return t[0] / -std::expm1(-t[0]);
    }
    double variance(const ParamVector& t) const override {
        const double mu = t[0];
        const double d = -std::expm1(-mu);
        return mu * (1.0 - std::exp(-mu) * (mu + 1.0)) / (d * d);
    }
    double cdf(double y, const ParamVector& t) const override {
        if (y < 1.0) return 0.0;
        const double mu = t[0];
        const double po = boost::math::gamma_q(std::floor(y) + 1.0, mu);
        return (po - std::exp(-mu)) / -std::expm1(-mu);
    }
    double quantile(double p, const ParamVector& t) const override {
        return discrete_quantile(*this, p, t);
    }
    double mode(const ParamVector& t) const override { return std::max(1.0, std::floor(t[0])); }
    ParamVector moment_estimates(std::span<const double> y) const override {
        const double m = std::max(moments(y).mean, 1.0 + 1e-6);
        // Solve mu / (1 - exp(-mu)) = m by fixed-point iteration.
        double mu = m;
        for (int it = 0; it < 100; ++it) mu = m * -std::expm1(-mu);
        return {std::max(mu, 1e-6), 0.0, 0.0};
    }

protected:
    double sample_unchecked(const ParamVector& t, std::mt19937_64& rng) const override {
        const double mu = t[0];
        if (mu >= 1.0) {
            std::poisson_distribution<long long> d(mu);
            for (;;) {
                const auto k = d(rng);
                if (k > 0) return static_cast<double>(k);
            }
        }
        // Inversion for small means where rejection would mostly draw zeros.
        const double u = open_uniform(rng);
        double k = 1.0;
        double pk = mu / std::expm1(mu);
        double cum = pk;
        while (cum < u && pk > 0.0) {
            k += 1.0;
            pk *= mu / k;
            cum += pk;
        }
        return k;
    }
};

template <class F>
FamilyPtr build(std::array<Link, 3> links) {
    return std::make_shared<const F>(links);
}

}  // namespace

bool Support::contains(double y) const {
    if (!std::isfinite(y)) return false;
    switch (kind) {
        case SupportKind::ContinuousInterval:
            return y > lower && y < upper;
        case SupportKind::NonNegativeIntegers:
            return y >= 0.0 && y == std::floor(y);
        case SupportKind::PositiveIntegers:
            return y >= 1.0 && y == std::floor(y);
    }
    return false;
}

double Family::log_density(double y, const ParamVector& theta) const {
    if (!support_.contains(y)) {
        throw DomainError("observation " + std::to_string(y) + " outside the support of family " +
                          code_);
    }
    if (!admissible(theta)) {
        throw DomainError("inadmissible parameters for family " + code_);
    }
    double out = 0.0;
    log_density_batch(std::span<const double>(&y, 1), theta, std::span<double>(&out, 1));
    return out;
}

ParamDerivatives Family::derivatives(double y, const ParamVector& theta, int order) const {
    ParamDerivatives out;
    derivatives_batch(std::span<const double>(&y, 1), theta, order,
                      std::span<ParamDerivatives>(&out, 1));
    return out;
}

double Family::sample(const ParamVector& theta, std::mt19937_64& rng) const {
    if (!admissible(theta)) {
        throw DomainError("inadmissible parameters for family " + code_);
    }
    return sample_unchecked(theta, rng);
}

double Family::mode(const ParamVector& theta) const {
    if (!support_.is_discrete()) {
        throw InvalidArgument("mode() is only defined for discrete families");
    }
    return std::max(support_.lower, std::floor(mean(theta)));
}

LinkedParams Family::linked(const Eigen::Vector3d& eta) const {
    LinkedParams out;
    for (int d = 0; d < 3; ++d) {
        if (d < n_params_) {
            out.jac[static_cast<std::size_t>(d)] = links_[static_cast<std::size_t>(d)].inverse_derivs(eta[d]);
            out.theta[static_cast<std::size_t>(d)] = out.jac[static_cast<std::size_t>(d)].value;
        } else {
            out.jac[static_cast<std::size_t>(d)] = {0.0, 0.0, 0.0};
            out.theta[static_cast<std::size_t>(d)] = 0.0;
        }
    }
    return out;
}

ParamVector Family::params_from_predictors(const Eigen::Vector3d& eta) const {
    return linked(eta).theta;
}

Eigen::Vector3d Family::predictors_from_params(const ParamVector& theta) const {
    Eigen::Vector3d eta = Eigen::Vector3d::Zero();
    for (int d = 0; d < n_params_; ++d) {
        eta[d] = links_[static_cast<std::size_t>(d)].forward(theta[static_cast<std::size_t>(d)]);
    }
    return eta;
}

FamilyPtr make_family(std::string_view code) { return make_family(code, {}); }

FamilyPtr make_family(std::string_view code, const std::vector<Link>& links) {
    auto pick = [&](std::array<Link, 3> defaults, int n) {
        if (links.empty()) return defaults;
        if (static_cast<int>(links.size()) != n) {
            throw InvalidArgument("family " + std::string(code) + " needs " + std::to_string(n) +
                                  " links");
        }
        std::array<Link, 3> out = defaults;
        for (int d = 0; d < n; ++d) out[static_cast<std::size_t>(d)] = links[static_cast<std::size_t>(d)];
        return out;
    };
    const Link id = Link::identity();
    const Link lg = Link::log();
    if (code == "N") return build<NormalFamily>(pick({id, lg, id}, 2));
    if (code == "GA") return build<GammaFamily>(pick({lg, lg, id}, 2));
    if (code == "LN") return build<LogNormalFamily>(pick({id, lg, id}, 2));
    if (code == "WEI") return build<WeibullFamily>(pick({lg, lg, id}, 2));
    if (code == "GU") return build<GumbelFamily>(pick({id, lg, id}, 2));
    if (code == "LO") return build<LogisticFamily>(pick({id, lg, id}, 2));
    if (code == "PO") return build<PoissonFamily>(pick({lg, id, id}, 1));
    if (code == "NBI") return build<NegBinomialFamily>(pick({lg, lg, id}, 2));
    if (code == "ZTP") return build<ZeroTruncPoissonFamily>(pick({lg, id, id}, 1));
    for (std::string_view ext : {"BE", "DAGUM", "FISK", "iG", "rGU", "SM", "NBII", "PIG"}) {
        if (code == ext) {
            throw InvalidArgument("family '" + std::string(code) +
                                  "' is a declared extension point and is not implemented");
        }
    }
    throw InvalidArgument("unknown family code '" + std::string(code) + "'");
}

std::vector<std::string> implemented_family_codes() {
    return {"N", "GA", "LN", "WEI", "GU", "LO", "PO", "NBI", "ZTP"};
}

PredictorDerivatives chain_to_predictors(const ParamDerivatives& pd,
                                         const std::array<InverseLinkEval, 3>& jac, int n_params,
                                         int order) {
    PredictorDerivatives out;
    out.logf = pd.logf;
    if (order < 1) return out;
    for (int d = 0; d < n_params; ++d) {
        out.d1[d] = pd.d1[d] * jac[static_cast<std::size_t>(d)].d1;
    }
    if (order < 2) return out;
    for (int d = 0; d < n_params; ++d) {
        for (int h = d; h < n_params; ++h) {
            out.d2(d, h) = pd.d2(d, h) * jac[static_cast<std::size_t>(d)].d1 *
                           jac[static_cast<std::size_t>(h)].d1;
            out.d2(h, d) = out.d2(d, h);
        }
        out.d2(d, d) += pd.d1[d] * jac[static_cast<std::size_t>(d)].d2;
    }
    return out;
}

PredictorDerivatives d_log_density(const Family& family, double y, const Eigen::Vector3d& eta,
                                   int order) {
    const auto lp = family.linked(eta);
    if (!family.support().contains(y)) {
        throw DomainError("observation outside the support of family " + std::string(family.code()));
    }
    if (!family.admissible(lp.theta)) {
        throw DomainError("inadmissible parameters for family " + std::string(family.code()));
    }
    return chain_to_predictors(family.derivatives(y, lp.theta, order), lp.jac, family.n_params(),
                               order);
}

}  // namespace rgamlss

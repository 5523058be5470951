#include "rgamlss/rho.hpp"

#include <cmath>
#include <string>

#include "rgamlss/error.hpp"

namespace rgamlss {

namespace {

double sigmoid(double x) {
    if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
    const double e = std::exp(x);
    return e / (1.0 + e);
}

// t - log(1 + t) for t >= 0 without cancellation at small t.
double t_minus_log1p(double t) {
    if (t < 0.1) {
        double term = t * t;
        double sum = 0.0;
        double sign = 1.0;
        for (int k = 2; k <= 20; ++k) {
            sum += sign * term / k;
            term *= t;
            sign = -sign;
        }
        return sum;
    }
    return t - std::log1p(t);
}

}  // namespace

LogLogisticRho::LogLogisticRho(double c) : c_(c) {
    if (!(c > 0.0)) {
        throw InvalidArgument("robustness constant c must be positive, got " + std::to_string(c));
    }
}

double LogLogisticRho::rho(double z) const {
    const double x = z + c_;
    const double tail_c = std::log1p(std::exp(-c_));
    if (x > 0.0) {
        return z + std::log1p(std::exp(-x)) - tail_c;
    }
    return std::log1p(std::exp(x)) - c_ - tail_c;
}

double LogLogisticRho::rho_prime(double z) const { return sigmoid(z + c_); }

double LogLogisticRho::rho_second(double z) const {
    const double x = z + c_;
    return sigmoid(x) * sigmoid(-x);
}

double LogLogisticRho::rho_star(double z) const {
    const double x = z + c_;
    if (x > 30.0) {
        return std::exp(z) - std::exp(-c_) * (x + std::log1p(std::exp(-x)));
    }
    if (x < -745.0) return 0.0;
    return std::exp(-c_) * t_minus_log1p(std::exp(x));
}

double IdentityRho::rho_star(double z) const { return std::exp(z); }

RhoPtr make_log_logistic_rho(double c) { return std::make_shared<const LogLogisticRho>(c); }

RhoPtr make_identity_rho() { return std::make_shared<const IdentityRho>(); }

}  // namespace rgamlss

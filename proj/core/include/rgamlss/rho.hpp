#pragma once

#include <limits>
#include <memory>

namespace rgamlss {

/// Robustness transformation applied to log-likelihood contributions, with
/// its first two derivatives and the companion rho*(z) = int_{-inf}^z e^s rho'(s) ds
/// that enters the Fisher-consistency correction.
class RhoFunction {
public:
    virtual ~RhoFunction() = default;

    [[nodiscard]] virtual double rho(double z) const = 0;
    /// Robustness weight; always within [0, 1].
    [[nodiscard]] virtual double rho_prime(double z) const = 0;
    [[nodiscard]] virtual double rho_second(double z) const = 0;
    [[nodiscard]] virtual double rho_star(double z) const = 0;

    /// Tuning constant c; +inf for the likelihood itself.
    [[nodiscard]] virtual double tuning_constant() const = 0;
    /// True when rho(z) = z, i.e. maximum likelihood.
    [[nodiscard]] virtual bool is_identity() const { return false; }
};

/// rho_c(z) = log((1 + e^{z+c}) / (1 + e^c)).
class LogLogisticRho final : public RhoFunction {
public:
    explicit LogLogisticRho(double c);

    [[nodiscard]] double rho(double z) const override;
    [[nodiscard]] double rho_prime(double z) const override;
    [[nodiscard]] double rho_second(double z) const override;
    /// Closed form e^{-c} (t - log(1 + t)) with t = e^{z+c}.
    [[nodiscard]] double rho_star(double z) const override;
    [[nodiscard]] double tuning_constant() const override { return c_; }

private:
    double c_;
};

/// rho(z) = z: recovers the (penalized) likelihood, with b_rho = n.
class IdentityRho final : public RhoFunction {
public:
    [[nodiscard]] double rho(double z) const override { return z; }
    [[nodiscard]] double rho_prime(double) const override { return 1.0; }
    [[nodiscard]] double rho_second(double) const override { return 0.0; }
    [[nodiscard]] double rho_star(double z) const override;
    [[nodiscard]] double tuning_constant() const override {
        return std::numeric_limits<double>::infinity();
    }
    [[nodiscard]] bool is_identity() const override { return true; }
};

using RhoPtr = std::shared_ptr<const RhoFunction>;

RhoPtr make_log_logistic_rho(double c);
RhoPtr make_identity_rho();

}  // namespace rgamlss

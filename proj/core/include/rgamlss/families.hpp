#pragma once

#include <array>
#include <limits>
#include <memory>
#include <random>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Core>

#include "rgamlss/links.hpp"

namespace rgamlss {

enum class SupportKind { ContinuousInterval, NonNegativeIntegers, PositiveIntegers };

struct Support {
    SupportKind kind = SupportKind::ContinuousInterval;
    double lower = -std::numeric_limits<double>::infinity();
    double upper = std::numeric_limits<double>::infinity();

    [[nodiscard]] bool is_discrete() const { return kind != SupportKind::ContinuousInterval; }
    /// Continuous supports are open intervals; discrete supports hold integer atoms only.
    [[nodiscard]] bool contains(double y) const;
};

/// Canonical parameters (mu, sigma, nu). Unused trailing entries are ignored.
using ParamVector = std::array<double, 3>;

inline constexpr std::array<std::string_view, 3> kParamNames{"mu", "sigma", "nu"};

/// log f and its derivatives with respect to the canonical parameters.
struct ParamDerivatives {
    double logf = 0.0;
    Eigen::Vector3d d1 = Eigen::Vector3d::Zero();
    Eigen::Matrix3d d2 = Eigen::Matrix3d::Zero();
};

/// log f and its derivatives with respect to the linear predictors (eta_1, eta_2, eta_3).
struct PredictorDerivatives {
    double logf = 0.0;
    Eigen::Vector3d d1 = Eigen::Vector3d::Zero();
    Eigen::Matrix3d d2 = Eigen::Matrix3d::Zero();
};

/// Inverse-link values and derivatives for each modeled parameter.
struct LinkedParams {
    ParamVector theta{};
    std::array<InverseLinkEval, 3> jac{};
};

/// A distribution family D(mu, sigma, nu): log-density with analytic
/// derivatives, links, support, moments and a sampler. Instances are
/// immutable and may be shared across threads.
class Family {
public:
    virtual ~Family() = default;

    [[nodiscard]] std::string_view code() const { return code_; }
    [[nodiscard]] int n_params() const { return n_params_; }
    [[nodiscard]] const Support& support() const { return support_; }
    [[nodiscard]] const Link& link(int d) const { return links_.at(static_cast<std::size_t>(d)); }
    [[nodiscard]] const std::array<Link, 3>& links() const { return links_; }

    [[nodiscard]] virtual bool admissible(const ParamVector& theta) const = 0;

    /// Checked log-density: throws DomainError for y outside the support or
    /// inadmissible parameters.
    [[nodiscard]] double log_density(double y, const ParamVector& theta) const;

    /// Unchecked batch evaluation of log f(y_j | theta) for a shared theta.
    virtual void log_density_batch(std::span<const double> y, const ParamVector& theta,
                                   std::span<double> out) const = 0;

    /// Unchecked batch evaluation of log f and its derivatives up to `order`
    /// (0, 1 or 2) with respect to the canonical parameters.
    virtual void derivatives_batch(std::span<const double> y, const ParamVector& theta,
                                   int order, std::span<ParamDerivatives> out) const = 0;

    [[nodiscard]] ParamDerivatives derivatives(double y, const ParamVector& theta,
                                               int order) const;

    /// One draw. Throws DomainError on inadmissible parameters.
    [[nodiscard]] double sample(const ParamVector& theta, std::mt19937_64& rng) const;

    [[nodiscard]] virtual double mean(const ParamVector& theta) const = 0;
    [[nodiscard]] virtual double variance(const ParamVector& theta) const = 0;
    [[nodiscard]] virtual double cdf(double y, const ParamVector& theta) const = 0;
    /// Continuous families: inverse CDF. Discrete families: smallest atom
    /// with CDF >= p.
    [[nodiscard]] virtual double quantile(double p, const ParamVector& theta) const = 0;
    /// Discrete families only: an atom of maximal mass.
    [[nodiscard]] virtual double mode(const ParamVector& theta) const;

    /// Moment-based parameter guesses used to initialize intercepts.
    [[nodiscard]] virtual ParamVector moment_estimates(std::span<const double> y) const = 0;

    /// Applies the inverse links to a predictor triple.
    [[nodiscard]] LinkedParams linked(const Eigen::Vector3d& eta) const;
    [[nodiscard]] ParamVector params_from_predictors(const Eigen::Vector3d& eta) const;
    /// Applies the forward links to a parameter triple.
    [[nodiscard]] Eigen::Vector3d predictors_from_params(const ParamVector& theta) const;

protected:
    Family(std::string code, int n_params, Support support, std::array<Link, 3> links)
        : code_(std::move(code)), n_params_(n_params), support_(support), links_(links) {}

    [[nodiscard]] virtual double sample_unchecked(const ParamVector& theta,
                                                  std::mt19937_64& rng) const = 0;

private:
    std::string code_;
    int n_params_;
    Support support_;
    std::array<Link, 3> links_;
};

using FamilyPtr = std::shared_ptr<const Family>;

/// Builds a family from its code ("N", "GA", "LN", "WEI", "GU", "LO", "PO",
/// "NBI", "ZTP") with its default links. Throws InvalidArgument for unknown
/// or not-yet-implemented codes.
FamilyPtr make_family(std::string_view code);

/// Same as above with explicit links for the first n_params parameters.
FamilyPtr make_family(std::string_view code, const std::vector<Link>& links);

std::vector<std::string> implemented_family_codes();

/// Chain rule from canonical-parameter derivatives to predictor derivatives.
PredictorDerivatives chain_to_predictors(const ParamDerivatives& pd,
                                         const std::array<InverseLinkEval, 3>& jac,
                                         int n_params, int order);

/// Derivatives of log f(y | g^{-1}(eta)) with respect to eta, up to `order`.
/// Throws DomainError when y or the implied parameters are inadmissible.
PredictorDerivatives d_log_density(const Family& family, double y, const Eigen::Vector3d& eta,
                                   int order);

}  // namespace rgamlss

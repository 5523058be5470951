#pragma once

#include <string>
#include <string_view>

namespace rgamlss {

enum class LinkKind { Identity, Log, ShiftedLog, Logit };

/// Value of the inverse link and its first two derivatives at a predictor value.
struct InverseLinkEval {
    double value;
    double d1;
    double d2;
};

/// Link function g mapping a distribution parameter to an unconstrained
/// linear predictor. Admissibility is enforced here: the inverse link maps
/// the whole real line into the parameter range.
class Link {
public:
    constexpr Link() = default;

    static constexpr Link identity() { return Link(LinkKind::Identity, 0.0); }
    static constexpr Link log() { return Link(LinkKind::Log, 0.0); }
    /// g(theta) = log(theta - eps).
    static constexpr Link shifted_log(double eps = kDefaultShift) {
        return Link(LinkKind::ShiftedLog, eps);
    }
    static constexpr Link logit() { return Link(LinkKind::Logit, 0.0); }

    static Link from_name(std::string_view name);

    [[nodiscard]] constexpr LinkKind kind() const { return kind_; }
    [[nodiscard]] constexpr double shift() const { return shift_; }
    [[nodiscard]] std::string name() const;

    /// g(theta). Throws DomainError outside the parameter range.
    [[nodiscard]] double forward(double theta) const;
    /// g^{-1}(eta).
    [[nodiscard]] double inverse(double eta) const;
    [[nodiscard]] InverseLinkEval inverse_derivs(double eta) const;

    static constexpr double kDefaultShift = 1e-8;

private:
    constexpr Link(LinkKind kind, double shift) : kind_(kind), shift_(shift) {}

    LinkKind kind_ = LinkKind::Identity;
    double shift_ = 0.0;
};

}  // namespace rgamlss

#include "rgamlss/links.hpp"

#include <cmath>

#include "rgamlss/error.hpp"

namespace rgamlss {

namespace {

double sigmoid(double x) {
    if (x >= 0.0) {
        return 1.0 / (1.0 + std::exp(-x));
    }
    const double e = std::exp(x);
    return e / (1.0 + e);
}

}  // namespace

Link Link::from_name(std::string_view name) {
    if (name == "identity") return identity();
    if (name == "log") return log();
    if (name == "logeps" || name == "shifted-log") return shifted_log();
    if (name == "logit") return logit();
    throw InvalidArgument("unknown link '" + std::string(name) + "'");
}

std::string Link::name() const {
    switch (kind_) {
        case LinkKind::Identity: return "identity";
        case LinkKind::Log: return "log";
        case LinkKind::ShiftedLog: return "logeps";
        case LinkKind::Logit: return "logit";
    }
    return "identity";
}

double Link::forward(double theta) const {
    switch (kind_) {
        case LinkKind::Identity:
            return theta;
        case LinkKind::Log:
            if (!(theta > 0.0)) throw DomainError("log link requires a positive parameter");
            return std::log(theta);
        case LinkKind::ShiftedLog:
            if (!(theta > shift_)) throw DomainError("shifted-log link requires theta > eps");
            return std::log(theta - shift_);
        case LinkKind::Logit:
            if (!(theta > 0.0 && theta < 1.0)) throw DomainError("logit link requires theta in (0,1)");
            return std::log(theta) - std::log1p(-theta);
    }
    return theta;
}

double Link::inverse(double eta) const {
    switch (kind_) {
        case LinkKind::Identity: return eta;
        case LinkKind::Log: return std::exp(eta);
        case LinkKind::ShiftedLog: return shift_ + std::exp(eta);
        case LinkKind::Logit: return sigmoid(eta);
    }
    return eta;
}

InverseLinkEval Link::inverse_derivs(double eta) const {
    switch (kind_) {
        case LinkKind::Identity:
            return {eta, 1.0, 0.0};
        case LinkKind::Log: {
            const double e = std::exp(eta);
            return {e, e, e};
        }
        case LinkKind::ShiftedLog: {
            const double e = std::exp(eta);
            return {shift_ + e, e, e};
        }
        case LinkKind::Logit: {
            const double s = sigmoid(eta);
            const double ds = s * (1.0 - s);
            return {s, ds, ds * (1.0 - 2.0 * s)};
        }
    }
    return {eta, 1.0, 0.0};
}

}  // namespace rgamlss

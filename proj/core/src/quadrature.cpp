#include "rgamlss/quadrature.hpp"

#include <numbers>

namespace rgamlss {

GaussLegendreRule::GaussLegendreRule(int n_nodes) {
    if (n_nodes < 1) throw InvalidArgument("Gauss-Legendre rule needs at least one node");
    const auto n = static_cast<std::size_t>(n_nodes);
    nodes_.assign(n, 0.0);
    weights_.assign(n, 0.0);
    const std::size_t half = (n + 1) / 2;
    for (std::size_t i = 0; i < half; ++i) {
        // Newton iteration on P_n from the Chebyshev-like initial guess.
        double x = std::cos(std::numbers::pi * (static_cast<double>(i) + 0.75) /
                            (static_cast<double>(n) + 0.5));
        double dp = 0.0;
        for (int it = 0; it < 100; ++it) {
            double p0 = 1.0;
            double p1 = x;
            for (std::size_t k = 2; k <= n; ++k) {
                const double kd = static_cast<double>(k);
                const double p2 = ((2.0 * kd - 1.0) * x * p1 - (kd - 1.0) * p0) / kd;
                p0 = p1;
                p1 = p2;
            }
            if (n == 1) {
                p1 = x;
                p0 = 1.0;
            }
            dp = static_cast<double>(n) * (x * p1 - p0) / (x * x - 1.0);
            const double dx = p1 / dp;
            x -= dx;
            if (std::abs(dx) < 1e-16) break;
        }
        nodes_[i] = -x;
        nodes_[n - 1 - i] = x;
        const double w = 2.0 / ((1.0 - x * x) * dp * dp);
        weights_[i] = w;
        weights_[n - 1 - i] = w;
    }
    if (n == 1) {
        nodes_[0] = 0.0;
        weights_[0] = 2.0;
    }
}

const GaussLegendreRule& GaussLegendreRule::default_rule() {
    static const GaussLegendreRule rule(40);
    return rule;
}

}  // namespace rgamlss

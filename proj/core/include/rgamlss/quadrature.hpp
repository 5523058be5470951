#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "rgamlss/error.hpp"

namespace rgamlss {

/// Gauss-Legendre nodes and weights on [-1, 1].
class GaussLegendreRule {
public:
    explicit GaussLegendreRule(int n_nodes);

    [[nodiscard]] int size() const { return static_cast<int>(nodes_.size()); }
    [[nodiscard]] std::span<const double> nodes() const { return nodes_; }
    [[nodiscard]] std::span<const double> weights() const { return weights_; }

    /// Shared 40-node rule.
    static const GaussLegendreRule& default_rule();

private:
    std::vector<double> nodes_;
    std::vector<double> weights_;
};

struct AdaptiveOptions {
    double rel_tol = 1e-9;
    double abs_floor = 1e-300;
    int max_panels = 4000;
    int max_depth = 60;
};

struct AdaptiveStats {
    int panels = 0;
    int evaluations = 0;
};

/// Vector-valued adaptive Gauss-Legendre integration. Each panel is
/// bisected until the estimate over the panel and the sum over its two
/// halves agree to rel_tol relative to the running scale of the integral.
///
/// The integrand is called as f(x, out) with x a batch of abscissae and out
/// a row-major buffer of x.size() * m values.
class AdaptiveGaussLegendre {
public:
    explicit AdaptiveGaussLegendre(const GaussLegendreRule& rule = GaussLegendreRule::default_rule(),
                                   AdaptiveOptions opts = {})
        : rule_(&rule), opts_(opts) {}

    template <class F>
    std::vector<double> integrate(F&& f, std::span<const double> breakpoints, int m,
                                  AdaptiveStats* stats = nullptr) const;

private:
    template <class F>
    void panel_estimate(F& f, double a, double b, int m, std::vector<double>& out,
                        std::vector<double>& xbuf, std::vector<double>& fbuf) const;

    const GaussLegendreRule* rule_;
    AdaptiveOptions opts_;
};

template <class F>
void AdaptiveGaussLegendre::panel_estimate(F& f, double a, double b, int m,
                                           std::vector<double>& out, std::vector<double>& xbuf,
                                           std::vector<double>& fbuf) const {
    const int n = rule_->size();
    const double half = 0.5 * (b - a);
    const double mid = 0.5 * (a + b);
    const auto nodes = rule_->nodes();
    const auto weights = rule_->weights();
    xbuf.resize(static_cast<std::size_t>(n));
    fbuf.assign(static_cast<std::size_t>(n * m), 0.0);
    for (int j = 0; j < n; ++j) xbuf[static_cast<std::size_t>(j)] = mid + half * nodes[static_cast<std::size_t>(j)];
    f(std::span<const double>(xbuf), std::span<double>(fbuf));
    out.assign(static_cast<std::size_t>(m), 0.0);
    for (int j = 0; j < n; ++j) {
        const double w = half * weights[static_cast<std::size_t>(j)];
        for (int k = 0; k < m; ++k) out[static_cast<std::size_t>(k)] += w * fbuf[static_cast<std::size_t>(j * m + k)];
    }
}

template <class F>
std::vector<double> AdaptiveGaussLegendre::integrate(F&& f, std::span<const double> breakpoints,
                                                     int m, AdaptiveStats* stats) const {
    struct Panel {
        double a;
        double b;
        std::vector<double> estimate;
        int depth;
    };
    std::vector<double> xbuf;
    std::vector<double> fbuf;
    std::vector<Panel> stack;
    std::vector<double> total(static_cast<std::size_t>(m), 0.0);
    int evaluations = 0;

    for (std::size_t i = 0; i + 1 < breakpoints.size(); ++i) {
        const double a = breakpoints[i];
        const double b = breakpoints[i + 1];
        if (!(b > a)) continue;
        Panel p{a, b, {}, 0};
        panel_estimate(f, a, b, m, p.estimate, xbuf, fbuf);
        evaluations += rule_->size();
        for (int k = 0; k < m; ++k) total[static_cast<std::size_t>(k)] += p.estimate[static_cast<std::size_t>(k)];
        stack.push_back(std::move(p));
    }
    double scale = opts_.abs_floor;
    for (double v : total) scale = std::max(scale, std::abs(v));

    std::vector<double> result(static_cast<std::size_t>(m), 0.0);
    std::vector<double> left;
    std::vector<double> right;
    int panels = static_cast<int>(stack.size());
    while (!stack.empty()) {
        Panel p = std::move(stack.back());
        stack.pop_back();
        const double mid = 0.5 * (p.a + p.b);
        panel_estimate(f, p.a, mid, m, left, xbuf, fbuf);
        panel_estimate(f, mid, p.b, m, right, xbuf, fbuf);
        evaluations += 2 * rule_->size();
        double diff = 0.0;
        for (int k = 0; k < m; ++k) {
            const auto kk = static_cast<std::size_t>(k);
            diff = std::max(diff, std::abs(left[kk] + right[kk] - p.estimate[kk]));
        }
        if (!std::isfinite(diff)) {
            throw QuadratureError("non-finite integrand on panel [" + std::to_string(p.a) + ", " +
                                  std::to_string(p.b) + "]");
        }
        if (diff <= opts_.rel_tol * scale || p.depth >= opts_.max_depth) {
            for (int k = 0; k < m; ++k) {
                const auto kk = static_cast<std::size_t>(k);
                result[kk] += left[kk] + right[kk];
            }
            continue;
        }
        if (++panels > opts_.max_panels) {
            throw QuadratureError("adaptive quadrature exceeded its budget of " +
                                  std::to_string(opts_.max_panels) + " panels (last panel [" +
                                  std::to_string(p.a) + ", " + std::to_string(p.b) +
                                  "], discrepancy " + std::to_string(diff) + ")");
        }
        stack.push_back(Panel{p.a, mid, left, p.depth + 1});
        stack.push_back(Panel{mid, p.b, right, p.depth + 1});
    }
    if (stats != nullptr) {
        stats->panels = panels;
        stats->evaluations = evaluations;
    }
    return result;
}

}  // namespace rgamlss

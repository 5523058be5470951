#include "rgamlss/correction.hpp"

#include <cmath>
#include <string>
#include <vector>

#include "rgamlss/error.hpp"

namespace rgamlss {

namespace {

int n_components(int np, int order) {
    if (order <= 0) return 1;
    if (order == 1) return 1 + np;
    return 1 + np + np * (np + 1) / 2;
}

// Writes the integrand vector for one node, scaled by `jac`.
void node_integrand(const ParamDerivatives& pd, const RhoFunction& rho, int np, int order,
                    double jac, double* out) {
    const double l = pd.logf;
    const int m = n_components(np, order);
    if (!std::isfinite(l)) {
        for (int k = 0; k < m; ++k) out[k] = 0.0;
        return;
    }
    out[0] = jac * rho.rho_star(l);
    if (order < 1) return;
    const double e = jac * std::exp(l);
    const double rp = rho.rho_prime(l);
    for (int a = 0; a < np; ++a) out[1 + a] = e * rp * pd.d1[a];
    if (order < 2) return;
    const double rpp = rho.rho_second(l);
    int k = 1 + np;
    for (int a = 0; a < np; ++a) {
        for (int b = a; b < np; ++b) {
            out[k++] = e * ((rp + rpp) * pd.d1[a] * pd.d1[b] + rp * pd.d2(a, b));
        }
    }
}

CorrectionValue unpack(const std::vector<double>& v, int np, int order) {
    CorrectionValue out;
    out.value = v[0];
    if (order < 1) return out;
    for (int a = 0; a < np; ++a) out.grad[a] = v[static_cast<std::size_t>(1 + a)];
    if (order < 2) return out;
    std::size_t k = static_cast<std::size_t>(1 + np);
    for (int a = 0; a < np; ++a) {
        for (int b = a; b < np; ++b) {
            out.hess(a, b) = v[k];
            out.hess(b, a) = v[k];
            ++k;
        }
    }
    return out;
}

}  // namespace

CorrectionIntegrator::CorrectionIntegrator(CorrectionOptions opts)
    : opts_(opts),
      quad_(GaussLegendreRule::default_rule(),
            AdaptiveOptions{opts.rel_tol, 1e-300, opts.max_panels, 60}) {
    if (!(opts_.tail_prob > 0.0 && opts_.tail_prob < 0.5)) {
        throw InvalidArgument("integrator tail probability must lie in (0, 0.5)");
    }
    if (!(opts_.rel_tol > 0.0) || opts_.max_panels < 1 || opts_.max_terms < 1) {
        throw InvalidArgument("integrator tolerances must be positive");
    }
}

std::pair<double, double> CorrectionIntegrator::continuous_range(const Family& family,
                                                                 const ParamVector& theta) const {
    double lo = family.quantile(opts_.tail_prob, theta);
    double hi = family.quantile(1.0 - opts_.tail_prob, theta);
    const auto& s = family.support();
    if (!(lo > s.lower)) lo = std::nextafter(s.lower, hi);
    if (!(hi < s.upper)) hi = std::nextafter(s.upper, lo);
    if (!(hi > lo) || !std::isfinite(lo) || !std::isfinite(hi)) {
        throw QuadratureError("degenerate integration range for family " +
                              std::string(family.code()));
    }
    return {lo, hi};
}

CorrectionValue CorrectionIntegrator::continuous(const Family& family, const ParamVector& theta,
                                                 const RhoFunction& rho, int order) const {
    const int np = family.n_params();
    const int m = n_components(np, order);
    const bool log_scale = family.support().lower == 0.0;
    auto [lo, hi] = continuous_range(family, theta);
    double med = family.quantile(0.5, theta);
    if (log_scale) {
        lo = std::log(lo);
        hi = std::log(hi);
        med = std::log(med);
    }
    std::vector<double> bps{lo, hi};
    if (med > lo && med < hi) bps = {lo, med, hi};

    std::vector<double> ybuf;
    std::vector<ParamDerivatives> pd;
    auto f = [&](std::span<const double> x, std::span<double> out) {
        ybuf.resize(x.size());
        pd.resize(x.size());
        for (std::size_t j = 0; j < x.size(); ++j) ybuf[j] = log_scale ? std::exp(x[j]) : x[j];
        family.derivatives_batch(ybuf, theta, order, pd);
        for (std::size_t j = 0; j < x.size(); ++j) {
            node_integrand(pd[j], rho, np, order, log_scale ? ybuf[j] : 1.0,
                           out.data() + j * static_cast<std::size_t>(m));
        }
    };
    try {
        return unpack(quad_.integrate(f, bps, m), np, order);
    } catch (const QuadratureError& e) {
        throw QuadratureError(std::string(e.what()) + " while integrating the correction for " +
                              std::string(family.code()));
    }
}

CorrectionValue CorrectionIntegrator::discrete(const Family& family, const ParamVector& theta,
                                               const RhoFunction& rho, int order) const {
    const int np = family.n_params();
    const int m = n_components(np, order);
    const double lower = family.support().lower;
    const double start = std::max(lower, family.mode(theta));
    constexpr std::size_t kChunk = 64;

    std::vector<double> acc(static_cast<std::size_t>(m), 0.0);
    std::vector<double> node(static_cast<std::size_t>(m));
    std::vector<double> ybuf;
    std::vector<ParamDerivatives> pd;
    double mass = 0.0;
    long terms = 0;

    // Adds atoms y, y+step, ... (at most kChunk, never below `lower`);
    // returns the pmf of the last atom added.
    auto add_chunk = [&](double y0, double step) {
        ybuf.clear();
        for (std::size_t j = 0; j < kChunk; ++j) {
            const double y = y0 + step * static_cast<double>(j);
            if (y < lower) break;
            ybuf.push_back(y);
        }
        pd.resize(ybuf.size());
        family.derivatives_batch(ybuf, theta, order, pd);
        double last = 0.0;
        for (std::size_t j = 0; j < ybuf.size(); ++j) {
            node_integrand(pd[j], rho, np, order, 1.0, node.data());
            for (int k = 0; k < m; ++k) acc[static_cast<std::size_t>(k)] += node[static_cast<std::size_t>(k)];
            last = std::exp(pd[j].logf);
            mass += last;
        }
        terms += static_cast<long>(ybuf.size());
        return std::pair<double, std::size_t>{last, ybuf.size()};
    };

    // Downward from the mode until the pmf is negligible or the support ends.
    double down = start - 1.0;
    while (down >= lower) {
        auto [last, count] = add_chunk(down, -1.0);
        down -= static_cast<double>(count);
        if (last < opts_.last_term) break;
        if (terms > opts_.max_terms) break;
    }
    // Upward from the mode until both stopping rules hold.
    double up = start;
    for (;;) {
        auto [last, count] = add_chunk(up, 1.0);
        up += static_cast<double>(count);
        if (mass >= 1.0 - opts_.mass_deficit && last < opts_.last_term) break;
        if (terms > opts_.max_terms) {
            throw QuadratureError("truncated sum for " + std::string(family.code()) +
                                  " exceeded " + std::to_string(opts_.max_terms) +
                                  " terms (covered mass " + std::to_string(mass) + ")");
        }
    }
    return unpack(acc, np, order);
}

CorrectionValue CorrectionIntegrator::in_params(const Family& family, const ParamVector& theta,
                                                const RhoFunction& rho, int order) const {
    if (rho.is_identity()) {
        CorrectionValue out;
        out.value = 1.0;
        return out;
    }
    if (!family.admissible(theta)) {
        throw DomainError("inadmissible parameters for family " + std::string(family.code()));
    }
    return family.support().is_discrete() ? discrete(family, theta, rho, order)
                                          : continuous(family, theta, rho, order);
}

CorrectionValue CorrectionIntegrator::in_predictors(const Family& family,
                                                    const Eigen::Vector3d& eta,
                                                    const RhoFunction& rho, int order) const {
    const LinkedParams lp = family.linked(eta);
    const CorrectionValue cp = in_params(family, lp.theta, rho, order);
    ParamDerivatives packed;
    packed.logf = cp.value;
    packed.d1 = cp.grad;
    packed.d2 = cp.hess;
    const PredictorDerivatives pe = chain_to_predictors(packed, lp.jac, family.n_params(), order);
    CorrectionValue out;
    out.value = pe.logf;
    out.grad = pe.d1;
    out.hess = pe.d2;
    return out;
}

double correction_term(const Family& family, const Eigen::Vector3d& eta, const RhoFunction& rho,
                       const CorrectionIntegrator& integrator) {
    return integrator.in_predictors(family, eta, rho, 0).value;
}

Eigen::Vector3d correction_gradient(const Family& family, const Eigen::Vector3d& eta,
                                    const RhoFunction& rho, const CorrectionIntegrator& integrator) {
    return integrator.in_predictors(family, eta, rho, 1).grad;
}

Eigen::Matrix3d correction_hessian(const Family& family, const Eigen::Vector3d& eta,
                                   const RhoFunction& rho, const CorrectionIntegrator& integrator) {
    return integrator.in_predictors(family, eta, rho, 2).hess;
}

}  // namespace rgamlss

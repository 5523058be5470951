#include "rgamlss/simulation.hpp"

#include <algorithm>
#include <cfenv>
#include <cmath>
#include <numbers>
#include <numeric>
#include <thread>

#include "rgamlss/error.hpp"
#include "rgamlss/inference.hpp"
#include "rgamlss/random.hpp"
#include "rgamlss/tuning.hpp"

namespace rgamlss {

double poisson_gam_eta(double x) {
    return 4.0 * std::cos(2.0 * std::numbers::pi * (1.0 - x * x));
}

PoissonGamData gen_poisson_gam(int n, std::mt19937_64& rng) {
    if (n < 1) throw InvalidArgument("n must be positive");
    PoissonGamData d;
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    for (int i = 0; i < n; ++i) d.x.push_back(unif(rng));
    for (int i = 0; i < n; ++i) {
        const double eta = poisson_gam_eta(d.x[static_cast<std::size_t>(i)]);
        std::poisson_distribution<long long> po(std::exp(eta));
        d.eta.push_back(eta);
        d.y.push_back(static_cast<double>(po(rng)));
    }
    return d;
}

double contaminated_count(double y, double u1, double u2) {
    const int saved = std::fegetround();
    std::fesetround(FE_TONEAREST);
    const double out = std::nearbyint(y * std::pow(u1, u2));
    std::fesetround(saved);
    return out;
}

namespace {

std::vector<int> choose_without_replacement(std::vector<int> pool, int k, std::mt19937_64& rng) {
    // Partial Fisher-Yates shuffle.
    for (int i = 0; i < k; ++i) {
        std::uniform_int_distribution<int> pick(i, static_cast<int>(pool.size()) - 1);
        std::swap(pool[static_cast<std::size_t>(i)], pool[static_cast<std::size_t>(pick(rng))]);
    }
    pool.resize(static_cast<std::size_t>(k));
    std::sort(pool.begin(), pool.end());
    return pool;
}

int five_percent(std::size_t n) {
    return static_cast<int>(std::nearbyint(0.05 * static_cast<double>(n)));
}

}  // namespace

std::vector<int> contaminate_poisson(std::vector<double>& y, std::mt19937_64& rng) {
    for (double v : y) {
        if (!(v >= 0.0 && v == std::floor(v))) throw InvalidArgument("Poisson responses must be non-negative integers");
    }
    std::vector<int> pool(y.size());
    std::iota(pool.begin(), pool.end(), 0);
    const std::vector<int> idx = choose_without_replacement(pool, five_percent(y.size()), rng);
    std::uniform_real_distribution<double> u1(2.0, 5.0);
    std::bernoulli_distribution sign(0.5);
    for (int i : idx) {
        const double a = u1(rng);
        const double e = sign(rng) ? 1.0 : -1.0;
        y[static_cast<std::size_t>(i)] = contaminated_count(y[static_cast<std::size_t>(i)], a, e);
    }
    return idx;
}

namespace {

constexpr double kMaskCx = 64.0;
constexpr double kMaskCy = 40.0;
constexpr double kMaskA = 27.0;
constexpr double kMaskB = 19.0;
constexpr int kFullMaskSize = 1567;

double mask_radius(double X, double Y) {
    const double u = (X - kMaskCx) / kMaskA;
    const double v = (Y - kMaskCy) / kMaskB;
    const double th = std::atan2(v, u);
    const double wobble = 1.0 + 0.08 * std::cos(3.0 * th) + 0.04 * std::sin(5.0 * th);
    return std::hypot(u, v) / wobble;
}

}  // namespace

VoxelMask brain_slice_mask(MaskSize size) {
    struct P {
        double r;
        int x;
        int y;
    };
    std::vector<P> pts;
    for (int x = 0; x <= 100; ++x) {
        for (int y = 0; y <= 80; ++y) pts.push_back({mask_radius(x, y), x, y});
    }
    std::stable_sort(pts.begin(), pts.end(), [](const P& a, const P& b) { return a.r < b.r; });
    pts.resize(kFullMaskSize);
    std::sort(pts.begin(), pts.end(), [](const P& a, const P& b) {
        return a.x != b.x ? a.x < b.x : a.y < b.y;
    });
    VoxelMask m;
    for (const auto& p : pts) {
        if (size == MaskSize::Reduced && (p.x % 2 != 0 || p.y % 2 != 0)) continue;
        m.X.push_back(p.x);
        m.Y.push_back(p.y);
    }
    return m;
}

double gamma_surface_eta1(double X, double Y) {
    const double u = (X - 38.0) / 56.0;
    const double v = (Y - 21.0) / 40.0;
    const double bump = std::exp(-((u - 0.75) * (u - 0.75) + (v - 0.7) * (v - 0.7)) / (2.0 * 0.18 * 0.18));
    const double ridge = std::exp(-(u - 0.45) * (u - 0.45) / (2.0 * 0.1 * 0.1));
    return -1.3 + 2.6 * bump + 0.9 * ridge;
}

double gamma_surface_eta2(double X, double Y) {
    (void)Y;
    const double u = std::clamp((X - 38.0) / 56.0, 0.0, 1.0);
    return -0.7 + 0.5 * (2.0 * u - 1.0);
}

GammaGamlssData gen_gamma_gamlss(const VoxelMask& mask, std::mt19937_64& rng) {
    GammaGamlssData d;
    d.X = mask.X;
    d.Y = mask.Y;
    for (std::size_t i = 0; i < mask.X.size(); ++i) {
        const double e1 = gamma_surface_eta1(mask.X[i], mask.Y[i]);
        const double e2 = gamma_surface_eta2(mask.X[i], mask.Y[i]);
        const double mu = std::exp(e1);
        const double sigma = std::exp(e2);
        const double shape = 1.0 / (sigma * sigma);
        std::gamma_distribution<double> ga(shape, mu / shape);
        double y = ga(rng);
        if (!(y > 0.0)) y = std::numeric_limits<double>::min();
        d.eta1.push_back(e1);
        d.eta2.push_back(e2);
        d.y.push_back(y);
    }
    return d;
}

std::vector<int> contaminate_gamma(GammaGamlssData& data, std::mt19937_64& rng) {
    std::vector<int> pool;
    for (std::size_t i = 0; i < data.X.size(); ++i) {
        if (data.X[i] > 70.0 && data.Y[i] > 30.0) pool.push_back(static_cast<int>(i));
    }
    const int k = five_percent(data.y.size());
    if (static_cast<int>(pool.size()) < k) {
        throw InvalidArgument("contamination region holds " + std::to_string(pool.size()) +
                              " points but " + std::to_string(k) + " are required");
    }
    const std::vector<int> idx = choose_without_replacement(pool, k, rng);
    for (int i : idx) data.y[static_cast<std::size_t>(i)] += 10.0;
    return idx;
}

double mse(const std::vector<double>& estimate, const std::vector<double>& truth) {
    if (estimate.size() != truth.size()) throw InvalidArgument("mse: length mismatch");
    if (estimate.empty()) throw InvalidArgument("mse: empty input");
    double s = 0.0;
    for (std::size_t i = 0; i < estimate.size(); ++i) {
        const double d = estimate[i] - truth[i];
        s += d * d;
    }
    return s / static_cast<double>(estimate.size());
}

DesignKind design_from_name(const std::string& name) {
    if (name == "poisson-gam") return DesignKind::PoissonGam;
    if (name == "gamma-gamlss-2d") return DesignKind::GammaGamlss2D;
    throw InvalidArgument("unknown design '" + name + "' (expected poisson-gam or gamma-gamlss-2d)");
}

std::string design_name(DesignKind kind) {
    return kind == DesignKind::PoissonGam ? "poisson-gam" : "gamma-gamlss-2d";
}

EstimatorKind estimator_from_name(const std::string& name) {
    if (name == "classical") return EstimatorKind::Classical;
    if (name == "robust-efs") return EstimatorKind::RobustEfs;
    if (name == "robust-raic") return EstimatorKind::RobustRaic;
    if (name == "robust-rbic") return EstimatorKind::RobustRbic;
    throw InvalidArgument("unknown estimator '" + name + "'");
}

std::string estimator_name(EstimatorKind kind) {
    switch (kind) {
        case EstimatorKind::Classical: return "classical";
        case EstimatorKind::RobustEfs: return "robust-efs";
        case EstimatorKind::RobustRaic: return "robust-raic";
        case EstimatorKind::RobustRbic: return "robust-rbic";
    }
    return "?";
}

void StudyConfig::validate() const {
    if (replications < 1) throw InvalidArgument("need at least one replication");
    if (design == DesignKind::PoissonGam && n < 20) throw InvalidArgument("n must be at least 20");
    if (estimators.empty()) throw InvalidArgument("no estimators requested");
    if (!std::isnan(c) && !(c > 0.0)) throw InvalidArgument("c must be positive");
}

double default_c(DesignKind kind) { return kind == DesignKind::PoissonGam ? 5.8 : 3.1; }

ReplicationData make_replication(const StudyConfig& config, int replication) {
    std::mt19937_64 rng(derive_seed(config.seed, static_cast<std::uint64_t>(replication)));
    ReplicationData rd;
    if (config.design == DesignKind::PoissonGam) {
        PoissonGamData d = gen_poisson_gam(config.n, rng);
        if (config.contaminate) rd.contaminated = contaminate_poisson(d.y, rng);
        rd.covariates["x"] = d.x;
        rd.y = Eigen::Map<const Eigen::VectorXd>(d.y.data(), static_cast<Eigen::Index>(d.y.size()));
        rd.eta_true = Eigen::Map<const Eigen::VectorXd>(d.eta.data(), static_cast<Eigen::Index>(d.eta.size()));
        rd.family = make_family("PO");
        SmoothSpec s;
        s.vars = {"x"};
        s.k = {config.k_poisson};
        s.param = 0;
        rd.design = std::make_shared<const ModelDesign>(ModelDesign::assemble({s}, rd.covariates, 1));
    } else {
        GammaGamlssData d = gen_gamma_gamlss(brain_slice_mask(config.mask), rng);
        if (config.contaminate) rd.contaminated = contaminate_gamma(d, rng);
        rd.covariates["X"] = d.X;
        rd.covariates["Y"] = d.Y;
        rd.y = Eigen::Map<const Eigen::VectorXd>(d.y.data(), static_cast<Eigen::Index>(d.y.size()));
        rd.eta_true.resize(static_cast<Eigen::Index>(d.y.size()), 2);
        for (std::size_t i = 0; i < d.y.size(); ++i) {
            rd.eta_true(static_cast<Eigen::Index>(i), 0) = d.eta1[i];
            rd.eta_true(static_cast<Eigen::Index>(i), 1) = d.eta2[i];
        }
        rd.family = make_family("GA");
        std::vector<SmoothSpec> specs;
        for (int p = 0; p < 2; ++p) {
            SmoothSpec s;
            s.vars = {"X", "Y"};
            s.k = {config.k_tensor, config.k_tensor};
            s.param = p;
            specs.push_back(s);
        }
        rd.design = std::make_shared<const ModelDesign>(ModelDesign::assemble(specs, rd.covariates, 2));
    }
    return rd;
}

SummaryRow summarize(const std::vector<double>& values) {
    SummaryRow r;
    std::vector<double> v;
    for (double x : values) {
        if (std::isfinite(x)) v.push_back(x);
    }
    r.count = static_cast<int>(v.size());
    if (v.empty()) {
        r.average = r.sd = r.median = r.iqr = std::numeric_limits<double>::quiet_NaN();
        return r;
    }
    std::sort(v.begin(), v.end());
    const double n = static_cast<double>(v.size());
    r.average = std::accumulate(v.begin(), v.end(), 0.0) / n;
    double ss = 0.0;
    for (double x : v) ss += (x - r.average) * (x - r.average);
    r.sd = v.size() > 1 ? std::sqrt(ss / (n - 1.0)) : 0.0;
    // Type-7 quantiles (linear interpolation between order statistics).
    auto q = [&](double p) {
        const double h = (n - 1.0) * p;
        const auto lo = static_cast<std::size_t>(std::floor(h));
        const std::size_t hi = std::min(lo + 1, v.size() - 1);
        return v[lo] + (h - static_cast<double>(lo)) * (v[hi] - v[lo]);
    };
    r.median = q(0.5);
    r.iqr = q(0.75) - q(0.25);
    return r;
}

double StudyResult::median(EstimatorKind est, const std::string& target) const {
    for (const auto& s : summary) {
        if (s.estimator == est && s.target == target) return s.median;
    }
    throw InvalidArgument("no summary for " + estimator_name(est) + "/" + target);
}

namespace {

ReplicationRecord run_one(const StudyConfig& config, const ReplicationData& rd, int rep,
                          EstimatorKind est, double c) {
    ReplicationRecord rec;
    rec.replication = rep;
    rec.estimator = est;
    rec.contaminated = rd.contaminated;
    try {
        const RhoPtr rho = est == EstimatorKind::Classical ? make_identity_rho() : make_log_logistic_rho(c);
        rec.c = rho->tuning_constant();
        const Objective obj(rd.design, rd.family, rho, rd.y);
        FitResult fit;
        const Eigen::VectorXd l0 = Eigen::VectorXd::Ones(rd.design->n_lambda());
        switch (est) {
            case EstimatorKind::Classical:
            case EstimatorKind::RobustEfs:
                fit = fit_efs(obj, l0, config.fit);
                break;
            case EstimatorKind::RobustRaic:
            case EstimatorKind::RobustRbic: {
                GridOptions go;
                go.fit = config.fit;
                fit = grid_search(est == EstimatorKind::RobustRaic ? CriterionKind::RAIC : CriterionKind::RBIC,
                                  obj, config.grid, go);
                break;
            }
        }
        rec.converged = fit.converged;
        if (!fit.warnings.empty()) rec.message = fit.warnings.front();
        const Eigen::MatrixXd eta = rd.design->predictors(fit.delta);
        const Family& fam = *rd.family;
        std::vector<double> e1, t1, m1, tm1, e2, t2, s2, ts2;
        for (Eigen::Index i = 0; i < eta.rows(); ++i) {
            e1.push_back(eta(i, 0));
            t1.push_back(rd.eta_true(i, 0));
            m1.push_back(fam.link(0).inverse(eta(i, 0)));
            tm1.push_back(fam.link(0).inverse(rd.eta_true(i, 0)));
            if (eta.cols() > 1) {
                e2.push_back(eta(i, 1));
                t2.push_back(rd.eta_true(i, 1));
                s2.push_back(fam.link(1).inverse(eta(i, 1)));
                ts2.push_back(fam.link(1).inverse(rd.eta_true(i, 1)));
            }
        }
        rec.mse_eta1 = mse(e1, t1);
        rec.mse_mu = mse(m1, tm1);
        if (!e2.empty()) {
            rec.mse_eta2 = mse(e2, t2);
            rec.mse_sigma = mse(s2, ts2);
        }
        try {
            rec.edf = edf(obj, fit).total;
        } catch (const Error& e) {
            rec.message = e.what();
        }
        std::vector<int> order(static_cast<std::size_t>(fit.state.weights.size()));
        std::iota(order.begin(), order.end(), 0);
        std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
            return fit.state.weights[a] < fit.state.weights[b];
        });
        rec.weight_order = std::move(order);
    } catch (const Error& e) {
        rec.failed = true;
        rec.message = e.what();
    }
    return rec;
}

}  // namespace

StudyResult run_study(const StudyConfig& config) {
    config.validate();
    StudyResult res;
    res.config = config;
    double c = config.c;
    if (std::isnan(c)) {
        // Tune once on a clean pilot replication drawn from a separate stream.
        StudyConfig pilot = config;
        pilot.contaminate = false;
        pilot.seed = derive_seed(config.seed, 0xC0FFEEULL);
        const ReplicationData rd = make_replication(pilot, 0);
        const Objective obj(rd.design, rd.family, make_log_logistic_rho(default_c(config.design)), rd.y);
        MdpConfig mc;
        mc.target = config.target_mdp;
        mc.B = config.mdp_B;
        mc.seed = pilot.seed;
        c = tune_c(obj, mc, efs_refit(config.fit)).c;
    }
    res.c = c;

    const int R = config.replications;
    const std::size_t ne = config.estimators.size();
    res.records.resize(static_cast<std::size_t>(R) * ne);
    auto work = [&](int rep) {
        const ReplicationData rd = make_replication(config, rep);
        for (std::size_t e = 0; e < ne; ++e) {
            res.records[static_cast<std::size_t>(rep) * ne + e] =
                run_one(config, rd, rep, config.estimators[e], c);
        }
    };
    const int nt = std::max(1, std::min(config.threads, R));
    if (nt == 1) {
        for (int r = 0; r < R; ++r) work(r);
    } else {
        std::vector<std::thread> pool;
        for (int t = 0; t < nt; ++t) {
            pool.emplace_back([&, t] {
                for (int r = t; r < R; r += nt) work(r);
            });
        }
        for (auto& th : pool) th.join();
    }

    for (EstimatorKind est : config.estimators) {
        for (const std::string target : {"eta1", "eta2", "mu", "sigma", "edf"}) {
            std::vector<double> v;
            for (const auto& rec : res.records) {
                if (rec.estimator != est || rec.failed) continue;
                if (target == "eta1") v.push_back(rec.mse_eta1);
                if (target == "eta2") v.push_back(rec.mse_eta2);
                if (target == "mu") v.push_back(rec.mse_mu);
                if (target == "sigma") v.push_back(rec.mse_sigma);
                if (target == "edf") v.push_back(rec.edf);
            }
            SummaryRow row = summarize(v);
            if (row.count == 0) continue;
            row.estimator = est;
            row.target = target;
            res.summary.push_back(row);
        }
    }
    return res;
}

}  // namespace rgamlss

#include "cli/commands.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <functional>
#include <iostream>
#include <memory>
#include <numeric>

#include <fmt/core.h>
#include <fmt/ostream.h>

#include "cli/errors.hpp"
#include "rgamlss/error.hpp"
#include "rgamlss/inference.hpp"
#include "rgamlss/model.hpp"
#include "rgamlss/objective.hpp"
#include "rgamlss/smoothing_selection.hpp"

namespace rgamlss::cli {

using nlohmann::json;

namespace {

std::string join(const std::vector<std::string>& parts, const char* sep) {
    std::string out;
    for (std::size_t i = 0; i < parts.size(); ++i) {
        if (i > 0) out += sep;
        out += parts[i];
    }
    return out;
}

std::string param_name(int d) { return std::string(kParamNames[static_cast<std::size_t>(d)]); }

/// Model pieces shared by fit and tune.
struct PreparedModel {
    FamilyPtr family;
    std::shared_ptr<const ModelDesign> design;
    CovariateTable covariates;
    std::unique_ptr<Objective> objective;
    Eigen::VectorXd lambda0;
    RefitFunction refit;
};

PreparedModel prepare(const ModelConfig& config, const CsvTable& data, int threads) {
    PreparedModel pm;
    std::vector<Link> links;
    for (const auto& l : config.links) links.push_back(Link::from_name(l));
    pm.family = links.empty() ? make_family(config.family) : make_family(config.family, links);

    std::vector<std::string> needed = config.covariates();
    needed.push_back(config.response);
    pm.covariates = covariate_table(data, needed);
    const std::vector<double>& yv = pm.covariates.at(config.response);
    Eigen::VectorXd y = Eigen::Map<const Eigen::VectorXd>(yv.data(), static_cast<Eigen::Index>(yv.size()));

    pm.design = std::make_shared<const ModelDesign>(
        ModelDesign::assemble(config.smooths, pm.covariates, pm.family->n_params()));
    const int nl = pm.design->n_lambda();
    pm.lambda0 = config.lambda0.value_or(Eigen::VectorXd::Ones(nl));
    if (pm.lambda0.size() != nl) {
        throw SchemaError("config.lambda0 has " + std::to_string(pm.lambda0.size()) + " entries but the formula has " +
                          std::to_string(nl) + " smoothing parameters");
    }
    pm.objective = std::make_unique<Objective>(pm.design, pm.family, make_identity_rho(), std::move(y),
                                               config.integrator, threads);

    const FitOptions fit_opts = config.fit;
    const Eigen::VectorXd l0 = pm.lambda0;
    if (config.select == SelectMethod::Efs || nl == 0) {
        pm.refit = [fit_opts, l0](const Objective& obj, const FitResult* warm) {
            if (warm != nullptr) return fit_efs(obj, warm->lambda, fit_opts, &warm->delta);
            return fit_efs(obj, l0, fit_opts);
        };
    } else {
        const CriterionKind kind = config.select == SelectMethod::Raic ? CriterionKind::RAIC : CriterionKind::RBIC;
        GridOptions go;
        go.fit = fit_opts;
        const LambdaGrid grid = config.lambda_grid;
        pm.refit = [kind, go, grid](const Objective& obj, const FitResult*) {
            return grid_search(kind, obj, grid, go);
        };
    }
    return pm;
}

std::string artifact_stem(const std::string& path) {
    if (path.size() > 5 && path.ends_with(".json")) return path.substr(0, path.size() - 5);
    return path;
}

/// Writes to `path`, or to `fallback` when the path is empty.
void with_output(const std::string& path, std::ostream& fallback, const std::function<void(std::ostream&)>& body) {
    if (path.empty()) {
        body(fallback);
        return;
    }
    std::ofstream f(path);
    if (!f) throw SchemaError("cannot write " + path);
    body(f);
}

template <class F>
int guarded(std::ostream& err, F&& body) {
    try {
        return body();
    } catch (const SchemaError& e) {
        fmt::print(err, "error: {}\n", e.what());
    } catch (const std::exception& e) {
        fmt::print(err, "error: {}\n", e.what());
    }
    return kExitError;
}

std::uint64_t resolve_seed(const GlobalOptions& g, const std::optional<std::uint64_t>& config_seed) {
    if (g.seed) return *g.seed;
    if (config_seed) return *config_seed;
    return MdpConfig{}.seed;
}

void print_fit_summary(std::ostream& out, const FitOutcome& o, const std::string& artifact_path,
                       const std::string& fitted_path) {
    const FitArtifact& a = o.artifact;
    fmt::print(out, "family {} (links {}), n = {}, response {}\n", a.family, join(a.links, ", "), a.n_obs, a.response);
    if (!std::isfinite(a.c)) {
        fmt::print(out, "robustness: maximum likelihood\n");
    } else if (o.tuning) {
        fmt::print(out, "robustness: c = {:.4g} (tuned, MDP {:.4f} after {} probes)\n", a.c, o.tuning->mdp,
                   o.tuning->trace.size());
    } else {
        fmt::print(out, "robustness: c = {:.4g}\n", a.c);
    }
    fmt::print(out, "selection: {} ({} outer iterations, {} optimizer iterations) {}\n", a.selection,
               a.outer_iterations, a.iterations, a.converged ? "converged" : "NOT converged");
    std::string lam;
    for (Eigen::Index j = 0; j < a.lambda.size(); ++j) lam += fmt::format(" {:.5g}", a.lambda[j]);
    fmt::print(out, "lambda:{}\n", lam.empty() ? " (none)" : lam);
    std::string per;
    for (std::size_t d = 0; d < a.edf.per_param.size(); ++d) {
        per += fmt::format("{}{} {:.3f}", d ? ", " : "", param_name(static_cast<int>(d)), a.edf.per_param[d]);
    }
    fmt::print(out, "edf: total {:.3f} ({})\n", a.edf.total, per);
    const auto below = (a.weights.array() < 0.5).count();
    fmt::print(out, "weights: min {:.4g}, {} of {} rows below 0.5\n", a.weights.size() ? a.weights.minCoeff() : 1.0,
               below, a.weights.size());
    for (const auto& w : a.warnings) fmt::print(out, "warning: {}\n", w);
    fmt::print(out, "artifact: {}\nfitted values: {}\n", artifact_path, fitted_path);
}

}  // namespace

CovariateTable covariate_table(const CsvTable& csv, const std::vector<std::string>& names) {
    std::vector<std::string> missing;
    for (const auto& n : names) {
        if (csv.find(n) < 0 && std::find(missing.begin(), missing.end(), n) == missing.end()) missing.push_back(n);
    }
    if (!missing.empty()) throw SchemaError("missing column(s): " + join(missing, ", "));
    CovariateTable t;
    for (const auto& n : names) t[n] = csv.numeric(n);
    return t;
}

FitOutcome fit_model(const ModelConfig& config, const CsvTable& data, std::uint64_t seed, int threads) {
    PreparedModel pm = prepare(config, data, threads);
    FitOutcome o;
    FitResult fit;
    std::unique_ptr<Objective> obj;
    switch (config.robust.mode) {
        case RobustSetting::Mode::ML:
            obj = std::make_unique<Objective>(pm.objective->with_rho(make_identity_rho()));
            fit = pm.refit(*obj, nullptr);
            break;
        case RobustSetting::Mode::Fixed:
            obj = std::make_unique<Objective>(pm.objective->with_rho(make_log_logistic_rho(config.robust.c)));
            fit = pm.refit(*obj, nullptr);
            break;
        case RobustSetting::Mode::Tune: {
            MdpConfig mc = config.tune;
            mc.seed = seed;
            TuneResult t = tune_c(*pm.objective, mc, pm.refit);
            obj = std::make_unique<Objective>(pm.objective->with_rho(make_log_logistic_rho(t.c)));
            fit = t.fit;
            o.artifact.tuning = tuning_to_json(t, mc);
            for (const auto& w : t.warnings) o.artifact.warnings.push_back("tune: " + w);
            o.tuning = std::move(t);
            break;
        }
    }

    FitArtifact& a = o.artifact;
    a.family = config.family;
    for (int d = 0; d < pm.family->n_params(); ++d) a.links.push_back(pm.family->link(d).name());
    a.response = config.response;
    a.covariates = config.covariates();
    a.n_params = pm.family->n_params();
    a.n_obs = pm.design->n_obs();
    a.blocks = pm.design->blocks();
    for (auto& b : a.blocks) b.X.resize(0, 0);
    a.delta = fit.delta;
    a.lambda = fit.lambda;
    a.c = obj->rho().tuning_constant();
    a.selection = select_name(pm.design->n_lambda() == 0 ? SelectMethod::Efs : config.select);
    a.converged = fit.converged;
    a.iterations = fit.report.iterations;
    a.outer_iterations = fit.outer_iterations;
    a.loglik = fit.state.loglik;
    a.weights = fit.state.weights;
    a.ci_level = config.ci_level;
    a.use_sandwich = config.sandwich;
    a.integrator = config.integrator;
    for (const auto& w : fit.warnings) a.warnings.push_back(w);
    if (!fit.converged && !fit.report.message.empty()) a.warnings.push_back("optimizer: " + fit.report.message);
    try {
        const CovarianceBundle cov = covariances(*obj, fit);
        a.sandwich = cov.sandwich;
        a.posterior = cov.posterior;
        a.edf = edf(*pm.design, cov);
        o.edf_diag = cov.edf_diag;
    } catch (const ConditionViolation& e) {
        a.warnings.push_back(std::string("covariance unavailable: ") + e.what());
        a.edf.total = std::numeric_limits<double>::quiet_NaN();
        a.edf.per_param.assign(static_cast<std::size_t>(a.n_params), std::numeric_limits<double>::quiet_NaN());
        o.edf_diag = Eigen::VectorXd::Constant(a.delta.size(), std::numeric_limits<double>::quiet_NaN());
    }
    return o;
}

int PredictionTable::n_outside() const {
    return static_cast<int>(std::count(outside.begin(), outside.end(), true));
}

PredictionTable predict(const FitArtifact& artifact, const CsvTable& data) {
    PredictionTable t;
    t.covariate_names = artifact.covariates;
    t.covariates = covariate_table(data, artifact.covariates);
    t.n_params = artifact.n_params;
    CovariateTable rows_table = t.covariates;
    if (rows_table.empty()) rows_table["(row)"] = std::vector<double>(data.n_rows(), 0.0);
    const ModelDesign design = artifact.design_for(rows_table);
    if (design.n_coef() != artifact.delta.size()) {
        throw SchemaError("artifact coefficients do not match its stored bases");
    }
    const std::vector<Eigen::MatrixXd> rows = design.design_at(rows_table, t.outside);
    const Eigen::Index n = static_cast<Eigen::Index>(data.n_rows());
    const FamilyPtr fam = artifact.make_family_ptr();
    if (const Eigen::MatrixXd* cov = artifact.interval_covariance()) {
        IntervalBands b = pointwise_ci(design, rows, artifact.delta, *cov, artifact.ci_level);
        t.eta = std::move(b.eta);
        t.se = std::move(b.se);
        t.lower = std::move(b.lower);
        t.upper = std::move(b.upper);
    } else {
        t.eta.resize(n, artifact.n_params);
        for (int d = 0; d < artifact.n_params; ++d) {
            t.eta.col(d) = rows[static_cast<std::size_t>(d)] *
                           artifact.delta.segment(design.param_offset(d), design.param_size(d));
        }
        t.se = t.lower = t.upper = Eigen::MatrixXd::Constant(n, artifact.n_params, std::numeric_limits<double>::quiet_NaN());
    }
    t.theta.resize(n, artifact.n_params);
    for (int d = 0; d < artifact.n_params; ++d) {
        for (Eigen::Index i = 0; i < n; ++i) t.theta(i, d) = fam->link(d).inverse(t.eta(i, d));
    }
    return t;
}

void write_predictions(std::ostream& out, const FitArtifact& artifact, const PredictionTable& t,
                       const Eigen::VectorXd* loglik, const Eigen::VectorXd* weights) {
    const FamilyPtr fam = artifact.make_family_ptr();
    std::vector<std::string> header{"row"};
    for (const auto& c : t.covariate_names) header.push_back(c);
    for (int d = 0; d < t.n_params; ++d) header.push_back("eta_" + param_name(d));
    for (int d = 0; d < t.n_params; ++d) header.push_back(param_name(d));
    for (int d = 0; d < t.n_params; ++d) {
        const std::string p = param_name(d);
        for (const char* pre : {"se_eta_", "lower_eta_", "upper_eta_", "lower_", "upper_"}) header.push_back(pre + p);
    }
    header.push_back("outside");
    if (loglik) header.push_back("loglik");
    if (weights) header.push_back("w");
    write_csv_row(out, header);
    std::vector<std::string> f;
    for (Eigen::Index i = 0; i < t.eta.rows(); ++i) {
        f.clear();
        f.push_back(std::to_string(i + 1));
        for (const auto& c : t.covariate_names) f.push_back(format_double(t.covariates.at(c)[static_cast<std::size_t>(i)]));
        for (int d = 0; d < t.n_params; ++d) f.push_back(format_double(t.eta(i, d)));
        for (int d = 0; d < t.n_params; ++d) f.push_back(format_double(t.theta(i, d)));
        for (int d = 0; d < t.n_params; ++d) {
            const Link& link = fam->link(d);
            f.push_back(format_double(t.se(i, d)));
            f.push_back(format_double(t.lower(i, d)));
            f.push_back(format_double(t.upper(i, d)));
            f.push_back(format_double(std::isnan(t.lower(i, d)) ? t.lower(i, d) : link.inverse(t.lower(i, d))));
            f.push_back(format_double(std::isnan(t.upper(i, d)) ? t.upper(i, d) : link.inverse(t.upper(i, d))));
        }
        f.push_back(t.outside[static_cast<std::size_t>(i)] ? "1" : "0");
        if (loglik) f.push_back(format_double((*loglik)[i]));
        if (weights) f.push_back(format_double((*weights)[i]));
        write_csv_row(out, f);
    }
}

std::vector<WeightRow> robustness_table(const FitArtifact& artifact, const CsvTable& data, int threads) {
    std::vector<std::string> needed = artifact.covariates;
    needed.push_back(artifact.response);
    CovariateTable tbl = covariate_table(data, needed);
    const std::vector<double>& yv = tbl.at(artifact.response);
    Eigen::VectorXd y = Eigen::Map<const Eigen::VectorXd>(yv.data(), static_cast<Eigen::Index>(yv.size()));
    auto design = std::make_shared<const ModelDesign>(artifact.design_for(tbl));
    const Objective obj(design, artifact.make_family_ptr(), artifact.make_rho(), std::move(y), artifact.integrator,
                        threads);
    const ObjectiveState st = obj.evaluate(artifact.delta, artifact.lambda, 0);
    if (!st.ok) throw Error("cannot evaluate the stored fit on these data: " + st.failure);
    std::vector<WeightRow> rows(static_cast<std::size_t>(st.loglik.size()));
    for (std::size_t i = 0; i < rows.size(); ++i) {
        rows[i] = {static_cast<int>(i) + 1, st.loglik[static_cast<Eigen::Index>(i)],
                   st.weights[static_cast<Eigen::Index>(i)]};
    }
    std::stable_sort(rows.begin(), rows.end(), [](const WeightRow& a, const WeightRow& b) { return a.weight < b.weight; });
    return rows;
}

void write_coefficients(std::ostream& out, const FitArtifact& a, const Eigen::VectorXd& edf_diag) {
    write_csv_row(out, {"index", "param", "term", "delta", "var_sandwich", "var_posterior", "edf"});
    const double nan = std::numeric_limits<double>::quiet_NaN();
    // One in-envelope row is enough to recover the column layout.
    CovariateTable dummy;
    dummy["(row)"] = {0.0};
    for (const auto& b : a.blocks) {
        for (std::size_t m = 0; m < b.spec.vars.size(); ++m) dummy[b.spec.vars[m]] = {b.margins[m].lower()};
    }
    const ModelDesign design = a.design_for(dummy);
    for (Eigen::Index k = 0; k < a.delta.size(); ++k) {
        int d = 0;
        while (d + 1 < a.n_params && design.param_offset(d + 1) <= k) ++d;
        std::string term = "(intercept)";
        for (const auto& b : design.blocks()) {
            if (k >= b.offset && k < b.offset + b.n_cols()) term = "s(" + join(b.spec.vars, ",") + ")";
        }
        write_csv_row(out, {std::to_string(k), param_name(d), term, format_double(a.delta[k]),
                            format_double(a.sandwich ? (*a.sandwich)(k, k) : nan),
                            format_double(a.posterior ? (*a.posterior)(k, k) : nan),
                            format_double(k < edf_diag.size() ? edf_diag[k] : nan)});
    }
}

json tuning_to_json(const TuneResult& t, const MdpConfig& config) {
    json trace = json::array();
    for (const auto& p : t.trace) {
        trace.push_back({{"c", p.c}, {"mdp", p.mdp}, {"converged", p.converged}, {"lambda", vector_to_json(p.lambda)}});
    }
    return json{{"c", t.c},
                {"mdp", t.mdp},
                {"target_mdp", config.target},
                {"B", config.B},
                {"c_bracket", {config.c_lo, config.c_hi}},
                {"seed", config.seed},
                {"at_boundary", t.at_boundary},
                {"warnings", t.warnings},
                {"trace", trace}};
}

int run_fit(const FitCommand& cmd, const GlobalOptions& g, std::ostream& out, std::ostream& err) {
    return guarded(err, [&] {
        ModelConfig cfg = ModelConfig::load(cmd.config);
        if (cmd.robust) cfg.robust = RobustSetting::parse(*cmd.robust);
        if (cmd.select) cfg.select = select_from_name(*cmd.select);
        if (cmd.lambda_grid) cfg.lambda_grid = LambdaGrid::parse(*cmd.lambda_grid);
        const CsvTable data = read_csv(cmd.data);
        const FitOutcome o = fit_model(cfg, data, resolve_seed(g, cfg.seed), g.threads);

        const std::string artifact_path = g.out.empty() ? "model.json" : g.out;
        const std::string stem = artifact_stem(artifact_path);
        const std::string fitted_path = cmd.fitted.value_or(stem + ".fitted.csv");
        o.artifact.save(artifact_path);
        // Fitted values go through the same path as predict on new data.
        const PredictionTable t = predict(o.artifact, data);
        with_output(fitted_path, out, [&](std::ostream& s) {
            write_predictions(s, o.artifact, t, &o.artifact.loglik, &o.artifact.weights);
        });
        with_output(stem + ".coef.csv", out, [&](std::ostream& s) { write_coefficients(s, o.artifact, o.edf_diag); });
        print_fit_summary(out, o, artifact_path, fitted_path);
        if (!o.artifact.converged) {
            fmt::print(err, "fit did not converge; outputs were written for inspection\n");
            return kExitNotConverged;
        }
        return kExitOk;
    });
}

int run_predict(const PredictCommand& cmd, const GlobalOptions& g, std::ostream& out, std::ostream& err) {
    return guarded(err, [&] {
        const FitArtifact a = FitArtifact::load(cmd.model);
        const CsvTable data = read_csv(cmd.data);
        const PredictionTable t = predict(a, data);
        with_output(g.out, out, [&](std::ostream& s) { write_predictions(s, a, t); });
        if (const int k = t.n_outside(); k > 0) {
            fmt::print(err, "warning: {} row(s) outside the basis envelope (flagged in column 'outside')\n", k);
        }
        return kExitOk;
    });
}

int run_weights(const WeightsCommand& cmd, const GlobalOptions& g, std::ostream& out, std::ostream& err) {
    return guarded(err, [&] {
        const FitArtifact a = FitArtifact::load(cmd.model);
        const CsvTable data = read_csv(cmd.data);
        const auto rows = robustness_table(a, data, g.threads);
        with_output(g.out, out, [&](std::ostream& s) {
            write_csv_row(s, {"row", "loglik", "w"});
            for (const auto& r : rows) write_csv_row(s, {std::to_string(r.row), format_double(r.loglik), format_double(r.weight)});
        });
        return kExitOk;
    });
}

int run_tune(const TuneCommand& cmd, const GlobalOptions& g, std::ostream& out, std::ostream& err) {
    return guarded(err, [&] {
        ModelConfig cfg = ModelConfig::load(cmd.config);
        if (cmd.target_mdp) cfg.tune.target = *cmd.target_mdp;
        if (cmd.B) cfg.tune.B = *cmd.B;
        if (cmd.c_bracket) std::tie(cfg.tune.c_lo, cfg.tune.c_hi) = parse_bracket(*cmd.c_bracket);
        cfg.tune.seed = resolve_seed(g, cfg.seed);
        cfg.tune.validate();
        const CsvTable data = read_csv(cmd.data);
        PreparedModel pm = prepare(cfg, data, g.threads);
        const TuneResult t = tune_c(*pm.objective, cfg.tune, pm.refit);
        const json report = tuning_to_json(t, cfg.tune);
        if (!g.out.empty()) {
            with_output(g.out, out, [&](std::ostream& s) { s << report.dump(1) << '\n'; });
        }
        fmt::print(out, "{:>10} {:>10} {:>10}\n", "c", "MDP", "converged");
        for (const auto& p : t.trace) fmt::print(out, "{:>10.5g} {:>10.5f} {:>10}\n", p.c, p.mdp, p.converged ? "yes" : "no");
        fmt::print(out, "c* = {:.5g} (MDP {:.5f}, target {})\n", t.c, t.mdp, cfg.tune.target);
        for (const auto& w : t.warnings) fmt::print(out, "warning: {}\n", w);
        if (!t.fit.converged) {
            fmt::print(err, "the fit at c* did not converge\n");
            return kExitNotConverged;
        }
        return kExitOk;
    });
}

void write_replication(std::ostream& out, const ReplicationData& rd) {
    std::vector<std::string> header;
    for (const auto& [name, col] : rd.covariates) header.push_back(name);
    header.push_back("y");
    for (Eigen::Index d = 0; d < rd.eta_true.cols(); ++d) header.push_back("eta_true_" + param_name(static_cast<int>(d)));
    header.push_back("contaminated");
    write_csv_row(out, header);
    std::vector<bool> flag(static_cast<std::size_t>(rd.y.size()), false);
    for (int i : rd.contaminated) flag[static_cast<std::size_t>(i)] = true;
    for (Eigen::Index i = 0; i < rd.y.size(); ++i) {
        std::vector<std::string> f;
        for (const auto& [name, col] : rd.covariates) f.push_back(format_double(col[static_cast<std::size_t>(i)]));
        f.push_back(format_double(rd.y[i]));
        for (Eigen::Index d = 0; d < rd.eta_true.cols(); ++d) f.push_back(format_double(rd.eta_true(i, d)));
        f.push_back(flag[static_cast<std::size_t>(i)] ? "1" : "0");
        write_csv_row(out, f);
    }
}

int run_simulate(const SimulateCommand& cmd, const GlobalOptions& g, std::ostream& out, std::ostream& err) {
    return guarded(err, [&] {
        StudyConfig sc;
        sc.design = design_from_name(cmd.design);
        sc.replications = cmd.reps;
        sc.contaminate = cmd.contaminate;
        sc.estimators.clear();
        for (const auto& e : cmd.estimators) sc.estimators.push_back(estimator_from_name(e));
        if (cmd.c) sc.c = *cmd.c;
        sc.n = cmd.n;
        sc.mask = cmd.full_mask ? MaskSize::Full : MaskSize::Reduced;
        sc.target_mdp = cmd.target_mdp;
        sc.mdp_B = cmd.mdp_B;
        sc.seed = g.seed.value_or(1);
        sc.threads = g.threads;
        sc.validate();
        if (cmd.write_data) {
            const ReplicationData rd = make_replication(sc, 0);
            with_output(*cmd.write_data, out, [&](std::ostream& s) { write_replication(s, rd); });
            return kExitOk;
        }
        const StudyResult res = run_study(sc);
        with_output(g.out, out, [&](std::ostream& s) {
            write_csv_row(s, {"replication", "estimator", "converged", "failed", "mse_eta1", "mse_eta2", "mse_mu",
                              "mse_sigma", "edf", "c", "message"});
            for (const auto& r : res.records) {
                write_csv_row(s, {std::to_string(r.replication), estimator_name(r.estimator), r.converged ? "1" : "0",
                                  r.failed ? "1" : "0", format_double(r.mse_eta1), format_double(r.mse_eta2),
                                  format_double(r.mse_mu), format_double(r.mse_sigma), format_double(r.edf),
                                  format_double(r.c), r.message});
            }
        });
        auto write_summary = [&](std::ostream& s) {
            write_csv_row(s, {"estimator", "target", "Average", "SD", "Median", "IQR", "count"});
            for (const auto& row : res.summary) {
                write_csv_row(s, {estimator_name(row.estimator), row.target, format_double(row.average),
                                  format_double(row.sd), format_double(row.median), format_double(row.iqr),
                                  std::to_string(row.count)});
            }
        };
        std::string summary_path = cmd.summary.value_or("");
        if (summary_path.empty() && !g.out.empty()) {
            summary_path = (g.out.ends_with(".csv") ? g.out.substr(0, g.out.size() - 4) : g.out) + "_summary.csv";
        }
        if (!summary_path.empty()) with_output(summary_path, out, write_summary);
        if (!g.out.empty()) {
            fmt::print(out, "design {} ({}), {} replications, c = {:.4g}\n", design_name(sc.design),
                       sc.contaminate ? "contaminated" : "clean", sc.replications, res.c);
            fmt::print(out, "{:<12} {:<6} {:>10} {:>10} {:>10} {:>10}\n", "estimator", "target", "Average", "SD",
                       "Median", "IQR");
            for (const auto& row : res.summary) {
                fmt::print(out, "{:<12} {:<6} {:>10.4g} {:>10.4g} {:>10.4g} {:>10.4g}\n", estimator_name(row.estimator),
                           row.target, row.average, row.sd, row.median, row.iqr);
            }
        } else if (summary_path.empty()) {
            write_summary(out);
        }
        return kExitOk;
    });
}

}  // namespace rgamlss::cli

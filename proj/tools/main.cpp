#include <iostream>

#include "CLI11.hpp"
#include "cli/commands.hpp"
#include "cli/errors.hpp"

using namespace rgamlss::cli;

int main(int argc, char** argv) {
    CLI::App app{"Robust penalized GAMLSS fitting"};
    app.require_subcommand(1);
    app.fallthrough();

    GlobalOptions g;
    std::uint64_t seed = 0;
    auto* seed_opt = app.add_option("--seed", seed, "Random seed (MDP tuning, simulation)");
    app.add_option("--threads", g.threads, "Worker threads")->check(CLI::PositiveNumber);
    app.add_option("--out", g.out, "Output path (artifact for fit, CSV or JSON otherwise)");

    FitCommand fit;
    auto* fit_cmd = app.add_subcommand("fit", "Fit a model and write the artifact, fitted values and coefficients");
    fit_cmd->add_option("--config", fit.config, "Model configuration (JSON)")->required();
    fit_cmd->add_option("--data", fit.data, "Training data (CSV with header)")->required();
    fit_cmd->add_option("--robust", fit.robust, "ml | tune | c=<value>");
    fit_cmd->add_option("--select", fit.select, "efs | raic | rbic");
    fit_cmd->add_option("--lambda-grid", fit.lambda_grid, "lo:hi:n grid for raic/rbic");
    fit_cmd->add_option("--fitted", fit.fitted, "Fitted-values CSV (default <out>.fitted.csv)");

    PredictCommand pred;
    auto* pred_cmd = app.add_subcommand("predict", "Predictors, parameters and intervals on new rows");
    pred_cmd->add_option("--model", pred.model, "Fit artifact (JSON)")->required();
    pred_cmd->add_option("--data", pred.data, "Covariates (CSV with header)")->required();

    WeightsCommand wts;
    auto* wts_cmd = app.add_subcommand("weights", "Robustness weights sorted ascending");
    wts_cmd->add_option("--model", wts.model, "Fit artifact (JSON)")->required();
    wts_cmd->add_option("--data", wts.data, "Data with the response column (CSV)")->required();

    TuneCommand tune;
    auto* tune_cmd = app.add_subcommand("tune", "Tune c to a target mean downweighting proportion");
    tune_cmd->add_option("--config", tune.config, "Model configuration (JSON)")->required();
    tune_cmd->add_option("--data", tune.data, "Training data (CSV with header)")->required();
    tune_cmd->add_option("--target-mdp", tune.target_mdp, "Target MDP");
    tune_cmd->add_option("--B", tune.B, "Simulated responses per probe");
    tune_cmd->add_option("--c-bracket", tune.c_bracket, "lo:hi initial bracket on c");

    SimulateCommand sim;
    auto* sim_cmd = app.add_subcommand("simulate", "Run a simulation study");
    sim_cmd->add_option("--design", sim.design, "poisson-gam | gamma-gamlss-2d");
    sim_cmd->add_option("--reps", sim.reps, "Replications")->check(CLI::PositiveNumber);
    sim_cmd->add_flag("--contaminate", sim.contaminate, "Contaminate 5% of the responses");
    sim_cmd->add_option("--estimators", sim.estimators, "classical, robust-efs, robust-raic, robust-rbic")
        ->delimiter(',');
    sim_cmd->add_option("--c", sim.c, "Robustness constant (default: tuned on a pilot replication)");
    sim_cmd->add_option("--n", sim.n, "Sample size of the Poisson design");
    sim_cmd->add_flag("--full-mask", sim.full_mask, "Use the full 1567-point mask for the gamma design");
    sim_cmd->add_option("--target-mdp", sim.target_mdp, "Target MDP for pilot tuning");
    sim_cmd->add_option("--B", sim.mdp_B, "Simulated responses per tuning probe");
    sim_cmd->add_option("--summary", sim.summary, "Summary CSV (default <out>_summary.csv)");
    sim_cmd->add_option("--write-data", sim.write_data, "Write replication 0 as CSV and exit");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kExitOk : kExitError;
    }
    if (seed_opt->count() > 0) g.seed = seed;

    if (fit_cmd->parsed()) return run_fit(fit, g, std::cout, std::cerr);
    if (pred_cmd->parsed()) return run_predict(pred, g, std::cout, std::cerr);
    if (wts_cmd->parsed()) return run_weights(wts, g, std::cout, std::cerr);
    if (tune_cmd->parsed()) return run_tune(tune, g, std::cout, std::cerr);
    if (sim_cmd->parsed()) return run_simulate(sim, g, std::cout, std::cerr);
    return kExitError;
}

#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "cli/artifact.hpp"
#include "cli/config.hpp"
#include "cli/csv.hpp"
#include "rgamlss/simulation.hpp"
#include "rgamlss/tuning.hpp"

namespace rgamlss::cli {

struct GlobalOptions {
    std::optional<std::uint64_t> seed;
    int threads = 1;
    std::string out;
};

/// Covariates and response extracted from a CSV according to a column list.
/// Throws SchemaError listing every missing column.
CovariateTable covariate_table(const CsvTable& csv, const std::vector<std::string>& names);

struct FitOutcome {
    FitArtifact artifact;
    std::optional<TuneResult> tuning;
    /// Per-coefficient edf contributions (NaN when the covariance failed).
    Eigen::VectorXd edf_diag;
};

/// Runs the full pipeline (optional MDP tuning of c, smoothing-parameter
/// selection, covariances, edf, weights) and packages the artifact.
FitOutcome fit_model(const ModelConfig& config, const CsvTable& data, std::uint64_t seed, int threads);

/// Fitted or predicted values on the rows of a CSV.
struct PredictionTable {
    std::vector<std::string> covariate_names;
    CovariateTable covariates;
    int n_params = 1;
    Eigen::MatrixXd eta;     ///< n x n_params
    Eigen::MatrixXd theta;   ///< canonical parameters
    Eigen::MatrixXd se;      ///< standard error of eta (NaN without covariance)
    Eigen::MatrixXd lower;   ///< eta scale
    Eigen::MatrixXd upper;
    std::vector<bool> outside;

    [[nodiscard]] int n_outside() const;
};

PredictionTable predict(const FitArtifact& artifact, const CsvTable& data);

/// Long-format CSV: row, covariates, eta_*, parameters, se_eta_*, bounds,
/// outside flag, plus optional loglik and weight columns.
void write_predictions(std::ostream& out, const FitArtifact& artifact, const PredictionTable& table,
                       const Eigen::VectorXd* loglik = nullptr, const Eigen::VectorXd* weights = nullptr);

struct WeightRow {
    int row = 0;  ///< 1-based data row
    double loglik = 0.0;
    double weight = 1.0;
};

/// Robustness weights of the stored fit on `data`, sorted ascending by weight
/// (ties by row).
std::vector<WeightRow> robustness_table(const FitArtifact& artifact, const CsvTable& data, int threads = 1);

/// Coefficient table: index, parameter, delta, covariance diagonals, edf share.
void write_coefficients(std::ostream& out, const FitArtifact& artifact, const Eigen::VectorXd& edf_diag);

nlohmann::json tuning_to_json(const TuneResult& t, const MdpConfig& config);

struct FitCommand {
    std::string config;
    std::string data;
    std::optional<std::string> robust;
    std::optional<std::string> select;
    std::optional<std::string> lambda_grid;
    std::optional<std::string> fitted;
};

struct PredictCommand {
    std::string model;
    std::string data;
};

struct WeightsCommand {
    std::string model;
    std::string data;
};

struct TuneCommand {
    std::string config;
    std::string data;
    std::optional<double> target_mdp;
    std::optional<int> B;
    std::optional<std::string> c_bracket;
};

struct SimulateCommand {
    std::string design = "poisson-gam";
    int reps = 50;
    bool contaminate = false;
    std::vector<std::string> estimators{"classical", "robust-efs"};
    std::optional<double> c;
    int n = 100;
    bool full_mask = false;
    double target_mdp = 0.95;
    int mdp_B = 100;
    std::optional<std::string> summary;
    std::optional<std::string> write_data;
};

/// Each command returns a process exit code: 0 success, 2 a fit did not
/// converge (outputs are still written), 1 input or runtime error. Messages
/// go to `err`, tables and summaries to `out`.
int run_fit(const FitCommand& cmd, const GlobalOptions& g, std::ostream& out, std::ostream& err);
int run_predict(const PredictCommand& cmd, const GlobalOptions& g, std::ostream& out, std::ostream& err);
int run_weights(const WeightsCommand& cmd, const GlobalOptions& g, std::ostream& out, std::ostream& err);
int run_tune(const TuneCommand& cmd, const GlobalOptions& g, std::ostream& out, std::ostream& err);
int run_simulate(const SimulateCommand& cmd, const GlobalOptions& g, std::ostream& out, std::ostream& err);

/// Writes one replication of a simulation design as CSV (covariates, y,
/// true predictors, contamination flag).
void write_replication(std::ostream& out, const ReplicationData& rd);

}  // namespace rgamlss::cli

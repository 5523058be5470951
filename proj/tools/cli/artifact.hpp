#pragma once

#include <limits>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "json.hpp"
#include "rgamlss/correction.hpp"
#include "rgamlss/design.hpp"
#include "rgamlss/families.hpp"
#include "rgamlss/inference.hpp"
#include "rgamlss/rho.hpp"

namespace rgamlss::cli {

inline constexpr const char* kArtifactFormat = "rgamlss-fit";
inline constexpr int kArtifactVersion = 1;

/// Everything needed to reproduce fitted values, weights and intervals
/// without the training data.
struct FitArtifact {
    int version = kArtifactVersion;
    std::string family;
    std::vector<std::string> links;
    std::string response;
    std::vector<std::string> covariates;
    int n_params = 1;
    int n_obs = 0;
    /// Smooth blocks with margins, penalties and Z; X is not stored.
    std::vector<DesignBlock> blocks;

    Eigen::VectorXd delta;
    Eigen::VectorXd lambda;
    /// +inf for maximum likelihood.
    double c = std::numeric_limits<double>::infinity();
    std::string selection;
    bool converged = false;
    int iterations = 0;
    int outer_iterations = 0;
    EdfTable edf;
    Eigen::VectorXd loglik;
    Eigen::VectorXd weights;
    std::optional<Eigen::MatrixXd> sandwich;
    std::optional<Eigen::MatrixXd> posterior;
    double ci_level = 0.95;
    bool use_sandwich = true;
    CorrectionOptions integrator;
    /// Tuning record (c, MDP and probe trace) when c was tuned.
    nlohmann::json tuning;
    std::vector<std::string> warnings;

    [[nodiscard]] nlohmann::json to_json() const;
    /// Throws SchemaError on a wrong format tag or version.
    static FitArtifact from_json(const nlohmann::json& j);
    void save(const std::string& path) const;
    static FitArtifact load(const std::string& path);

    [[nodiscard]] FamilyPtr make_family_ptr() const;
    [[nodiscard]] RhoPtr make_rho() const;
    /// Design rows for `data` using the stored bases.
    [[nodiscard]] ModelDesign design_for(const CovariateTable& data) const;
    /// Covariance used for intervals (null when none was stored).
    [[nodiscard]] const Eigen::MatrixXd* interval_covariance() const;
};

nlohmann::json matrix_to_json(const Eigen::MatrixXd& m);
Eigen::MatrixXd matrix_from_json(const nlohmann::json& j);
nlohmann::json vector_to_json(const Eigen::VectorXd& v);
Eigen::VectorXd vector_from_json(const nlohmann::json& j);

}  // namespace rgamlss::cli

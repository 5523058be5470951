#pragma once

#include <optional>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "json.hpp"
#include "rgamlss/correction.hpp"
#include "rgamlss/design.hpp"
#include "rgamlss/smoothing_selection.hpp"
#include "rgamlss/tuning.hpp"

namespace rgamlss::cli {

/// How c is chosen: maximum likelihood, a fixed value, or MDP tuning.
struct RobustSetting {
    enum class Mode { ML, Fixed, Tune };
    Mode mode = Mode::Tune;
    double c = 0.0;

    /// Accepts "ml", "tune", "c=<value>" or a bare number.
    static RobustSetting parse(const std::string& text);
    [[nodiscard]] std::string to_string() const;
};

enum class SelectMethod { Efs, Raic, Rbic };

SelectMethod select_from_name(const std::string& name);
std::string select_name(SelectMethod m);

/// Parsed model configuration.
///
/// {
///   "family": "GA", "links": ["log", "log"], "response": "y",
///   "formula": [{"param": "mu", "smooth": {"vars": ["X", "Y"], "k": [6, 6], "order": 2}}],
///   "robust": "tune" | "ml" | 3.1,
///   "select": "efs" | "raic" | "rbic", "lambda_grid": "1e-4:1e6:21", "lambda0": [1, 1],
///   "ci_level": 0.95, "covariance": "sandwich" | "posterior",
///   "tune": {"target_mdp": 0.95, "B": 100, "c_bracket": "0.5:20"},
///   "optimizer": {...}, "efs": {...}, "integrator": {...}, "seed": 1
/// }
struct ModelConfig {
    std::string family;
    std::vector<std::string> links;
    std::string response = "y";
    std::vector<SmoothSpec> smooths;
    RobustSetting robust;
    SelectMethod select = SelectMethod::Efs;
    LambdaGrid lambda_grid{1e-4, 1e6, 21};
    std::optional<Eigen::VectorXd> lambda0;
    double ci_level = 0.95;
    bool sandwich = true;
    MdpConfig tune;
    FitOptions fit;
    CorrectionOptions integrator;
    std::optional<std::uint64_t> seed;

    /// Throws SchemaError naming the offending field.
    static ModelConfig from_json(const nlohmann::json& j);
    static ModelConfig load(const std::string& path);

    /// Covariate columns the formula needs, in first-use order.
    [[nodiscard]] std::vector<std::string> covariates() const;
};

/// "lo:hi" with 0 < lo < hi.
std::pair<double, double> parse_bracket(const std::string& text);

nlohmann::json to_json(const CorrectionOptions& o);
CorrectionOptions correction_options_from_json(const nlohmann::json& j);

}  // namespace rgamlss::cli

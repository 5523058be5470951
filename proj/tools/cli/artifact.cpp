#include "cli/artifact.hpp"

#include <cmath>
#include <fstream>

#include "cli/config.hpp"
#include "cli/errors.hpp"

namespace rgamlss::cli {

using nlohmann::json;

json matrix_to_json(const Eigen::MatrixXd& m) {
    json rows = json::array();
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        json r = json::array();
        for (Eigen::Index j = 0; j < m.cols(); ++j) r.push_back(m(i, j));
        rows.push_back(std::move(r));
    }
    return json{{"rows", m.rows()}, {"cols", m.cols()}, {"data", std::move(rows)}};
}

Eigen::MatrixXd matrix_from_json(const json& j) {
    const auto r = j.at("rows").get<Eigen::Index>();
    const auto c = j.at("cols").get<Eigen::Index>();
    const json& data = j.at("data");
    if (static_cast<Eigen::Index>(data.size()) != r) throw SchemaError("matrix row count mismatch");
    Eigen::MatrixXd m(r, c);
    for (Eigen::Index i = 0; i < r; ++i) {
        const json& row = data.at(static_cast<std::size_t>(i));
        if (static_cast<Eigen::Index>(row.size()) != c) throw SchemaError("matrix column count mismatch");
        for (Eigen::Index k = 0; k < c; ++k) m(i, k) = row.at(static_cast<std::size_t>(k)).get<double>();
    }
    return m;
}

json vector_to_json(const Eigen::VectorXd& v) {
    return json(std::vector<double>(v.data(), v.data() + v.size()));
}

Eigen::VectorXd vector_from_json(const json& j) {
    const auto v = j.get<std::vector<double>>();
    return Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
}

namespace {

json block_to_json(const DesignBlock& b) {
    json margins = json::array();
    for (const auto& m : b.margins) margins.push_back({{"degree", m.degree()}, {"knots", m.knots()}});
    json pens = json::array();
    for (const auto& p : b.penalties) pens.push_back(matrix_to_json(p));
    return json{{"param", b.spec.param}, {"vars", b.spec.vars},     {"k", b.spec.k},
                {"order", b.spec.order}, {"degree", b.spec.degree}, {"centered", b.centered},
                {"margins", margins},    {"Z", matrix_to_json(b.Z)}, {"penalties", pens}};
}

DesignBlock block_from_json(const json& j) {
    DesignBlock b;
    b.spec.param = j.at("param").get<int>();
    b.spec.vars = j.at("vars").get<std::vector<std::string>>();
    b.spec.k = j.at("k").get<std::vector<int>>();
    b.spec.order = j.at("order").get<int>();
    b.spec.degree = j.at("degree").get<int>();
    b.centered = j.at("centered").get<bool>();
    for (const auto& m : j.at("margins")) {
        b.margins.emplace_back(m.at("knots").get<std::vector<double>>(), m.at("degree").get<int>());
    }
    b.Z = matrix_from_json(j.at("Z"));
    for (const auto& p : j.at("penalties")) b.penalties.push_back(matrix_from_json(p));
    return b;
}

json finite_or_null(double x) { return std::isfinite(x) ? json(x) : json(nullptr); }

}  // namespace

json FitArtifact::to_json() const {
    json blocks_json = json::array();
    for (const auto& b : blocks) blocks_json.push_back(block_to_json(b));
    json j{{"format", kArtifactFormat},
           {"version", version},
           {"family", family},
           {"links", links},
           {"response", response},
           {"covariates", covariates},
           {"n_params", n_params},
           {"n_obs", n_obs},
           {"blocks", blocks_json},
           {"delta", vector_to_json(delta)},
           {"lambda", vector_to_json(lambda)},
           {"c", finite_or_null(c)},
           {"robust", std::isfinite(c) ? "fixed" : "ml"},
           {"selection", selection},
           {"converged", converged},
           {"iterations", iterations},
           {"outer_iterations", outer_iterations},
           {"edf", {{"total", edf.total}, {"per_param", edf.per_param}}},
           {"loglik", vector_to_json(loglik)},
           {"weights", vector_to_json(weights)},
           {"ci_level", ci_level},
           {"covariance_kind", use_sandwich ? "sandwich" : "posterior"},
           {"integrator", rgamlss::cli::to_json(integrator)},
           {"warnings", warnings}};
    json cov = json::object();
    if (sandwich) {
        cov["sandwich"] = matrix_to_json(*sandwich);
        cov["sandwich_diag"] = vector_to_json(sandwich->diagonal());
    }
    if (posterior) {
        cov["posterior"] = matrix_to_json(*posterior);
        cov["posterior_diag"] = vector_to_json(posterior->diagonal());
    }
    j["covariance"] = cov;
    if (!tuning.is_null()) j["tuning"] = tuning;
    return j;
}

FitArtifact FitArtifact::from_json(const json& j) {
    if (!j.is_object() || j.value("format", "") != kArtifactFormat) {
        throw SchemaError("not an rgamlss fit artifact");
    }
    const int v = j.value("version", -1);
    if (v != kArtifactVersion) {
        throw SchemaError("artifact version " + std::to_string(v) + " is not supported (this build reads version " +
                          std::to_string(kArtifactVersion) + "); refit the model");
    }
    FitArtifact a;
    try {
        a.version = v;
        a.family = j.at("family").get<std::string>();
        a.links = j.at("links").get<std::vector<std::string>>();
        a.response = j.at("response").get<std::string>();
        a.covariates = j.at("covariates").get<std::vector<std::string>>();
        a.n_params = j.at("n_params").get<int>();
        a.n_obs = j.at("n_obs").get<int>();
        for (const auto& b : j.at("blocks")) a.blocks.push_back(block_from_json(b));
        a.delta = vector_from_json(j.at("delta"));
        a.lambda = vector_from_json(j.at("lambda"));
        a.c = j.at("c").is_null() ? std::numeric_limits<double>::infinity() : j.at("c").get<double>();
        a.selection = j.at("selection").get<std::string>();
        a.converged = j.at("converged").get<bool>();
        a.iterations = j.at("iterations").get<int>();
        a.outer_iterations = j.at("outer_iterations").get<int>();
        a.edf.total = j.at("edf").at("total").get<double>();
        a.edf.per_param = j.at("edf").at("per_param").get<std::vector<double>>();
        a.loglik = vector_from_json(j.at("loglik"));
        a.weights = vector_from_json(j.at("weights"));
        a.ci_level = j.at("ci_level").get<double>();
        a.use_sandwich = j.at("covariance_kind").get<std::string>() == "sandwich";
        a.integrator = correction_options_from_json(j.at("integrator"));
        a.warnings = j.at("warnings").get<std::vector<std::string>>();
        const json& cov = j.at("covariance");
        if (cov.contains("sandwich")) a.sandwich = matrix_from_json(cov.at("sandwich"));
        if (cov.contains("posterior")) a.posterior = matrix_from_json(cov.at("posterior"));
        if (j.contains("tuning")) a.tuning = j.at("tuning");
    } catch (const json::exception& e) {
        throw SchemaError(std::string("malformed artifact: ") + e.what());
    }
    return a;
}

void FitArtifact::save(const std::string& path) const {
    std::ofstream out(path);
    if (!out) throw SchemaError("cannot write " + path);
    out << to_json().dump(1) << '\n';
}

FitArtifact FitArtifact::load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw SchemaError("cannot open artifact " + path);
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        throw SchemaError("artifact " + path + " is not valid JSON: " + e.what());
    }
    return from_json(j);
}

FamilyPtr FitArtifact::make_family_ptr() const {
    std::vector<Link> ls;
    for (const auto& name : links) ls.push_back(Link::from_name(name));
    return ls.empty() ? make_family(family) : make_family(family, ls);
}

RhoPtr FitArtifact::make_rho() const {
    return std::isfinite(c) ? make_log_logistic_rho(c) : make_identity_rho();
}

ModelDesign FitArtifact::design_for(const CovariateTable& data) const {
    return ModelDesign::from_blocks(blocks, data, n_params);
}

const Eigen::MatrixXd* FitArtifact::interval_covariance() const {
    if (use_sandwich && sandwich) return &*sandwich;
    if (!use_sandwich && posterior) return &*posterior;
    return nullptr;
}

}  // namespace rgamlss::cli

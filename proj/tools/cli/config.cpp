#include "cli/config.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <set>

#include "cli/errors.hpp"
#include "rgamlss/families.hpp"

namespace rgamlss::cli {

using nlohmann::json;

namespace {

double parse_number(const std::string& text, const std::string& what) {
    double v = 0.0;
    const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
    if (text.empty() || ec != std::errc{} || ptr != text.data() + text.size() || !std::isfinite(v)) {
        throw SchemaError(what + ": '" + text + "' is not a number");
    }
    return v;
}

void reject_unknown(const json& j, const std::string& where, std::initializer_list<const char*> known) {
    const std::set<std::string> allowed(known.begin(), known.end());
    for (const auto& [key, value] : j.items()) {
        if (!allowed.contains(key)) throw SchemaError(where + ": unknown field '" + key + "'");
    }
}

template <class T>
T field(const json& j, const std::string& where, const char* key, T fallback) {
    if (!j.contains(key)) return fallback;
    try {
        return j.at(key).get<T>();
    } catch (const json::exception&) {
        throw SchemaError(where + "." + key + " has the wrong type");
    }
}

int param_index(const json& p, int n_params) {
    int d = -1;
    if (p.is_string()) {
        const auto name = p.get<std::string>();
        for (std::size_t i = 0; i < kParamNames.size(); ++i) {
            if (kParamNames[i] == name) d = static_cast<int>(i);
        }
        if (d < 0) throw SchemaError("formula.param: unknown parameter '" + name + "'");
    } else if (p.is_number_integer()) {
        d = p.get<int>();
    } else {
        throw SchemaError("formula.param must be a name or an index");
    }
    if (d < 0 || d >= n_params) {
        throw SchemaError("formula.param " + std::to_string(d) + " exceeds the family's " +
                          std::to_string(n_params) + " parameters");
    }
    return d;
}

SmoothSpec parse_term(const json& term, int n_params) {
    if (!term.is_object()) throw SchemaError("formula entries must be objects");
    reject_unknown(term, "formula", {"param", "smooth"});
    if (!term.contains("param")) throw SchemaError("formula entry needs 'param'");
    if (!term.contains("smooth")) throw SchemaError("formula entry needs 'smooth'");
    const json& s = term.at("smooth");
    reject_unknown(s, "formula.smooth", {"vars", "k", "order", "degree"});
    SmoothSpec spec;
    spec.param = param_index(term.at("param"), n_params);
    spec.vars = field<std::vector<std::string>>(s, "formula.smooth", "vars", {});
    if (s.contains("k") && s.at("k").is_number_integer()) {
        spec.k = std::vector<int>(spec.vars.size(), s.at("k").get<int>());
    } else {
        spec.k = field<std::vector<int>>(s, "formula.smooth", "k", {});
    }
    spec.order = field<int>(s, "formula.smooth", "order", 2);
    spec.degree = field<int>(s, "formula.smooth", "degree", 3);
    try {
        spec.validate();
    } catch (const std::exception& e) {
        throw SchemaError(std::string("formula.smooth: ") + e.what());
    }
    return spec;
}

}  // namespace

RobustSetting RobustSetting::parse(const std::string& text) {
    RobustSetting r;
    if (text == "ml") {
        r.mode = Mode::ML;
    } else if (text == "tune") {
        r.mode = Mode::Tune;
    } else {
        const std::string num = text.starts_with("c=") ? text.substr(2) : text;
        r.mode = Mode::Fixed;
        r.c = parse_number(num, "robust");
        if (!(r.c > 0.0)) throw SchemaError("robust: c must be positive");
    }
    return r;
}

std::string RobustSetting::to_string() const {
    switch (mode) {
        case Mode::ML: return "ml";
        case Mode::Tune: return "tune";
        case Mode::Fixed: return "c=" + std::to_string(c);
    }
    return "?";
}

SelectMethod select_from_name(const std::string& name) {
    if (name == "efs") return SelectMethod::Efs;
    if (name == "raic") return SelectMethod::Raic;
    if (name == "rbic") return SelectMethod::Rbic;
    throw SchemaError("select: unknown method '" + name + "' (expected efs, raic or rbic)");
}

std::string select_name(SelectMethod m) {
    switch (m) {
        case SelectMethod::Efs: return "efs";
        case SelectMethod::Raic: return "raic";
        case SelectMethod::Rbic: return "rbic";
    }
    return "?";
}

std::pair<double, double> parse_bracket(const std::string& text) {
    const auto colon = text.find(':');
    if (colon == std::string::npos) throw SchemaError("bracket '" + text + "' must be lo:hi");
    const double lo = parse_number(text.substr(0, colon), "bracket");
    const double hi = parse_number(text.substr(colon + 1), "bracket");
    if (!(lo > 0.0 && hi > lo)) throw SchemaError("bracket '" + text + "' needs 0 < lo < hi");
    return {lo, hi};
}

json to_json(const CorrectionOptions& o) {
    return json{{"rel_tol", o.rel_tol},         {"max_panels", o.max_panels},
                {"tail_prob", o.tail_prob},     {"mass_deficit", o.mass_deficit},
                {"last_term", o.last_term},     {"max_terms", o.max_terms}};
}

CorrectionOptions correction_options_from_json(const json& j) {
    reject_unknown(j, "integrator", {"rel_tol", "max_panels", "tail_prob", "mass_deficit", "last_term", "max_terms"});
    CorrectionOptions o;
    o.rel_tol = field(j, "integrator", "rel_tol", o.rel_tol);
    o.max_panels = field(j, "integrator", "max_panels", o.max_panels);
    o.tail_prob = field(j, "integrator", "tail_prob", o.tail_prob);
    o.mass_deficit = field(j, "integrator", "mass_deficit", o.mass_deficit);
    o.last_term = field(j, "integrator", "last_term", o.last_term);
    o.max_terms = field(j, "integrator", "max_terms", o.max_terms);
    if (!(o.rel_tol > 0.0) || o.max_panels < 1 || !(o.tail_prob > 0.0 && o.tail_prob < 0.5) ||
        !(o.mass_deficit > 0.0) || !(o.last_term > 0.0) || o.max_terms < 1) {
        throw SchemaError("integrator: tolerances must be positive");
    }
    return o;
}

ModelConfig ModelConfig::from_json(const json& j) {
    if (!j.is_object()) throw SchemaError("config must be a JSON object");
    reject_unknown(j, "config",
                   {"family", "links", "response", "formula", "robust", "select", "lambda_grid", "lambda0",
                    "ci_level", "covariance", "tune", "optimizer", "efs", "integrator", "seed"});
    ModelConfig cfg;
    cfg.family = field<std::string>(j, "config", "family", "");
    if (cfg.family.empty()) throw SchemaError("config.family is required");
    FamilyPtr fam;
    try {
        fam = make_family(cfg.family);
    } catch (const std::exception& e) {
        throw SchemaError(std::string("config.family: ") + e.what());
    }
    cfg.links = field<std::vector<std::string>>(j, "config", "links", {});
    if (!cfg.links.empty() && static_cast<int>(cfg.links.size()) != fam->n_params()) {
        throw SchemaError("config.links needs " + std::to_string(fam->n_params()) + " entries for family " +
                          cfg.family);
    }
    cfg.response = field<std::string>(j, "config", "response", "y");
    if (j.contains("formula")) {
        if (!j.at("formula").is_array()) throw SchemaError("config.formula must be an array");
        for (const auto& term : j.at("formula")) cfg.smooths.push_back(parse_term(term, fam->n_params()));
    }
    if (j.contains("robust")) {
        const json& r = j.at("robust");
        if (r.is_number()) {
            cfg.robust.mode = RobustSetting::Mode::Fixed;
            cfg.robust.c = r.get<double>();
            if (!(cfg.robust.c > 0.0)) throw SchemaError("config.robust: c must be positive");
        } else if (r.is_string()) {
            cfg.robust = RobustSetting::parse(r.get<std::string>());
        } else {
            throw SchemaError("config.robust must be \"ml\", \"tune\" or a number");
        }
    }
    cfg.select = select_from_name(field<std::string>(j, "config", "select", "efs"));
    if (j.contains("lambda_grid")) {
        try {
            cfg.lambda_grid = LambdaGrid::parse(field<std::string>(j, "config", "lambda_grid", ""));
        } catch (const std::exception& e) {
            throw SchemaError(std::string("config.lambda_grid: ") + e.what());
        }
    }
    if (j.contains("lambda0")) {
        const auto v = field<std::vector<double>>(j, "config", "lambda0", {});
        for (double x : v) {
            if (!(x > 0.0)) throw SchemaError("config.lambda0 entries must be positive");
        }
        cfg.lambda0 = Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
    }
    cfg.ci_level = field(j, "config", "ci_level", cfg.ci_level);
    if (!(cfg.ci_level > 0.0 && cfg.ci_level < 1.0)) throw SchemaError("config.ci_level must lie in (0, 1)");
    const auto cov = field<std::string>(j, "config", "covariance", "sandwich");
    if (cov != "sandwich" && cov != "posterior") {
        throw SchemaError("config.covariance must be \"sandwich\" or \"posterior\"");
    }
    cfg.sandwich = cov == "sandwich";
    if (j.contains("tune")) {
        const json& t = j.at("tune");
        reject_unknown(t, "tune", {"target_mdp", "B", "c_bracket", "mdp_tol", "width_tol", "max_expansions"});
        cfg.tune.target = field(t, "tune", "target_mdp", cfg.tune.target);
        cfg.tune.B = field(t, "tune", "B", cfg.tune.B);
        if (t.contains("c_bracket")) {
            std::tie(cfg.tune.c_lo, cfg.tune.c_hi) = parse_bracket(field<std::string>(t, "tune", "c_bracket", ""));
        }
        cfg.tune.mdp_tol = field(t, "tune", "mdp_tol", cfg.tune.mdp_tol);
        cfg.tune.width_tol = field(t, "tune", "width_tol", cfg.tune.width_tol);
        cfg.tune.max_expansions = field(t, "tune", "max_expansions", cfg.tune.max_expansions);
    }
    if (j.contains("optimizer")) {
        const json& o = j.at("optimizer");
        reject_unknown(o, "optimizer",
                       {"initial_radius", "max_iterations", "grad_tol", "min_radius", "max_radius", "eta_low",
                        "eta_high", "shrink", "expand"});
        auto& tr = cfg.fit.trust_region;
        tr.initial_radius = field(o, "optimizer", "initial_radius", tr.initial_radius);
        tr.max_iterations = field(o, "optimizer", "max_iterations", tr.max_iterations);
        tr.grad_tol = field(o, "optimizer", "grad_tol", tr.grad_tol);
        tr.min_radius = field(o, "optimizer", "min_radius", tr.min_radius);
        tr.max_radius = field(o, "optimizer", "max_radius", tr.max_radius);
        tr.eta_low = field(o, "optimizer", "eta_low", tr.eta_low);
        tr.eta_high = field(o, "optimizer", "eta_high", tr.eta_high);
        tr.shrink = field(o, "optimizer", "shrink", tr.shrink);
        tr.expand = field(o, "optimizer", "expand", tr.expand);
    }
    if (j.contains("efs")) {
        const json& e = j.at("efs");
        reject_unknown(e, "efs",
                       {"max_iterations", "tol", "ratio_min", "ratio_max", "lambda_min", "lambda_max",
                        "max_acceleration"});
        auto& ef = cfg.fit.efs;
        ef.max_iterations = field(e, "efs", "max_iterations", ef.max_iterations);
        ef.tol = field(e, "efs", "tol", ef.tol);
        ef.ratio_min = field(e, "efs", "ratio_min", ef.ratio_min);
        ef.ratio_max = field(e, "efs", "ratio_max", ef.ratio_max);
        ef.lambda_min = field(e, "efs", "lambda_min", ef.lambda_min);
        ef.lambda_max = field(e, "efs", "lambda_max", ef.lambda_max);
        ef.max_acceleration = field(e, "efs", "max_acceleration", ef.max_acceleration);
    }
    if (j.contains("integrator")) cfg.integrator = correction_options_from_json(j.at("integrator"));
    if (j.contains("seed")) cfg.seed = field<std::uint64_t>(j, "config", "seed", 0);
    try {
        cfg.fit.trust_region.validate();
        cfg.tune.validate();
    } catch (const std::exception& e) {
        throw SchemaError(std::string("config: ") + e.what());
    }
    return cfg;
}

ModelConfig ModelConfig::load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw SchemaError("cannot open config " + path);
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        throw SchemaError("config " + path + " is not valid JSON: " + e.what());
    }
    return from_json(j);
}

std::vector<std::string> ModelConfig::covariates() const {
    std::vector<std::string> out;
    for (const auto& s : smooths) {
        for (const auto& v : s.vars) {
            if (std::find(out.begin(), out.end(), v) == out.end()) out.push_back(v);
        }
    }
    return out;
}

}  // namespace rgamlss::cli

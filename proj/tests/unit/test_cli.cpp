#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <string>

#include <unistd.h>

#include "cli/artifact.hpp"
#include "cli/csv.hpp"
#include "cli/errors.hpp"
#include "doctest.h"

using namespace rgamlss::cli;
namespace fs = std::filesystem;

namespace {

struct Workspace {
    fs::path dir;

    Workspace() {
        dir = fs::temp_directory_path() / ("rgamlss_cli_" + std::to_string(::getpid()));
        fs::create_directories(dir);
    }
    ~Workspace() {
        std::error_code ec;
        fs::remove_all(dir, ec);
    }

    [[nodiscard]] std::string path(const std::string& name) const { return (dir / name).string(); }

    void write(const std::string& name, const std::string& text) const { std::ofstream(path(name)) << text; }

    [[nodiscard]] std::string read(const std::string& name) const {
        std::ifstream in(path(name));
        std::stringstream ss;
        ss << in.rdbuf();
        return ss.str();
    }
};

const Workspace& ws() {
    static const Workspace w;
    return w;
}

/// Runs the CLI with stdout and stderr captured to files; returns the exit status.
int run(const std::string& args, const std::string& tag) {
    const std::string cmd = std::string(RGAMLSS_CLI_PATH) + " " + args + " > " + ws().path(tag + ".stdout") +
                            " 2> " + ws().path(tag + ".stderr");
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

CsvTable table(const std::string& name) { return read_csv(ws().path(name)); }

std::vector<double> column(const CsvTable& t, const std::string& name) { return t.numeric(name); }

const char* kPoissonConfig = R"({
  "family": "PO", "response": "y",
  "formula": [{"param": "mu", "smooth": {"vars": ["x"], "k": [12], "order": 2}}],
  "robust": 5.8, "select": "efs"
})";

const char* kGammaConfig = R"({
  "family": "GA", "response": "y",
  "formula": [{"param": "mu", "smooth": {"vars": ["X", "Y"], "k": [5, 5]}},
              {"param": "sigma", "smooth": {"vars": ["X", "Y"], "k": [4, 4]}}],
  "robust": 3.1, "select": "efs",
  "tune": {"B": 30}
})";

/// Poisson and gamma training data written by the simulate command, once.
void prepare_data() {
    static bool done = false;
    if (done) return;
    ws().write("po.json", kPoissonConfig);
    ws().write("ga.json", kGammaConfig);
    REQUIRE(run("--seed 11 simulate --design poisson-gam --n 200 --write-data " + ws().path("po.csv"), "sim1") == 0);
    REQUIRE(run("--seed 12 simulate --design gamma-gamlss-2d --write-data " + ws().path("ga.csv"), "sim2") == 0);
    REQUIRE(run("--seed 13 simulate --design gamma-gamlss-2d --contaminate --write-data " + ws().path("gac.csv"),
                "sim3") == 0);
    REQUIRE(run("--seed 1 --out " + ws().path("po_model.json") + " fit --config " + ws().path("po.json") +
                    " --data " + ws().path("po.csv"),
                "fit_po") == 0);
    done = true;
}

}  // namespace

TEST_CASE("CSV reading and writing") {
    std::istringstream in("a,\"b,c\",d\r\n1,\"say \"\"hi\"\"\",\r\n\"x\ny\",2,3\n");
    const CsvTable t = parse_csv(in);
    REQUIRE(t.header.size() == 3);
    CHECK(t.header[1] == "b,c");
    REQUIRE(t.n_rows() == 2);
    CHECK(t.rows[0][1] == "say \"hi\"");
    CHECK(t.rows[0][2].empty());
    CHECK(t.rows[1][0] == "x\ny");
    CHECK(t.find("d") == 2);
    CHECK(t.find("missing") == -1);

    std::ostringstream out;
    write_csv_row(out, {"plain", "with,comma", "with\"quote"});
    CHECK(out.str() == "plain,\"with,comma\",\"with\"\"quote\"\n");
    for (double v : {0.1, 1.0 / 3.0, -2.5e-300, 12345678.901234567}) CHECK(std::stod(format_double(v)) == v);
    CHECK(format_double(std::nan("")) == "nan");

    std::istringstream bad("x,y\n1,abc\n");
    const CsvTable b = parse_csv(bad);
    CHECK_THROWS_WITH_AS(b.numeric("y"), doctest::Contains("y"), SchemaError);
}

TEST_CASE("fit reports schema errors by column") {
    prepare_data();
    ws().write("noy.csv", "x,z\n0.1,1\n0.2,2\n");
    CHECK(run("fit --config " + ws().path("po.json") + " --data " + ws().path("noy.csv"), "missing") == 1);
    CHECK(ws().read("missing.stderr").find("missing column(s): y") != std::string::npos);
    ws().write("nox.csv", "y,z\n1,1\n2,2\n");
    CHECK(run("fit --config " + ws().path("po.json") + " --data " + ws().path("nox.csv"), "missing_x") == 1);
    CHECK(ws().read("missing_x.stderr").find("missing column(s): x") != std::string::npos);
}

TEST_CASE("maximum likelihood equals a huge c") {
    prepare_data();
    const std::string base = "--seed 1 fit --config " + ws().path("po.json") + " --data " + ws().path("po.csv");
    REQUIRE(run("--out " + ws().path("ml.json") + " " + base.substr(9) + " --robust ml", "ml") == 0);
    REQUIRE(run("--out " + ws().path("big.json") + " " + base.substr(9) + " --robust c=1e6", "big") == 0);
    const CsvTable a = table("ml.fitted.csv");
    const CsvTable b = table("big.fitted.csv");
    const auto ea = column(a, "eta_mu");
    const auto eb = column(b, "eta_mu");
    REQUIRE(ea.size() == eb.size());
    double worst = 0.0;
    for (std::size_t i = 0; i < ea.size(); ++i) worst = std::max(worst, std::abs(std::exp(ea[i]) - std::exp(eb[i])));
    CHECK(worst < 1e-4);
}

TEST_CASE("artifact round trip and version check") {
    prepare_data();
    const FitArtifact a = FitArtifact::load(ws().path("po_model.json"));
    const auto j = a.to_json();
    CHECK(FitArtifact::from_json(j).to_json() == j);
    CHECK(a.delta.size() > 0);
    CHECK(a.c == 5.8);

    auto bumped = j;
    bumped["version"] = a.version + 1;
    CHECK_THROWS_WITH_AS(FitArtifact::from_json(bumped), doctest::Contains("version"), SchemaError);
    ws().write("future.json", bumped.dump());
    CHECK(run("predict --model " + ws().path("future.json") + " --data " + ws().path("po.csv"), "future") == 1);
    CHECK(ws().read("future.stderr").find("version") != std::string::npos);

    // The same seed gives an identical artifact.
    REQUIRE(run("--seed 1 --out " + ws().path("po_again.json") + " fit --config " + ws().path("po.json") +
                    " --data " + ws().path("po.csv"),
                "fit_again") == 0);
    CHECK(ws().read("po_again.json") == ws().read("po_model.json"));
}

TEST_CASE("predict reproduces fitted values and follows row order") {
    prepare_data();
    REQUIRE(run("--out " + ws().path("pred.csv") + " predict --model " + ws().path("po_model.json") + " --data " +
                    ws().path("po.csv"),
                "pred") == 0);
    const CsvTable fitted = table("po_model.fitted.csv");
    const CsvTable pred = table("pred.csv");
    REQUIRE(pred.n_rows() == fitted.n_rows());
    for (const auto& name : pred.header) {
        const int fi = fitted.find(name);
        const int pi = pred.find(name);
        REQUIRE(fi >= 0);
        for (std::size_t r = 0; r < pred.n_rows(); ++r) {
            CHECK(pred.rows[r][static_cast<std::size_t>(pi)] == fitted.rows[r][static_cast<std::size_t>(fi)]);
        }
    }

    // Reverse the data rows.
    const CsvTable src = table("po.csv");
    std::ostringstream rev;
    write_csv_row(rev, src.header);
    for (auto it = src.rows.rbegin(); it != src.rows.rend(); ++it) write_csv_row(rev, *it);
    ws().write("po_rev.csv", rev.str());
    REQUIRE(run("--out " + ws().path("pred_rev.csv") + " predict --model " + ws().path("po_model.json") +
                    " --data " + ws().path("po_rev.csv"),
                "pred_rev") == 0);
    const auto e = column(pred, "eta_mu");
    const auto er = column(table("pred_rev.csv"), "eta_mu");
    const auto se = column(pred, "se_eta_mu");
    const auto ser = column(table("pred_rev.csv"), "se_eta_mu");
    REQUIRE(e.size() == er.size());
    for (std::size_t i = 0; i < e.size(); ++i) {
        CHECK(er[e.size() - 1 - i] == e[i]);
        CHECK(ser[e.size() - 1 - i] == se[i]);
    }

    // Rows outside the training range are flagged and counted.
    ws().write("outside.csv", "x\n0.5\n1.7\n-0.3\n0.25\n2.0\n");
    REQUIRE(run("--out " + ws().path("pred_out.csv") + " predict --model " + ws().path("po_model.json") +
                    " --data " + ws().path("outside.csv"),
                "pred_out") == 0);
    const auto flags = column(table("pred_out.csv"), "outside");
    CHECK(std::count(flags.begin(), flags.end(), 1.0) == 3);
    CHECK(ws().read("pred_out.stderr").find("3 row(s)") != std::string::npos);

    ws().write("wrong.csv", "z\n0.5\n");
    CHECK(run("predict --model " + ws().path("po_model.json") + " --data " + ws().path("wrong.csv"), "wrong") == 1);
    CHECK(ws().read("wrong.stderr").find("x") != std::string::npos);
}

TEST_CASE("tuned gamma fit on clean data") {
    prepare_data();
    const int code = run("--seed 5 --out " + ws().path("ga_model.json") + " fit --config " + ws().path("ga.json") +
                             " --data " + ws().path("ga.csv") + " --robust tune",
                         "fit_ga");
    REQUIRE(code == 0);
    const FitArtifact a = FitArtifact::load(ws().path("ga_model.json"));
    REQUIRE(a.tuning.is_object());
    CHECK(a.tuning.at("c").get<double>() == a.c);
    CHECK(a.tuning.at("trace").size() >= 3);
    CHECK(std::isfinite(a.c));

    REQUIRE(run("--out " + ws().path("ga_w.csv") + " weights --model " + ws().path("ga_model.json") + " --data " +
                    ws().path("ga.csv"),
                "w_ga") == 0);
    const CsvTable wt = table("ga_w.csv");
    const auto w = column(wt, "w");
    const auto rows = column(wt, "row");
    REQUIRE(w.size() == 390);
    CHECK(std::is_sorted(w.begin(), w.end()));
    CHECK(std::set<double>(rows.begin(), rows.end()).size() == 390);
    int low = 0;
    for (double v : w) {
        CHECK(v >= 0.0);
        CHECK(v <= 1.0);
        low += v < 0.5 ? 1 : 0;
    }
    CHECK(low < 39);

    REQUIRE(run("--seed 5 --out " + ws().path("tune.json") + " tune --config " + ws().path("ga.json") + " --data " +
                    ws().path("ga.csv") + " --B 30",
                "tune") == 0);
    CHECK(ws().read("tune.stdout").find("c* =") != std::string::npos);
}

TEST_CASE("contaminated gamma rows are downweighted first") {
    prepare_data();
    REQUIRE(run("--seed 5 --out " + ws().path("gac_model.json") + " fit --config " + ws().path("ga.json") +
                    " --data " + ws().path("gac.csv"),
                "fit_gac") == 0);
    REQUIRE(run("--out " + ws().path("gac_w.csv") + " weights --model " + ws().path("gac_model.json") + " --data " +
                    ws().path("gac.csv"),
                "w_gac") == 0);
    const CsvTable data = table("gac.csv");
    const auto flag = column(data, "contaminated");
    const auto rows = column(table("gac_w.csv"), "row");
    const auto n_bad = static_cast<std::size_t>(std::count(flag.begin(), flag.end(), 1.0));
    REQUIRE(n_bad == 20);
    const std::size_t bottom = static_cast<std::size_t>(std::lround(0.05 * static_cast<double>(rows.size())));
    std::size_t caught = 0;
    for (std::size_t k = 0; k < bottom; ++k) caught += flag[static_cast<std::size_t>(rows[k]) - 1] == 1.0 ? 1 : 0;
    CAPTURE(caught);
    CHECK(static_cast<double>(caught) >= 0.6 * static_cast<double>(n_bad));
}

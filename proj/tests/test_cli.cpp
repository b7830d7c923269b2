#include <catch_amalgamated.hpp>

#include <filesystem>
#include <fstream>
#include <sstream>
#include <unistd.h>

#include "bellgauss/cli.hpp"

using namespace bellgauss;
using namespace bellgauss::cli;
namespace fs = std::filesystem;
using Catch::Matchers::ContainsSubstring;
using Catch::Matchers::WithinAbs;

namespace {

fs::path scratch(const std::string& name) {
    fs::path p = fs::temp_directory_path() / ("bellgauss_cli_" + std::to_string(::getpid())) / name;
    fs::remove_all(p);
    return p;
}

std::string slurp(const fs::path& p) {
    std::ifstream f(p, std::ios::binary);
    std::stringstream ss;
    ss << f.rdbuf();
    return ss.str();
}

std::vector<std::string> lines(const std::string& s) {
    std::vector<std::string> out;
    std::istringstream in(s);
    for (std::string l; std::getline(in, l);) out.push_back(l);
    return out;
}

std::vector<std::string> fields(const std::string& line) {
    std::vector<std::string> out;
    std::istringstream in(line);
    for (std::string f; std::getline(in, f, ',');) out.push_back(f);
    if (!line.empty() && line.back() == ',') out.emplace_back();
    return out;
}

RunConfig load(const std::string& text, std::vector<std::pair<std::string, std::string>> overrides = {}) {
    auto res = load_config(text, "test", overrides);
    REQUIRE(res.ok());
    return res.config;
}

int run_quiet(const std::string& command, const RunConfig& cfg) {
    std::ostringstream log;
    return run(command, cfg, log);
}

}  // namespace

TEST_CASE("config text and overrides") {
    const auto cfg = load("# comment\nresource = tmss\nr_min = 0.5  # trailing\nr_max=1.5\nr_steps = 3\n",
                          {{"r_max", "2"}, {"eta", "0.9"}});
    CHECK(cfg.resource == ResourceKind::TwoModeSqueezedVacuum);
    CHECK(cfg.r_min == 0.5);
    CHECK(cfg.r_max == 2.0);
    CHECK(cfg.eta == 0.9);
    CHECK(resolve_path(cfg) == PathKind::AnalyticTmss);

    const auto single = load("r = 3.3\n");
    CHECK(single.r_min == 3.3);
    CHECK(single.r_max == 3.3);
    CHECK(single.r_steps == 1);
}

TEST_CASE("unknown keys and bad values are rejected") {
    auto res = load_config("r_min = 1\nradius = 2\n", "file", {});
    REQUIRE_FALSE(res.ok());
    CHECK_THAT(res.errors.front(), ContainsSubstring("unknown key 'radius'"));
    CHECK_FALSE(load_config("eta = high\n", "file", {}).ok());
    CHECK_FALSE(load_config("grid = 1.5\n", "file", {}).ok());
    CHECK_FALSE(load_config("no equals sign\n", "file", {}).ok());
    CHECK_FALSE(load_config("", "file", {{"colour", "red"}}).ok());
    CHECK_FALSE(load_config("form = tanh\n", "file", {}).ok());
}

TEST_CASE("invalid configurations give a nonzero exit") {
    const auto out = scratch("invalid");
    auto cfg = load("", {{"out", out.string()}});
    cfg.eta = 1.5;
    CHECK(run_quiet("sweep", cfg) == kBadConfig);
    cfg = load("resource = sst\nv = 0.5\n", {{"out", out.string()}});
    CHECK(run_quiet("sweep", cfg) == kBadConfig);
    cfg = load("path = analytic-tmss\n", {{"out", out.string()}});
    CHECK(run_quiet("sweep", cfg) == kBadConfig);   // resource mismatch
    cfg = load("v = 2\n", {{"out", out.string()}});
    CHECK(run_quiet("sweep", cfg) == kBadConfig);   // V without the thermal resource
    cfg = load("r_min = 0\nr_max = 1\nr_steps = 3\n", {{"out", out.string()}});
    CHECK(run_quiet("optimize", cfg) == kBadConfig);
    cfg = load("suite = eq9\n", {{"out", out.string()}});
    CHECK(run_quiet("validate", cfg) == kBadConfig);
    CHECK(run_quiet("launch", load("")) == kBadConfig);
    CHECK_FALSE(fs::exists(out / "sweep.csv"));
}

TEST_CASE("path shortcuts resolve by resource and variant") {
    CHECK(resolve_path(load("resource = sst\n")) == PathKind::AnalyticThermal);
    CHECK(resolve_path(load("path = physical\nvariant = envelope-corrected\n")) == PathKind::PhysicalCorrected);
    CHECK(resolve_path(load("path = oracle-fock\n")) == PathKind::OracleFock);
    CHECK_FALSE(resolve_path(load("path = nowhere\n")));
}

TEST_CASE("sweep CSV schema and ordering") {
    const auto out = scratch("sweep");
    const auto cfg = load("form = sech\nr_min = 0.5\nr_max = 3\nr_steps = 6\ntiming = false\n", {{"out", out.string()}});
    REQUIRE(run_quiet("sweep", cfg) == kOk);
    const auto rows = lines(slurp(out / "sweep.csv"));
    REQUIRE(rows.size() == 7);
    CHECK(rows[0] == "resource,path,r,V,eta,d,b_max,theta_a,theta_b,theta_a2,theta_b2,converged,evals,runtime_ms,b,status");
    double prev_r = -1;
    for (std::size_t i = 1; i < rows.size(); ++i) {
        const auto f = fields(rows[i]);
        REQUIRE(f.size() == 16);
        CHECK(f[0] == "split-squeezed-vacuum");
        CHECK(f[1] == "analytic-ideal");
        const double r = std::stod(f[2]);
        CHECK(r > prev_r);
        prev_r = r;
        CHECK(f[15] == "ok");
        const double b = std::stod(f[6]);
        CHECK_THAT(b, WithinAbs(maximize_chsh([r](double x, double y) {
                                    return corr_ideal(x, y, r, 1.0, DenominatorForm::SechTerm);
                                }).b_max, 1e-9));
    }
    const auto m = json::parse(slurp(out / "sweep.manifest.json"));
    CHECK(m["command"] == "sweep");
    CHECK(m["csv_schema"] == kSweepSchema);
    CHECK(m["config"]["form"] == "sech");
    CHECK(m["rows"].size() == 6);
    CHECK(m["outputs"][0] == (out / "sweep.csv").string());
    CHECK(m.contains("timestamp"));
    CHECK(m.contains("tool_version"));
}

TEST_CASE("reruns and thread counts give identical payloads") {
    const auto a = scratch("det_a"), b = scratch("det_b");
    auto cfg = load("resource = sst\nr_min = 0\nr_max = 3\nr_steps = 4\nv_min = 1\nv_max = 2\nv_steps = 3\ntiming = false\n");
    cfg.out = a.string();
    REQUIRE(run_quiet("sweep", cfg) == kOk);
    cfg.out = b.string();
    cfg.threads = 3;
    REQUIRE(run_quiet("sweep", cfg) == kOk);
    CHECK(slurp(a / "sweep.csv") == slurp(b / "sweep.csv"));
    CHECK(lines(slurp(a / "sweep.csv")).size() == 13);

    auto strip = [](json m) {
        m.erase("timestamp");
        m["config"].erase("out");
        m["config"].erase("threads");
        m.erase("outputs");
        return m.dump();
    };
    CHECK(strip(json::parse(slurp(a / "sweep.manifest.json"))) == strip(json::parse(slurp(b / "sweep.manifest.json"))));
}

TEST_CASE("row failures stay in their row") {
    const auto out = scratch("rowfail");
    const auto cfg = load("path = oracle-coherent\nr_min = 0\nr_max = 0.5\nr_steps = 2\ngrid = 5\nmax_evals = 200\n",
                          {{"out", out.string()}});
    REQUIRE(run_quiet("sweep", cfg) == kOk);
    const auto rows = lines(slurp(out / "sweep.csv"));
    REQUIRE(rows.size() == 3);
    CHECK(fields(rows[1])[15] == "invalid-parameter");
    CHECK(fields(rows[1])[6].empty());
    CHECK(fields(rows[2])[15] == "ok");
    const auto m = json::parse(slurp(out / "sweep.manifest.json"));
    CHECK(m["rows"][0].contains("message"));
}

TEST_CASE("optimize writes its result") {
    const auto out = scratch("optimize");
    const auto cfg = load("form = sech\nr = 6\n", {{"out", out.string()}});
    REQUIRE(run_quiet("optimize", cfg) == kOk);
    const auto j = json::parse(slurp(out / "optimize.json"));
    CHECK(j["status"] == "ok");
    CHECK_THAT(j["result"]["b_max"].get<double>(), WithinAbs(2.229038, 1e-5));
    const auto& c = j["result"]["correlations"];
    CHECK_THAT(j["result"]["b"].get<double>(),
               WithinAbs(c["ab"].get<double>() + c["a2b"].get<double>() + c["ab2"].get<double>() - c["a2b2"].get<double>(), 1e-9));
    CHECK(fs::exists(out / "optimize.manifest.json"));
}

TEST_CASE("validate suites") {
    const auto out = scratch("validate");
    for (const char* suite : {"fock-identities", "efficiency", "thermal"}) {
        const auto cfg = load(std::string("suite = ") + suite + "\n", {{"out", out.string()}});
        CHECK(run_quiet("validate", cfg) == kOk);
        const auto rep = json::parse(slurp(out / (std::string("validate-") + suite + ".json")));
        CHECK(rep["pass"] == true);
        CHECK(rep["checks_total"].get<int>() > 0);
        for (const auto& c : rep["checks"]) {
            CHECK(c.contains("value"));
            CHECK(c.contains("reference"));
            CHECK(c.contains("abs_dev"));
            CHECK(c.contains("rel_dev"));
        }
    }
    const auto thermal = json::parse(slurp(out / "validate-thermal.json"));
    bool discrepancy = false;
    for (const auto& c : thermal["checks"]) {
        if (c["name"] == "printed-thermal-vs-sinh-form" && c["pass"] == false) discrepancy = true;
    }
    CHECK(discrepancy);
}

TEST_CASE("failed mandatory checks set the exit code") {
    Report rep("demo");
    rep.checks.push_back({"fine", json::object(), 1.0, 1.0, 1e-9});
    rep.checks.push_back({"report only", json::object(), 1.0, 2.0, 1e-9, false});
    CHECK(rep.mandatory_pass());
    rep.checks.push_back({"broken", json::object(), 1.0, 2.0, 1e-9});
    CHECK_FALSE(rep.mandatory_pass());
    CHECK(rep.to_json()["mandatory_failed"] == 1);
}

TEST_CASE("pdf dumps are normalized") {
    const auto out = scratch("pdf");
    for (const char* path : {"analytic-ideal", "physical-asprinted", "physical-corrected"}) {
        const auto cfg = load(std::string("path = ") + path + "\nr = 1\ntheta_a = 0.1\ntheta_b = -0.05\npdf_step = 0.1\n",
                              {{"out", out.string()}});
        REQUIRE(run_quiet("pdf", cfg) == kOk);
        const auto rows = lines(slurp(out / "pdf.csv"));
        CHECK(rows[0] == "x,y,density");
        double sum = 0;
        for (std::size_t i = 1; i < rows.size(); ++i) {
            const double v = std::stod(fields(rows[i])[2]);
            CHECK(v >= 0);
            sum += v;
        }
        CHECK_THAT(sum * 0.1 * 0.1, WithinAbs(1.0, 1e-6));
        const auto m = json::parse(slurp(out / "pdf.manifest.json"));
        CHECK(m.contains("normalization"));
        CHECK(m.contains("clipped_mass"));
    }
    const auto lossy = load("r = 1\neta = 0.7\npdf_step = 0.1\n", {{"out", out.string()}});
    CHECK(run_quiet("pdf", lossy) == kOk);
    CHECK(run_quiet("pdf", load("resource = tmss\n", {{"out", out.string()}})) == kBadConfig);
}

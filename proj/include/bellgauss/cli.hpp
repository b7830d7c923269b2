#pragma once

// Batch front end: configuration, sweeps, single optimizations, validation
// suites and density dumps. Everything here writes files under cfg.out and a
// manifest next to each artifact.

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <functional>
#include <memory>
#include <mutex>
#include <nlohmann/json.hpp>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include "analytic.hpp"
#include "model.hpp"
#include "optimize.hpp"
#include "oracle_coherent.hpp"
#include "oracle_fock.hpp"
#include "physical.hpp"
#include "quadrature.hpp"

namespace bellgauss::cli {

using json = nlohmann::ordered_json;

inline constexpr const char* kToolVersion = "1.0.0";
inline constexpr const char* kSweepSchema = "bellgauss-sweep/1";
inline constexpr const char* kPdfSchema = "bellgauss-pdf/1";

enum ExitCode { kOk = 0, kCheckFailed = 1, kBadConfig = 2, kIoError = 3 };

enum class PathKind {
    AnalyticIdeal,
    AnalyticThermal,
    AnalyticTmss,
    PhysicalAsPrinted,
    PhysicalCorrected,
    OracleCoherent,
    OracleFock,
};

inline const char* to_string(PathKind p) {
    switch (p) {
        case PathKind::AnalyticIdeal: return "analytic-ideal";
        case PathKind::AnalyticThermal: return "analytic-thermal";
        case PathKind::AnalyticTmss: return "analytic-tmss";
        case PathKind::PhysicalAsPrinted: return "physical-asprinted";
        case PathKind::PhysicalCorrected: return "physical-corrected";
        case PathKind::OracleCoherent: return "oracle-coherent";
        case PathKind::OracleFock: return "oracle-fock";
    }
    return "unknown";
}

inline bool is_physical(PathKind p) { return p == PathKind::PhysicalAsPrinted || p == PathKind::PhysicalCorrected; }

struct RunConfig {
    ResourceKind resource = ResourceKind::SplitSqueezedVacuum;
    std::string path = "analytic";   // a PathKind name, or "analytic" / "physical"
    PdfVariant variant = PdfVariant::AsPrinted;
    DenominatorForm form = DenominatorForm::SinhTerm;
    PairConvention convention = PairConvention::Linear;
    double r_min = 1.0, r_max = 1.0;
    int r_steps = 1;
    double v_min = 1.0, v_max = 1.0;
    int v_steps = 1;
    double eta = 1.0;
    double d = 1.0;
    double center = 0.0;
    double theta_a = 0.0, theta_b = 0.0;
    int grid = 13;
    int max_evals = 5000;
    int seeds = 5;
    double tol = 1e-6;
    double pdf_step = 0.05;
    double pdf_extent = 6.0;
    int cutoff = 0;
    int threads = 1;
    bool timing = true;
    std::string suite = "eq6";
    std::string out = "out";
};

// ---------------------------------------------------------------------------
// Key table. Every config key is listed here exactly once; the same table
// drives file parsing, command-line flags and the manifest.

namespace detail {

inline std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return "";
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

inline std::optional<double> to_double(const std::string& s) {
    if (s.empty()) return std::nullopt;
    char* end = nullptr;
    const double v = std::strtod(s.c_str(), &end);
    if (end != s.c_str() + s.size() || !std::isfinite(v)) return std::nullopt;
    return v;
}

inline std::optional<int> to_int(const std::string& s) {
    if (s.empty()) return std::nullopt;
    char* end = nullptr;
    const long v = std::strtol(s.c_str(), &end, 10);
    if (end != s.c_str() + s.size() || v < -1000000000L || v > 1000000000L) return std::nullopt;
    return static_cast<int>(v);
}

}  // namespace detail

struct KeySpec {
    std::string name;
    std::string help;
    // returns an error message on failure
    std::function<std::optional<std::string>(RunConfig&, const std::string&)> set;
    std::function<json(const RunConfig&)> get;   // empty for aliases
};

inline const std::vector<KeySpec>& keys() {
    using detail::to_double;
    using detail::to_int;
    auto real = [](double RunConfig::*m) {
        return [m](RunConfig& c, const std::string& s) -> std::optional<std::string> {
            auto v = to_double(s);
            if (!v) return "expected a finite number, got '" + s + "'";
            c.*m = *v;
            return std::nullopt;
        };
    };
    auto integer = [](int RunConfig::*m) {
        return [m](RunConfig& c, const std::string& s) -> std::optional<std::string> {
            auto v = to_int(s);
            if (!v) return "expected an integer, got '" + s + "'";
            c.*m = *v;
            return std::nullopt;
        };
    };
    auto getr = [](double RunConfig::*m) { return [m](const RunConfig& c) { return json(c.*m); }; };
    auto geti = [](int RunConfig::*m) { return [m](const RunConfig& c) { return json(c.*m); }; };

    static const std::vector<KeySpec> table = {
        {"resource", "split-squeezed-vacuum (ssv) | split-squeezed-thermal (sst) | two-mode-squeezed-vacuum (tmss)",
         [](RunConfig& c, const std::string& s) -> std::optional<std::string> {
             auto k = parse_resource_kind(s);
             if (!k) return "unknown resource '" + s + "'";
             c.resource = *k;
             return std::nullopt;
         },
         [](const RunConfig& c) { return json(to_string(c.resource)); }},
        {"path", "analytic | physical | analytic-ideal | analytic-thermal | analytic-tmss | physical-asprinted | "
                 "physical-corrected | oracle-coherent | oracle-fock",
         [](RunConfig& c, const std::string& s) -> std::optional<std::string> {
             c.path = s;
             return std::nullopt;
         },
         [](const RunConfig& c) { return json(c.path); }},
        {"variant", "as-printed | envelope-corrected (physical density)",
         [](RunConfig& c, const std::string& s) -> std::optional<std::string> {
             if (s == "as-printed" || s == "asprinted") c.variant = PdfVariant::AsPrinted;
             else if (s == "envelope-corrected" || s == "corrected") c.variant = PdfVariant::EnvelopeCorrected;
             else return "unknown variant '" + s + "'";
             return std::nullopt;
         },
         [](const RunConfig& c) { return json(to_string(c.variant)); }},
        {"form", "sinh | sech (denominator of the ideal closed form)",
         [](RunConfig& c, const std::string& s) -> std::optional<std::string> {
             if (s == "sinh") c.form = DenominatorForm::SinhTerm;
             else if (s == "sech") c.form = DenominatorForm::SechTerm;
             else return "unknown form '" + s + "'";
             return std::nullopt;
         },
         [](const RunConfig& c) { return json(to_string(c.form)); }},
        {"convention", "linear | representative (coherent oracle pair basis)",
         [](RunConfig& c, const std::string& s) -> std::optional<std::string> {
             if (s == "linear") c.convention = PairConvention::Linear;
             else if (s == "representative") c.convention = PairConvention::Representative;
             else return "unknown convention '" + s + "'";
             return std::nullopt;
         },
         [](const RunConfig& c) { return json(to_string(c.convention)); }},
        {"r", "single squeezing value (sets r_min = r_max, r_steps = 1)",
         [](RunConfig& c, const std::string& s) -> std::optional<std::string> {
             auto v = to_double(s);
             if (!v) return "expected a finite number, got '" + s + "'";
             c.r_min = c.r_max = *v;
             c.r_steps = 1;
             return std::nullopt;
         },
         {}},
        {"r_min", "first squeezing value", real(&RunConfig::r_min), getr(&RunConfig::r_min)},
        {"r_max", "last squeezing value", real(&RunConfig::r_max), getr(&RunConfig::r_max)},
        {"r_steps", "number of squeezing values", integer(&RunConfig::r_steps), geti(&RunConfig::r_steps)},
        {"v", "single thermal variance (sets v_min = v_max, v_steps = 1)",
         [](RunConfig& c, const std::string& s) -> std::optional<std::string> {
             auto v = to_double(s);
             if (!v) return "expected a finite number, got '" + s + "'";
             c.v_min = c.v_max = *v;
             c.v_steps = 1;
             return std::nullopt;
         },
         {}},
        {"v_min", "first thermal variance", real(&RunConfig::v_min), getr(&RunConfig::v_min)},
        {"v_max", "last thermal variance", real(&RunConfig::v_max), getr(&RunConfig::v_max)},
        {"v_steps", "number of thermal variances", integer(&RunConfig::v_steps), geti(&RunConfig::v_steps)},
        {"eta", "detector efficiency in (0, 1]", real(&RunConfig::eta), getr(&RunConfig::eta)},
        {"d", "Kerr displacement scale", real(&RunConfig::d), getr(&RunConfig::d)},
        {"center", "thermal P-function centre", real(&RunConfig::center), getr(&RunConfig::center)},
        {"theta_a", "Alice angle for pdf dumps", real(&RunConfig::theta_a), getr(&RunConfig::theta_a)},
        {"theta_b", "Bob angle for pdf dumps", real(&RunConfig::theta_b), getr(&RunConfig::theta_b)},
        {"grid", "coarse grid points per angle", integer(&RunConfig::grid), geti(&RunConfig::grid)},
        {"max_evals", "correlation evaluations per search window", integer(&RunConfig::max_evals),
         geti(&RunConfig::max_evals)},
        {"seeds", "simplex seeds", integer(&RunConfig::seeds), geti(&RunConfig::seeds)},
        {"tol", "convergence tolerance on B", real(&RunConfig::tol), getr(&RunConfig::tol)},
        {"pdf_step", "dump grid step", real(&RunConfig::pdf_step), getr(&RunConfig::pdf_step)},
        {"pdf_extent", "dump grid half-width", real(&RunConfig::pdf_extent), getr(&RunConfig::pdf_extent)},
        {"cutoff", "Fock cutoff (0: automatic)", integer(&RunConfig::cutoff), geti(&RunConfig::cutoff)},
        {"threads", "sweep workers", integer(&RunConfig::threads), geti(&RunConfig::threads)},
        {"timing", "record runtimes (true | false)",
         [](RunConfig& c, const std::string& s) -> std::optional<std::string> {
             if (s == "true" || s == "1") c.timing = true;
             else if (s == "false" || s == "0") c.timing = false;
             else return "expected true or false, got '" + s + "'";
             return std::nullopt;
         },
         [](const RunConfig& c) { return json(c.timing); }},
        {"suite", "eq6 | eq8 | thermal | fock-identities | efficiency",
         [](RunConfig& c, const std::string& s) -> std::optional<std::string> {
             c.suite = s;
             return std::nullopt;
         },
         [](const RunConfig& c) { return json(c.suite); }},
        {"out", "output directory",
         [](RunConfig& c, const std::string& s) -> std::optional<std::string> {
             c.out = s;
             return std::nullopt;
         },
         [](const RunConfig& c) { return json(c.out); }},
    };
    return table;
}

inline const KeySpec* find_key(const std::string& name) {
    for (const auto& k : keys()) {
        if (k.name == name) return &k;
    }
    return nullptr;
}

struct LoadResult {
    RunConfig config;
    std::vector<std::string> errors;
    bool ok() const { return errors.empty(); }
};

inline void apply(RunConfig& cfg, const std::string& key, const std::string& value, const std::string& where,
                  std::vector<std::string>& errors) {
    const KeySpec* k = find_key(key);
    if (!k) {
        errors.push_back(where + ": unknown key '" + key + "'");
        return;
    }
    if (auto err = k->set(cfg, value)) errors.push_back(where + ": " + key + ": " + *err);
}

/// Parses "key = value" lines; '#' starts a comment.
inline void apply_text(RunConfig& cfg, const std::string& text, const std::string& source,
                       std::vector<std::string>& errors) {
    std::istringstream in(text);
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
        line = detail::trim(line);
        if (line.empty()) continue;
        const std::string where = source + ":" + std::to_string(lineno);
        const auto eq = line.find('=');
        if (eq == std::string::npos) {
            errors.push_back(where + ": expected key = value");
            continue;
        }
        apply(cfg, detail::trim(line.substr(0, eq)), detail::trim(line.substr(eq + 1)), where, errors);
    }
}

/// Config file text (may be empty) followed by overrides in order.
inline LoadResult load_config(const std::string& file_text, const std::string& source,
                              const std::vector<std::pair<std::string, std::string>>& overrides) {
    LoadResult res;
    apply_text(res.config, file_text, source, res.errors);
    for (const auto& [k, v] : overrides) apply(res.config, k, v, "command line", res.errors);
    return res;
}

inline json resolved_json(const RunConfig& cfg) {
    json j = json::object();
    for (const auto& k : keys()) {
        if (k.get) j[k.name] = k.get(cfg);
    }
    return j;
}

/// Path after resolving the "analytic" and "physical" shortcuts.
inline std::optional<PathKind> resolve_path(const RunConfig& cfg) {
    const std::string& p = cfg.path;
    if (p == "analytic") {
        switch (cfg.resource) {
            case ResourceKind::SplitSqueezedVacuum: return PathKind::AnalyticIdeal;
            case ResourceKind::SplitSqueezedThermal: return PathKind::AnalyticThermal;
            case ResourceKind::TwoModeSqueezedVacuum: return PathKind::AnalyticTmss;
        }
    }
    if (p == "physical") {
        return cfg.variant == PdfVariant::AsPrinted ? PathKind::PhysicalAsPrinted : PathKind::PhysicalCorrected;
    }
    for (auto k : {PathKind::AnalyticIdeal, PathKind::AnalyticThermal, PathKind::AnalyticTmss,
                   PathKind::PhysicalAsPrinted, PathKind::PhysicalCorrected, PathKind::OracleCoherent,
                   PathKind::OracleFock}) {
        if (p == to_string(k)) return k;
    }
    return std::nullopt;
}

inline PdfVariant variant_of(PathKind p) {
    return p == PathKind::PhysicalCorrected ? PdfVariant::EnvelopeCorrected : PdfVariant::AsPrinted;
}

inline const std::vector<std::string>& suites() {
    static const std::vector<std::string> s = {"eq6", "eq8", "thermal", "fock-identities", "efficiency"};
    return s;
}

/// Every problem with the configuration; empty means runnable.
inline std::vector<std::string> validate(const RunConfig& cfg, const std::string& command) {
    std::vector<std::string> issues;
    const auto path = resolve_path(cfg);
    if (!path) issues.push_back("path: unknown path '" + cfg.path + "'");

    const bool thermal = cfg.resource == ResourceKind::SplitSqueezedThermal;
    if (path) {
        const auto need = [&](bool ok, const std::string& msg) {
            if (!ok) issues.push_back("path: " + msg);
        };
        switch (*path) {
            case PathKind::AnalyticIdeal:
                need(cfg.resource == ResourceKind::SplitSqueezedVacuum, "analytic-ideal needs the split squeezed vacuum");
                break;
            case PathKind::AnalyticThermal:
                need(thermal, "analytic-thermal needs the split squeezed thermal resource");
                need(cfg.eta == 1.0, "analytic-thermal has no efficiency model; eta must be 1");
                break;
            case PathKind::AnalyticTmss:
                need(cfg.resource == ResourceKind::TwoModeSqueezedVacuum, "analytic-tmss needs the two-mode squeezed vacuum");
                break;
            case PathKind::PhysicalAsPrinted:
            case PathKind::PhysicalCorrected:
            case PathKind::OracleFock:
                need(cfg.resource == ResourceKind::SplitSqueezedVacuum, std::string(to_string(*path)) +
                                                                            " needs the split squeezed vacuum");
                break;
            case PathKind::OracleCoherent:
                need(cfg.resource != ResourceKind::TwoModeSqueezedVacuum, "oracle-coherent has no two-mode squeezed input");
                if (thermal) need(cfg.eta == 1.0, "thermal oracle has no efficiency model; eta must be 1");
                break;
        }
    }

    // parameter invariants at the ends of the sweep ranges
    for (double r : {cfg.r_min, cfg.r_max}) {
        for (double v : {cfg.v_min, cfg.v_max}) {
            ResourceSpec spec = thermal ? ResourceSpec::split_thermal(r, v, cfg.center) : ResourceSpec{cfg.resource, {r}, {}, {}};
            RotationSpec rot = path && (is_physical(*path) || *path == PathKind::OracleFock) ? RotationSpec::physical(cfg.d)
                                                                                             : RotationSpec::ideal();
            for (const auto& issue : validate_config(spec, rot, {cfg.eta})) {
                const std::string msg = issue.code + ": " + issue.message;
                if (std::find(issues.begin(), issues.end(), msg) == issues.end()) issues.push_back(msg);
            }
        }
    }
    if (!thermal && (cfg.v_min != 1.0 || cfg.v_max != 1.0 || cfg.v_steps != 1)) {
        issues.push_back("v: only meaningful for the split squeezed thermal resource");
    }
    if (cfg.r_steps < 1) issues.push_back("r_steps: must be >= 1");
    if (cfg.v_steps < 1) issues.push_back("v_steps: must be >= 1");
    if (cfg.r_steps > 1 && !(cfg.r_max > cfg.r_min)) issues.push_back("r_max: must exceed r_min when r_steps > 1");
    if (cfg.v_steps > 1 && !(cfg.v_max > cfg.v_min)) issues.push_back("v_max: must exceed v_min when v_steps > 1");
    if (!(cfg.d > 0)) issues.push_back("d: must be positive");
    if (cfg.threads < 1) issues.push_back("threads: must be >= 1");
    if (cfg.cutoff < 0) issues.push_back("cutoff: must be >= 0");
    if (!(cfg.pdf_step > 0)) issues.push_back("pdf_step: must be positive");
    if (!(cfg.pdf_extent > cfg.pdf_step)) issues.push_back("pdf_extent: must exceed pdf_step");
    SearchConfig sc{cfg.grid, cfg.max_evals, cfg.tol, cfg.seeds};
    for (const auto& s : validate_search(sc)) issues.push_back("search: " + s);

    if (command == "optimize" || command == "pdf") {
        if (cfg.r_steps != 1 || cfg.v_steps != 1) issues.push_back(command + ": needs a single (r, V) point");
    }
    if (command == "pdf" && path &&
        (*path == PathKind::AnalyticThermal || *path == PathKind::AnalyticTmss ||
         (*path == PathKind::OracleCoherent && thermal))) {
        issues.push_back("pdf: no density is available for path " + std::string(to_string(*path)));
    }
    if (command == "validate" && std::find(suites().begin(), suites().end(), cfg.suite) == suites().end()) {
        issues.push_back("suite: unknown suite '" + cfg.suite + "'");
    }
    return issues;
}

// ---------------------------------------------------------------------------
// Output helpers.

namespace detail {

inline std::string fmt(double v, const char* spec = "%.10g") {
    char buf[64];
    std::snprintf(buf, sizeof buf, spec, v);
    return buf;
}

inline std::string utc_timestamp() {
    const std::time_t t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&t, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

inline bool write_file(const std::filesystem::path& p, const std::string& text, std::ostream& log) {
    std::error_code ec;
    if (p.has_parent_path()) std::filesystem::create_directories(p.parent_path(), ec);
    std::ofstream f(p, std::ios::binary);
    f << text;
    f.close();
    if (!f) {
        log << "error: cannot write " << p.string() << "\n";
        return false;
    }
    return true;
}

inline json manifest(const std::string& command, const RunConfig& cfg, const std::vector<std::string>& outputs) {
    json m;
    m["command"] = command;
    m["tool_version"] = kToolVersion;
    m["timestamp"] = utc_timestamp();
    m["config"] = resolved_json(cfg);
    m["outputs"] = outputs;
    return m;
}

inline std::vector<double> linspace(double lo, double hi, int n) {
    std::vector<double> v(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) v[static_cast<std::size_t>(i)] = n == 1 ? lo : lo + i * ((hi - lo) / (n - 1));
    return v;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Evaluators.

struct Point {
    double r = 0;
    double v = 1;
};

/// Correlation evaluator for one sweep point. Construction may throw
/// (e.g. squeezing below an oracle's range).
inline CorrelationFn make_evaluator(const RunConfig& cfg, PathKind path, Point pt) {
    const double r = pt.r, v = pt.v, eta = cfg.eta;
    switch (path) {
        case PathKind::AnalyticIdeal:
            return [r, eta, form = cfg.form](double a, double b) { return corr_ideal(a, b, r, eta, form); };
        case PathKind::AnalyticThermal:
            return [r, v](double a, double b) { return corr_thermal(a, b, r, v); };
        case PathKind::AnalyticTmss:
            return [r, eta, form = cfg.form](double a, double b) { return corr_tmss(a, b, r, eta, form); };
        case PathKind::PhysicalAsPrinted:
        case PathKind::PhysicalCorrected:
            return physical_evaluator(std::make_shared<const PhysicalDensityTable>(r, cfg.d, variant_of(path)), eta);
        case PathKind::OracleCoherent: {
            CoherentOracleConfig oc;
            oc.convention = cfg.convention;
            if (r < kOracleMinSqueezing) throw InvalidArgument("coherent oracle: r below its supported range");
            if (cfg.resource == ResourceKind::SplitSqueezedThermal) {
                return [r, v, c = cfg.center, oc](double a, double b) { return corr_thermal_oracle(a, b, r, v, c, oc); };
            }
            return [r, eta, oc](double a, double b) -> Result<double> { return corr_ideal_oracle(a, b, r, eta, oc); };
        }
        case PathKind::OracleFock: {
            FockOracleConfig fc;
            fc.cutoff = cfg.cutoff;
            return [r, d = cfg.d, eta, fc](double a, double b) -> Result<double> {
                return corr_physical_oracle(a, b, r, d, eta, fc);
            };
        }
    }
    throw InvalidArgument("unknown path");
}

inline SearchConfig search_config(const RunConfig& cfg, PathKind path) {
    SearchConfig sc{cfg.grid, cfg.max_evals, cfg.tol, cfg.seeds};
    if (is_physical(path) || path == PathKind::OracleFock) sc.window = SearchWindow::physical(cfg.d);
    return sc;
}

struct RowResult {
    RowResult() = default;
    explicit RowResult(Point p) : point(p) {}

    Point point;
    std::optional<BellResult> result;
    std::string status = "ok";
    std::string message;
    double runtime_ms = 0;
};

inline RowResult run_point(const RunConfig& cfg, PathKind path, Point pt) {
    RowResult row{pt};
    const auto t0 = std::chrono::steady_clock::now();
    try {
        row.result = maximize_chsh(make_evaluator(cfg, path, pt), search_config(cfg, path));
    } catch (const NoFeasiblePoint& e) {
        row.status = to_string(ErrorCode::NoFeasiblePoint);
        row.message = e.what();
    } catch (const CutoffError& e) {
        row.status = to_string(ErrorCode::CutoffTooSmall);
        row.message = e.what();
    } catch (const QuadratureError& e) {
        row.status = to_string(ErrorCode::NonConvergence);
        row.message = e.what();
    } catch (const InvalidArgument& e) {
        row.status = to_string(ErrorCode::InvalidParameter);
        row.message = e.what();
    } catch (const std::exception& e) {
        row.status = "error";
        row.message = e.what();
    }
    if (cfg.timing) row.runtime_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
    return row;
}

inline std::vector<Point> sweep_points(const RunConfig& cfg) {
    std::vector<Point> pts;
    for (double r : detail::linspace(cfg.r_min, cfg.r_max, cfg.r_steps)) {
        for (double v : detail::linspace(cfg.v_min, cfg.v_max, cfg.v_steps)) pts.push_back({r, v});
    }
    return pts;
}

/// Rows in sweep order; points are spread over cfg.threads workers.
inline std::vector<RowResult> compute_sweep(const RunConfig& cfg, PathKind path) {
    const auto pts = sweep_points(cfg);
    std::vector<RowResult> rows(pts.size());
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (std::size_t i = next++; i < pts.size(); i = next++) rows[i] = run_point(cfg, path, pts[i]);
    };
    const int n = std::min<int>(cfg.threads, static_cast<int>(pts.size()));
    std::vector<std::thread> pool;
    for (int t = 1; t < n; ++t) pool.emplace_back(worker);
    worker();
    for (auto& t : pool) t.join();
    return rows;
}

inline const char* sweep_header() {
    return "resource,path,r,V,eta,d,b_max,theta_a,theta_b,theta_a2,theta_b2,converged,evals,runtime_ms,b,status";
}

inline std::string sweep_csv(const RunConfig& cfg, PathKind path, const std::vector<RowResult>& rows) {
    using detail::fmt;
    std::string s = std::string(sweep_header()) + "\n";
    for (const auto& row : rows) {
        s += std::string(to_string(cfg.resource)) + "," + to_string(path) + "," + fmt(row.point.r) + "," +
             fmt(row.point.v) + "," + fmt(cfg.eta) + "," + fmt(cfg.d) + ",";
        if (row.result) {
            const auto& b = *row.result;
            s += fmt(b.b_max) + "," + fmt(b.angles.theta_a) + "," + fmt(b.angles.theta_b) + "," + fmt(b.angles.theta_a2) +
                 "," + fmt(b.angles.theta_b2) + "," + (b.converged ? "true" : "false") + "," +
                 std::to_string(b.evaluations) + ",";
        } else {
            s += ",,,,,,,";
        }
        s += fmt(row.runtime_ms, "%.3f") + "," + (row.result ? fmt(row.result->b) : std::string()) + "," + row.status + "\n";
    }
    return s;
}

inline json bell_json(const BellResult& b) {
    json j;
    j["b"] = b.b;
    j["b_max"] = b.b_max;
    j["angles"] = {{"theta_a", b.angles.theta_a}, {"theta_b", b.angles.theta_b},
                   {"theta_a2", b.angles.theta_a2}, {"theta_b2", b.angles.theta_b2}};
    j["correlations"] = {{"ab", b.correlations[0][0]}, {"a2b", b.correlations[1][0]},
                         {"ab2", b.correlations[0][1]}, {"a2b2", b.correlations[1][1]}};
    j["evaluations"] = b.evaluations;
    j["converged"] = b.converged;
    j["window"] = {b.window.lo, b.window.hi};
    return j;
}

// ---------------------------------------------------------------------------
// Validation suites.

struct Check {
    Check(std::string n, json in, double v, double ref, double t, bool mand = true, std::string nt = "")
        : name(std::move(n)), inputs(std::move(in)), value(v), reference(ref), tol(t), mandatory(mand), note(std::move(nt)) {}

    std::string name;
    json inputs;
    double value = 0;       // computed
    double reference = 0;   // compared against
    double tol = 0;
    bool mandatory = true;
    std::string note;

    double abs_dev() const { return std::abs(value - reference); }
    bool pass() const { return abs_dev() <= tol; }

    json to_json() const {
        json j;
        j["name"] = name;
        j["inputs"] = inputs;
        j["value"] = value;
        j["reference"] = reference;
        j["abs_dev"] = abs_dev();
        j["rel_dev"] = reference != 0 ? abs_dev() / std::abs(reference) : abs_dev();
        j["tol"] = tol;
        j["mandatory"] = mandatory;
        j["pass"] = pass();
        if (!note.empty()) j["note"] = note;
        return j;
    }
};

struct Report {
    explicit Report(std::string s) : suite(std::move(s)) {}

    std::string suite;
    std::vector<Check> checks;
    json extra = json::object();

    bool mandatory_pass() const {
        return std::all_of(checks.begin(), checks.end(), [](const Check& c) { return !c.mandatory || c.pass(); });
    }

    json to_json() const {
        json j;
        j["suite"] = suite;
        int failed = 0, report_only = 0;
        for (const auto& c : checks) {
            if (c.mandatory && !c.pass()) ++failed;
            if (!c.mandatory) ++report_only;
        }
        j["checks_total"] = checks.size();
        j["mandatory_failed"] = failed;
        j["report_only"] = report_only;
        j["pass"] = mandatory_pass();
        if (!extra.empty()) j["summary"] = extra;
        json arr = json::array();
        for (const auto& c : checks) arr.push_back(c.to_json());
        j["checks"] = arr;
        return j;
    }
};

namespace suites_impl {

inline const double kEq6Angles[] = {-0.2, -0.1, 0.0, 0.1, 0.2};

inline Report eq6(const RunConfig&) {
    Report rep{"eq6"};
    CoherentOracleConfig rep_cfg;
    rep_cfg.convention = PairConvention::Representative;
    for (double r : {0.5, 1.0, 2.0, 3.0}) {
        for (double a : kEq6Angles) {
            for (double b : kEq6Angles) {
                const json in = {{"r", r}, {"theta_a", a}, {"theta_b", b}};
                const double oracle = corr_ideal_oracle(a, b, r);
                const bool zero = a == 0.0 && b == 0.0;
                for (auto form : {DenominatorForm::SinhTerm, DenominatorForm::SechTerm}) {
                    auto closed = corr_ideal(a, b, r, 1.0, form);
                    Check c{std::string("oracle-vs-") + to_string(form), in, oracle, 0, 0, false};
                    if (!closed) {
                        c.reference = std::nan("");
                        c.note = "closed form outside its domain: " + closed.error().message;
                        c.tol = 0;
                    } else {
                        c.reference = *closed;
                        // theta = 0 is the orthant identity for both forms; the sech form matches everywhere
                        c.mandatory = zero || form == DenominatorForm::SechTerm;
                        c.tol = zero ? 1e-3 : 1e-6;
                    }
                    rep.checks.push_back(c);
                }
                Check rc{"representative-vs-linear-oracle", in, corr_ideal_oracle(a, b, r, 1.0, rep_cfg), oracle, 1e-6, false};
                rep.checks.push_back(rc);
            }
        }
        rep.checks.push_back({"orthant-identity", {{"r", r}}, corr_ideal_oracle(0, 0, r), orthant_correlation(r), 1e-7});
    }
    return rep;
}

/// Clipped and renormalized physical density on a given axis.
inline GridPdf variant_density(double ta, double tb, double r, double d, PdfVariant v, const Axis& ax) {
    GridPdf g = GridPdf::tabulate([&](double x, double y) { return pdf_ef(x, y, ta, tb, r, d, v); }, ax, ax);
    g.clip_negative();
    g.normalize();
    return g;
}

inline double l1_distance(const GridPdf& p, const GridPdf& q) {
    double s = 0;
    for (std::size_t i = 0; i < p.density.size(); ++i) s += std::abs(p.density[i] - q.density[i]);
    return s * p.x.step * p.y.step;
}

inline Report eq8(const RunConfig& cfg) {
    Report rep{"eq8"};
    const double r = 1.0, d = 1.0, ta = 0.1, tb = -0.05;
    FockOracleConfig fc;
    fc.cutoff = cfg.cutoff;
    const int cutoff = fc.cutoff > 0 ? fc.cutoff : fock_cutoff(r, std::max(std::abs(ta), std::abs(tb)) / d, fc.truncation_tol);
    fc.cutoff = cutoff;
    const json in = {{"r", r}, {"d", d}, {"theta_a", ta}, {"theta_b", tb}, {"cutoff", cutoff}};

    const GridPdf oracle = physical_oracle_grid_pdf(ta, tb, r, d, fc);
    const double min_density = *std::min_element(oracle.density.begin(), oracle.density.end());
    rep.checks.push_back({"oracle-nonnegative", in, std::min(min_density, 0.0), 0.0, 0.0});
    rep.checks.push_back({"oracle-normalized", in, oracle.total_mass, 1.0, 1e-6, true, "Simpson mass before renormalization"});
    const double c_oracle = quadrant_masses(oracle).correlation();

    json summary;
    summary["inputs"] = in;
    summary["oracle_correlation"] = c_oracle;
    double best = std::numeric_limits<double>::infinity();
    std::string best_name;
    for (auto v : {PdfVariant::AsPrinted, PdfVariant::EnvelopeCorrected}) {
        const GridPdf g = variant_density(ta, tb, r, d, v, oracle.x);
        const double l1 = l1_distance(oracle, g);
        const double c = quadrant_masses(g).correlation();
        summary[std::string("l1_") + to_string(v)] = l1;
        summary[std::string("clipped_mass_") + to_string(v)] = g.clipped_mass;
        summary[std::string("correlation_") + to_string(v)] = c;
        rep.checks.push_back({std::string("correlation-") + to_string(v), in, c, c_oracle, 1e-3, false,
                              "closed-form density against the Fock oracle"});
        if (l1 < best) {
            best = l1;
            best_name = to_string(v);
        }
    }
    summary["closer_variant"] = best_name;
    rep.extra = summary;
    return rep;
}

inline Report thermal(const RunConfig& cfg) {
    Report rep{"thermal"};
    CoherentOracleConfig oc;
    oc.convention = cfg.convention;
    const std::pair<double, double> angles[] = {{0.0, 0.0}, {0.1, 0.0}, {0.05, -0.15}, {-0.1, 0.2}, {0.15, 0.1}};
    for (double r : {0.5, 1.0, 2.0, 3.0}) {
        for (auto [a, b] : angles) {
            const json in = {{"r", r}, {"V", 1.0}, {"theta_a", a}, {"theta_b", b}};
            auto st = corr_thermal(a, b, r, 1.0);
            auto sinh_form = corr_ideal(a, b, r);
            auto sech_form = corr_ideal(a, b, r, 1.0, DenominatorForm::SechTerm);
            if (!st || !sech_form) continue;
            Check c{"printed-thermal-vs-sinh-form", in, *st, sinh_form ? *sinh_form : std::nan(""), 1e-12, false,
                    sinh_form ? "" : "sinh form outside its domain"};
            rep.checks.push_back(c);
            rep.checks.push_back({"printed-thermal-vs-sech-form", in, *st, *sech_form, 1e-12});
        }
    }
    for (double r : {0.1, 0.3, 0.5}) {
        for (double v : {2.0, 3.0, 5.0}) {
            for (auto [a, b] : angles) {
                const json in = {{"r", r}, {"V", v}, {"theta_a", a}, {"theta_b", b}};
                auto o = corr_thermal_oracle(a, b, r, v, 0.0, oc);
                auto p = corr_thermal(a, b, r, v);
                if (!o || !p) continue;
                rep.checks.push_back({"oracle-vs-printed-thermal", in, *o, *p, 1e-6, false});
                rep.checks.push_back({"oracle-vs-sign-flipped-printed-thermal", in, *o, -*p, 1e-8});
            }
        }
    }
    return rep;
}

inline Report fock_identities(const RunConfig&) {
    Report rep{"fock-identities"};
    {
        const int n = 40;
        const auto out = apply_kerr(coherent_fock(2.0, n), kKerrPhase);
        const Eigen::VectorXcd cat = (std::polar(1.0, -kPi / 4) * coherent_fock(2.0, n).amp +
                                      std::polar(1.0, kPi / 4) * coherent_fock(-2.0, n).amp) / std::sqrt(2.0);
        const double f = std::norm(cat.dot(out.amp)) / (cat.squaredNorm() * out.amp.squaredNorm());
        rep.checks.push_back({"kerr-cat-fidelity", {{"beta", 2.0}, {"cutoff", n}}, f, 1.0, 1e-8});
    }
    {
        const int n = 6;
        const auto hom = apply_beam_splitter(tensor(fock_state(1, n), fock_state(1, n)), kPi / 2);
        Eigen::MatrixXcd expected = Eigen::MatrixXcd::Zero(n + 1, n + 1);
        expected(2, 0) = 1 / std::sqrt(2.0);
        expected(0, 2) = -1 / std::sqrt(2.0);
        rep.checks.push_back({"hong-ou-mandel", {{"cutoff", n}}, (hom.amp - expected).cwiseAbs().maxCoeff(), 0.0, 1e-8});
        const auto one = apply_beam_splitter(tensor(fock_state(1, n), fock_state(0, n)), kPi / 2);
        rep.checks.push_back({"single-photon-splitting", {{"cutoff", n}}, one.amp(0, 1).real(), -1 / std::sqrt(2.0), 1e-12,
                              true, "the (|1,0> + |0,1>)/sqrt2 sign does not follow from the generator"});
    }
    rep.checks.push_back({"tmss-identity-fidelity", {{"r", 1.0}, {"cutoff", 40}}, tmss_identity_fidelity(1.0, 40), 1.0, 1e-6});
    {
        const int n = fock_cutoff(1.0, 0.0, 1e-8);
        const auto s = squeezed_vacuum_fock(1.0, n);
        double nbar = 0;
        for (int k = 0; k <= n; ++k) nbar += k * std::norm(s.amp(k));
        const double ref = std::sinh(1.0) * std::sinh(1.0);
        rep.checks.push_back({"squeezed-mean-photon-number", {{"r", 1.0}, {"cutoff", n}}, nbar, ref, 1e-6 * ref});
    }
    {
        const int n = 40;
        const FockVector s = tensor(fock_state(2, n), fock_state(1, n));
        const cplx g(0.8, -0.3);
        const auto back = apply_displacement(apply_displacement(s, Mode::A, g), Mode::A, -g);
        rep.checks.push_back({"displacement-inverse", {{"gamma", {g.real(), g.imag()}}, {"cutoff", n}},
                              (back.amp - s.amp).norm(), 0.0, 1e-8});
    }
    for (double r : {0.5, 1.0, 1.5}) {
        rep.checks.push_back({"physical-oracle-orthant", {{"r", r}}, corr_physical_oracle(0, 0, r, 1.0),
                              orthant_correlation(r), 2e-3});
    }
    return rep;
}

inline Report efficiency(const RunConfig&) {
    Report rep{"efficiency"};
    for (int k = 1; k <= 60; ++k) {
        const double r = 0.1 * k;
        const double u = std::exp(r) * std::sinh(r);
        rep.checks.push_back({"unit-efficiency-substitution", {{"r", r}}, std::atan(u / std::sqrt(1 + 2 * u)),
                              std::atan(std::sinh(r)), 1e-12});
    }
    for (double r : {0.5, 1.0, 2.0}) {
        for (double eta : {0.5, 0.8}) {
            rep.checks.push_back({"oracle-vs-closed-form-zero-angles", {{"r", r}, {"eta", eta}},
                                  corr_ideal_oracle(0, 0, r, eta), *corr_ideal(0, 0, r, eta), 1e-6});
            auto closed = corr_ideal(0.1, -0.05, r, eta, DenominatorForm::SechTerm);
            if (closed) {
                rep.checks.push_back({"oracle-vs-sech-form-general-angles",
                                      {{"r", r}, {"eta", eta}, {"theta_a", 0.1}, {"theta_b", -0.05}},
                                      corr_ideal_oracle(0.1, -0.05, r, eta), *closed, 1e-6, false});
            }
        }
    }
    {
        PhysicalGrid grid;
        grid.min_nodes = 401;
        const PhysicalDensityTable table(1.0, 1.0, PdfVariant::EnvelopeCorrected, grid);
        for (double eta : {0.5, 0.8}) {
            const double direct = table.quadrant_probs(0.1, -0.05, eta).correlation();
            GridPdf g = table.grid_pdf(0.1, -0.05);
            g.normalize();
            const double smoothed = quadrant_masses(smooth_inefficiency(g, eta)).correlation();
            rep.checks.push_back({"physical-readout-vs-smoothing", {{"r", 1.0}, {"eta", eta}}, direct, smoothed, 1e-5});
        }
    }
    return rep;
}

}  // namespace suites_impl

inline Report run_suite(const RunConfig& cfg) {
    if (cfg.suite == "eq6") return suites_impl::eq6(cfg);
    if (cfg.suite == "eq8") return suites_impl::eq8(cfg);
    if (cfg.suite == "thermal") return suites_impl::thermal(cfg);
    if (cfg.suite == "fock-identities") return suites_impl::fock_identities(cfg);
    if (cfg.suite == "efficiency") return suites_impl::efficiency(cfg);
    throw InvalidArgument("unknown suite " + cfg.suite);
}

// ---------------------------------------------------------------------------
// Density dumps.

struct PdfDump {
    GridPdf pdf;             // normalized so that sum * dx * dy = 1
    double raw_mass = 0;     // Riemann mass inside the window before normalizing
    double clipped_mass = 0;
};

inline PdfDump compute_pdf(const RunConfig& cfg, PathKind path) {
    const Axis ax = Axis::covering(cfg.pdf_extent, cfg.pdf_step);
    const double r = cfg.r_min, ta = cfg.theta_a, tb = cfg.theta_b;
    GridPdf g;
    switch (path) {
        case PathKind::AnalyticIdeal:
        case PathKind::OracleCoherent: {
            CoherentOracleConfig oc;
            oc.convention = cfg.convention;
            g = ideal_oracle_grid_pdf(ta, tb, r, ax, oc);
            // back to the unit-norm amplitude so the window mass is the captured probability
            for (double& v : g.density) v *= g.total_mass;
            break;
        }
        case PathKind::PhysicalAsPrinted:
        case PathKind::PhysicalCorrected:
            g = GridPdf::tabulate([&](double x, double y) { return pdf_ef(x, y, ta, tb, r, cfg.d, variant_of(path)); }, ax, ax);
            g.clip_negative();
            break;
        case PathKind::OracleFock: {
            FockOracleConfig fc;
            fc.cutoff = cfg.cutoff;
            g = fock_grid_pdf(physical_oracle_state(ta, tb, r, cfg.d, fc), ax);
            break;
        }
        default:
            throw InvalidArgument("no density for this path");
    }
    if (cfg.eta < 1.0) g = smooth_inefficiency(g, cfg.eta);
    PdfDump dump;
    dump.clipped_mass = g.clipped_mass;
    dump.raw_mass = g.riemann_mass();
    for (double& v : g.density) v /= dump.raw_mass;
    g.total_mass = dump.raw_mass;
    dump.pdf = std::move(g);
    return dump;
}

inline std::string pdf_csv(const GridPdf& g) {
    std::string s = "x,y,density\n";
    s.reserve(g.density.size() * 40);
    char buf[96];
    for (std::size_t i = 0; i < g.x.count(); ++i) {
        for (std::size_t j = 0; j < g.y.count(); ++j) {
            std::snprintf(buf, sizeof buf, "%.6f,%.6f,%.12e\n", g.x.node(i), g.y.node(j), g.at(i, j));
            s += buf;
        }
    }
    return s;
}

// ---------------------------------------------------------------------------
// Commands. Each returns a process exit code.

inline int run(const std::string& command, const RunConfig& cfg, std::ostream& log) {
    if (auto issues = validate(cfg, command); !issues.empty()) {
        for (const auto& i : issues) log << "config error: " << i << "\n";
        return kBadConfig;
    }
    const PathKind path = *resolve_path(cfg);
    const std::filesystem::path out(cfg.out);
    auto emit = [&](const std::string& name, const std::string& payload, json m) {
        m["outputs"] = json::array({(out / name).string()});
        return detail::write_file(out / name, payload, log) &&
               detail::write_file(out / (std::filesystem::path(name).stem().string() + ".manifest.json"), m.dump(2) + "\n", log);
    };

    if (command == "sweep") {
        const auto rows = compute_sweep(cfg, path);
        json m = detail::manifest(command, cfg, {});
        m["csv_schema"] = kSweepSchema;
        json per_row = json::array();
        for (std::size_t i = 0; i < rows.size(); ++i) {
            json row = {{"row", i}, {"r", rows[i].point.r}, {"V", rows[i].point.v}, {"status", rows[i].status},
                        {"runtime_ms", rows[i].runtime_ms}};
            if (!rows[i].message.empty()) row["message"] = rows[i].message;
            per_row.push_back(row);
        }
        m["rows"] = per_row;
        if (!emit("sweep.csv", sweep_csv(cfg, path, rows), m)) return kIoError;
        std::size_t failed = 0;
        for (const auto& r : rows) failed += r.status != "ok";
        log << "sweep: " << rows.size() << " rows (" << failed << " failed) -> " << (out / "sweep.csv").string() << "\n";
        return kOk;
    }
    if (command == "optimize") {
        const RowResult row = run_point(cfg, path, {cfg.r_min, cfg.v_min});
        json j;
        j["resource"] = to_string(cfg.resource);
        j["path"] = to_string(path);
        j["r"] = cfg.r_min;
        j["V"] = cfg.v_min;
        j["status"] = row.status;
        if (row.result) j["result"] = bell_json(*row.result);
        else j["message"] = row.message;
        json m = detail::manifest(command, cfg, {});
        m["runtime_ms"] = row.runtime_ms;
        if (!emit("optimize.json", j.dump(2) + "\n", m)) return kIoError;
        if (row.result) log << "b_max = " << detail::fmt(row.result->b_max) << "\n";
        else log << "optimize failed: " << row.status << ": " << row.message << "\n";
        return kOk;
    }
    if (command == "validate") {
        const Report rep = run_suite(cfg);
        const std::string name = "validate-" + cfg.suite + ".json";
        if (!emit(name, rep.to_json().dump(2) + "\n", detail::manifest(command, cfg, {}))) return kIoError;
        const json summary = rep.to_json();
        log << "validate " << cfg.suite << ": " << summary["checks_total"] << " checks, "
            << summary["mandatory_failed"] << " mandatory failures -> " << (out / name).string() << "\n";
        return rep.mandatory_pass() ? kOk : kCheckFailed;
    }
    if (command == "pdf") {
        PdfDump dump;
        try {
            dump = compute_pdf(cfg, path);
        } catch (const std::exception& e) {
            log << "pdf failed: " << e.what() << "\n";
            return kCheckFailed;
        }
        json m = detail::manifest(command, cfg, {});
        m["csv_schema"] = kPdfSchema;
        m["path"] = to_string(path);
        m["normalization"] = dump.raw_mass;
        m["clipped_mass"] = dump.clipped_mass;
        m["grid"] = {{"step", dump.pdf.x.step}, {"extent", dump.pdf.x.extent()}, {"nodes_per_axis", dump.pdf.x.count()}};
        if (!emit("pdf.csv", pdf_csv(dump.pdf), m)) return kIoError;
        log << "pdf: " << dump.pdf.density.size() << " points -> " << (out / "pdf.csv").string() << "\n";
        return kOk;
    }
    log << "unknown command '" << command << "'\n";
    return kBadConfig;
}

}  // namespace bellgauss::cli

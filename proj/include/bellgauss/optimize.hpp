#pragma once

// CHSH maximization over the four measurement angles: a coarse grid that
// reuses the pair table, then bounded Nelder-Mead from the best seeds.

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "analytic.hpp"
#include "model.hpp"

namespace bellgauss {

/// Per-angle search interval. Periodic windows exclude the upper end.
struct SearchWindow {
    double lo = -kPi / 8;
    double hi = 3 * kPi / 8;
    bool periodic = true;
    int max_widenings = 0;   // doublings allowed when the optimum sits on the edge
    int zoom_levels = 1;     // extra coarse grids on windows shrunk 4x per level about the centre

    static SearchWindow analytic() { return {}; }
    static SearchWindow physical(double d, double half_width = 1.5) { return {-half_width * d, half_width * d, false, 4, 3}; }
};

struct SearchConfig {
    int grid_points = 13;
    int max_evals = 5000;   // distinct correlation evaluations per window
    double tol = 1e-6;      // on B
    int seeds = 5;
    SearchWindow window = SearchWindow::analytic();
};

struct BellResult {
    double b = 0;       // signed CHSH value at the optimum
    double b_max = 0;   // |b|
    AngleQuad angles;
    // c[i][j] = C(A_i, B_j) with A_0 = theta_a, A_1 = theta_a2, B_0 = theta_b, B_1 = theta_b2
    std::array<std::array<double, 2>, 2> correlations{};
    int evaluations = 0;
    bool converged = false;
    SearchWindow window;   // the window finally searched
};

class NoFeasiblePoint : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
    ErrorCode code() const { return ErrorCode::NoFeasiblePoint; }
};

inline std::vector<std::string> validate_search(const SearchConfig& cfg) {
    std::vector<std::string> issues;
    if (cfg.grid_points < 3) issues.push_back("grid_points must be >= 3");
    if (cfg.max_evals < 1) issues.push_back("max_evals must be positive");
    if (!(cfg.tol > 0)) issues.push_back("tol must be positive");
    if (cfg.seeds < 1) issues.push_back("seeds must be positive");
    if (!(cfg.window.hi > cfg.window.lo)) issues.push_back("window must be non-empty");
    return issues;
}

namespace detail {

constexpr double kInfeasible = -std::numeric_limits<double>::infinity();

/// Memoizing wrapper; counts distinct evaluator calls.
class PairCache {
public:
    explicit PairCache(const CorrelationFn& f) : f_(f) {}

    const Result<double>& operator()(double a, double b) {
        auto key = std::make_pair(a, b);
        auto it = cache_.find(key);
        if (it != cache_.end()) return it->second;
        ++calls_;
        return cache_.emplace(key, f_(a, b)).first->second;
    }

    int calls() const { return calls_; }

private:
    const CorrelationFn& f_;
    std::map<std::pair<double, double>, Result<double>> cache_;
    int calls_ = 0;
};

using Point = std::array<double, 4>;   // theta_a, theta_a2, theta_b, theta_b2

inline AngleQuad to_quad(const Point& p) { return {p[0], p[2], p[1], p[3]}; }

/// Signed B, or nullopt if any pair is infeasible.
inline std::optional<double> chsh_at(PairCache& cache, const Point& p) {
    const Result<double>* c[4] = {&cache(p[0], p[2]), &cache(p[1], p[2]), &cache(p[0], p[3]), &cache(p[1], p[3])};
    for (auto* ci : c) {
        if (!ci->ok()) return std::nullopt;
    }
    return **c[0] + **c[1] + **c[2] - **c[3];
}

inline double score(PairCache& cache, const Point& p) {
    auto b = chsh_at(cache, p);
    return b ? std::abs(*b) : kInfeasible;
}

struct Seed {
    double score;
    Point p;
};

inline void grid_quadruples(PairCache& cache, int n, double lo, double hi, bool periodic, std::vector<Seed>& all) {
    const double step = periodic ? (hi - lo) / n : (hi - lo) / (n - 1);
    std::vector<double> nodes(n);
    for (int i = 0; i < n; ++i) nodes[i] = lo + i * step;

    std::vector<double> table(n * n, std::numeric_limits<double>::quiet_NaN());
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < n; ++j) {
            const auto& c = cache(nodes[i], nodes[j]);
            if (c) table[i * n + j] = *c;
        }
    }

    for (int a = 0; a < n; ++a) {
        for (int a2 = 0; a2 < n; ++a2) {
            for (int b = 0; b < n; ++b) {
                const double c00 = table[a * n + b], c10 = table[a2 * n + b];
                if (std::isnan(c00) || std::isnan(c10)) continue;
                for (int b2 = 0; b2 < n; ++b2) {
                    const double c01 = table[a * n + b2], c11 = table[a2 * n + b2];
                    if (std::isnan(c01) || std::isnan(c11)) continue;
                    all.push_back({std::abs(c00 + c10 + c01 - c11), {nodes[a], nodes[a2], nodes[b], nodes[b2]}});
                }
            }
        }
    }
}

/// Best coarse-grid quadruples, each grid built from one table of pair correlations.
inline std::vector<Seed> coarse_seeds(PairCache& cache, const SearchConfig& cfg, const SearchWindow& w) {
    std::vector<Seed> all;
    const double mid = (w.lo + w.hi) / 2;
    double half = (w.hi - w.lo) / 2;
    for (int level = 0; level < std::max(1, w.zoom_levels); ++level, half /= 4) {
        if (level == 0) grid_quadruples(cache, cfg.grid_points, w.lo, w.hi, w.periodic, all);
        else grid_quadruples(cache, cfg.grid_points, mid - half, mid + half, false, all);
    }
    // stable: ties keep grid order
    std::stable_sort(all.begin(), all.end(), [](const Seed& x, const Seed& y) { return x.score > y.score; });

    std::vector<Seed> out;
    for (const auto& s : all) {
        if (static_cast<int>(out.size()) == cfg.seeds) break;
        // symmetric copies of one optimum share its value; keep one
        bool dup = std::any_of(out.begin(), out.end(), [&](const Seed& o) { return std::abs(o.score - s.score) < 1e-12; });
        if (!dup) out.push_back(s);
    }
    return out;
}

struct SimplexOutcome {
    Point p;
    double score;
    bool converged;
};

/// Nelder-Mead on -|B| with restarts at the current best until a restart
/// stops improving. Stops when the budget of new evaluations runs out.
inline SimplexOutcome nelder_mead(PairCache& cache, const SearchWindow& w, Point start, double step, double tol,
                                  int budget) {
    const int start_calls = cache.calls();
    auto spent = [&] { return cache.calls() - start_calls; };
    auto f = [&](const Point& p) {
        if (!w.periodic) {
            for (double t : p) {
                if (t < w.lo || t > w.hi) return -kInfeasible;
            }
        }
        return -score(cache, p);
    };

    const double diam_tol = 1e-3 * step;
    Point best = start;
    double fbest = f(best);
    bool converged = false;
    for (int restart = 0; restart < 8 && spent() < budget; ++restart) {
        std::array<Point, 5> s;
        std::array<double, 5> fs;
        s[0] = best;
        fs[0] = fbest;
        for (int k = 0; k < 4; ++k) {
            s[k + 1] = best;
            s[k + 1][k] += step;
            fs[k + 1] = f(s[k + 1]);
        }
        bool inner_converged = false;
        while (spent() < budget) {
            std::array<int, 5> idx{0, 1, 2, 3, 4};
            std::stable_sort(idx.begin(), idx.end(), [&](int x, int y) { return fs[x] < fs[y]; });
            std::array<Point, 5> ss;
            std::array<double, 5> fss;
            for (int k = 0; k < 5; ++k) {
                ss[k] = s[idx[k]];
                fss[k] = fs[idx[k]];
            }
            s = ss;
            fs = fss;

            double diam = 0;
            for (int k = 1; k < 5; ++k) {
                for (int c = 0; c < 4; ++c) diam = std::max(diam, std::abs(s[k][c] - s[0][c]));
            }
            if (std::isfinite(fs[4]) && fs[4] - fs[0] <= tol * 0.1 && diam <= diam_tol) {
                inner_converged = true;
                break;
            }
            if (diam < 1e-14) break;

            Point centroid{};
            for (int k = 0; k < 4; ++k) {
                for (int c = 0; c < 4; ++c) centroid[c] += s[k][c] / 4;
            }
            auto along = [&](double t) {
                Point p;
                for (int c = 0; c < 4; ++c) p[c] = centroid[c] + t * (s[4][c] - centroid[c]);
                return p;
            };
            const Point xr = along(-1.0);
            const double fr = f(xr);
            if (fr < fs[0]) {
                const Point xe = along(-2.0);
                const double fe = f(xe);
                if (fe < fr) { s[4] = xe; fs[4] = fe; }
                else { s[4] = xr; fs[4] = fr; }
            } else if (fr < fs[3]) {
                s[4] = xr;
                fs[4] = fr;
            } else {
                const bool outside = fr < fs[4];
                const Point xc = along(outside ? -0.5 : 0.5);
                const double fc = f(xc);
                if (fc < (outside ? fr : fs[4])) {
                    s[4] = xc;
                    fs[4] = fc;
                } else {
                    for (int k = 1; k < 5; ++k) {
                        for (int c = 0; c < 4; ++c) s[k][c] = s[0][c] + 0.5 * (s[k][c] - s[0][c]);
                        fs[k] = f(s[k]);
                    }
                }
            }
        }
        const int arg = static_cast<int>(std::min_element(fs.begin(), fs.end()) - fs.begin());
        const double gain = fbest - fs[arg];
        if (fs[arg] < fbest) {
            best = s[arg];
            fbest = fs[arg];
        }
        if (inner_converged && gain <= tol) {
            converged = true;
            break;
        }
        step *= 0.25;
    }
    return {best, -fbest, converged};
}

inline BellResult search_window(const CorrelationFn& corr, const SearchConfig& cfg, const SearchWindow& w) {
    PairCache cache(corr);
    const auto seeds = coarse_seeds(cache, cfg, w);
    if (seeds.empty()) throw NoFeasiblePoint("maximize_chsh: every coarse-grid point is infeasible");

    const double step = (w.hi - w.lo) / cfg.grid_points / 2;
    SimplexOutcome best{seeds[0].p, seeds[0].score, false};
    for (std::size_t k = 0; k < seeds.size(); ++k) {
        // unused budget passes on to later seeds
        const int budget = std::max(0, cfg.max_evals - cache.calls()) / static_cast<int>(seeds.size() - k);
        auto out = nelder_mead(cache, w, seeds[k].p, step, cfg.tol, budget);
        if (out.score > best.score) best = out;
    }

    BellResult res;
    res.angles = to_quad(best.p);
    res.correlations = {{{*cache(best.p[0], best.p[2]), *cache(best.p[0], best.p[3])},
                         {*cache(best.p[1], best.p[2]), *cache(best.p[1], best.p[3])}}};
    const auto& c = res.correlations;
    res.b = c[0][0] + c[1][0] + c[0][1] - c[1][1];
    res.b_max = std::abs(res.b);
    res.evaluations = cache.calls();
    res.converged = best.converged;
    res.window = w;
    return res;
}

inline bool on_boundary(const BellResult& r, const SearchWindow& w, double margin) {
    for (double t : {r.angles.theta_a, r.angles.theta_a2, r.angles.theta_b, r.angles.theta_b2}) {
        if (t <= w.lo + margin || t >= w.hi - margin) return true;
    }
    return false;
}

}  // namespace detail

/// Maximizes |B|; infeasible (domain-error) points never win.
/// Throws InvalidArgument on a bad config and NoFeasiblePoint if the whole
/// coarse grid is infeasible.
inline BellResult maximize_chsh(const CorrelationFn& corr, const SearchConfig& cfg = {}) {
    if (auto issues = validate_search(cfg); !issues.empty()) throw InvalidArgument("maximize_chsh: " + issues.front());

    SearchWindow w = cfg.window;
    BellResult res = detail::search_window(corr, cfg, w);
    int total = res.evaluations;
    for (int k = 0; k < w.max_widenings && !w.periodic; ++k) {
        const double margin = (w.hi - w.lo) / (cfg.grid_points - 1) / 2;
        if (!detail::on_boundary(res, w, margin)) break;
        const double mid = (w.lo + w.hi) / 2, half = w.hi - mid;
        w.lo = mid - 2 * half;
        w.hi = mid + 2 * half;
        BellResult wider = detail::search_window(corr, cfg, w);
        total += wider.evaluations;
        if (wider.b_max > res.b_max) res = wider;
    }
    res.evaluations = total;
    return res;
}

}  // namespace bellgauss

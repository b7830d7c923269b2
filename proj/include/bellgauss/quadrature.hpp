#pragma once

// Deterministic integration over the real line and signed quadrants, uniform
// grid densities, and the Gaussian smoothing that models lossy homodyne
// detection.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <queue>
#include <stdexcept>
#include <string>
#include <vector>

#include "model.hpp"

namespace bellgauss {

struct QuadTolerance {
    double rel = 1e-8;
    double abs = 1e-10;
    int max_subdivisions = 2000;
};

struct QuadEstimate {
    double value = 0.0;
    double error = 0.0;
    int subdivisions = 0;
};

/// Adaptive integration ran out of subdivisions; carries the best estimate.
class QuadratureError : public std::runtime_error {
public:
    explicit QuadratureError(QuadEstimate best)
        : std::runtime_error("quadrature did not converge: estimate " + std::to_string(best.value) +
                             " +- " + std::to_string(best.error)),
          best_(best) {}
    const QuadEstimate& best() const { return best_; }

private:
    QuadEstimate best_;
};

enum class Sign { Plus, Minus };

inline double sign_value(Sign s) { return s == Sign::Plus ? 1.0 : -1.0; }

namespace detail {

// 7-point Gauss / 15-point Kronrod pair on [-1, 1].
inline constexpr std::array<double, 8> kKronrodNodes = {
    0.991455371120812639206854697526329, 0.949107912342758524526189684047851,
    0.864864423359769072789712788640926, 0.741531185599394439863864773280788,
    0.586087235467691130294144845693013, 0.405845151377397166906606412076961,
    0.207784955007898467600689403773245, 0.0};
inline constexpr std::array<double, 8> kKronrodWeights = {
    0.022935322010529224963732008058970, 0.063092092629978553290700663189204,
    0.104790010322250183839876322541518, 0.140653259715525918745189590510238,
    0.169004726639267902826583426598550, 0.190350578064785409913256402421014,
    0.204432940075298892414161999234649, 0.209482141084727828012999174891714};
inline constexpr std::array<double, 4> kGaussWeights = {
    0.129484966168869693270611432679082, 0.279705391489276667901467771423780,
    0.381830050505118944950369775488975, 0.417959183673469387755102040816327};

struct Panel {
    double a, b, value, error;
    bool operator<(const Panel& o) const {
        // max-heap on error; ties broken by position so the order is total
        if (error != o.error) return error < o.error;
        return a > o.a;
    }
};

template <class F>
Panel kronrod15(F& f, double a, double b) {
    const double c = 0.5 * (a + b);
    const double h = 0.5 * (b - a);
    const double fc = f(c);
    double resk = fc * kKronrodWeights[7];
    double resg = fc * kGaussWeights[3];
    for (int j = 0; j < 7; ++j) {
        const double dx = h * kKronrodNodes[j];
        const double s = f(c - dx) + f(c + dx);
        resk += kKronrodWeights[j] * s;
        if (j % 2 == 1) resg += kGaussWeights[j / 2] * s;
    }
    return {a, b, resk * h, std::abs((resk - resg) * h)};
}

template <class F>
QuadEstimate adaptive(F& f, double a, double b, const QuadTolerance& tol) {
    std::priority_queue<Panel> heap;
    Panel first = kronrod15(f, a, b);
    heap.push(first);
    double value = first.value;
    double error = first.error;
    int subdivisions = 0;
    while (error > std::max(tol.abs, tol.rel * std::abs(value))) {
        if (subdivisions >= tol.max_subdivisions) {
            throw QuadratureError({value, error, subdivisions});
        }
        Panel worst = heap.top();
        heap.pop();
        const double mid = 0.5 * (worst.a + worst.b);
        Panel left = kronrod15(f, worst.a, mid);
        Panel right = kronrod15(f, mid, worst.b);
        value += left.value + right.value - worst.value;
        error += left.error + right.error - worst.error;
        heap.push(left);
        heap.push(right);
        ++subdivisions;
    }
    // Re-sum in a fixed order to avoid drift from the incremental updates.
    std::vector<Panel> panels;
    panels.reserve(heap.size());
    while (!heap.empty()) {
        panels.push_back(heap.top());
        heap.pop();
    }
    std::sort(panels.begin(), panels.end(), [](const Panel& l, const Panel& r) { return l.a < r.a; });
    double v = 0.0, e = 0.0;
    for (const auto& p : panels) {
        v += p.value;
        e += p.error;
    }
    return {v, e, subdivisions};
}

}  // namespace detail

/// Adaptive Gauss-Kronrod on a finite interval.
template <class F>
QuadEstimate integrate_interval(F f, double a, double b, const QuadTolerance& tol = {}) {
    return detail::adaptive(f, a, b, tol);
}

/// Integral over [0, inf) through x = t / (1 - t).
template <class F>
QuadEstimate integrate_half_line(F f, const QuadTolerance& tol = {}) {
    auto g = [&f](double t) {
        if (t >= 1.0) return 0.0;
        const double s = 1.0 - t;
        const double v = f(t / s);
        return v == 0.0 ? 0.0 : v / (s * s);
    };
    return detail::adaptive(g, 0.0, 1.0, tol);
}

/// Integral over the real line for integrands with Gaussian-dominated tails.
template <class F>
QuadEstimate integrate_real_line(F f, const QuadTolerance& tol = {}) {
    return integrate_half_line([&f](double x) { return f(x) + f(-x); }, tol);
}

/// Integral over the quadrant {sign_x * x > 0, sign_y * y > 0}.
template <class F>
QuadEstimate integrate_quadrant(F f, Sign sign_x, Sign sign_y, const QuadTolerance& tol = {}) {
    const double sx = sign_value(sign_x);
    const double sy = sign_value(sign_y);
    QuadTolerance inner = tol;
    inner.abs = tol.abs * 0.1;
    inner.rel = tol.rel * 0.1;
    int total_subdivisions = 0;
    auto outer = [&](double x) {
        auto row = [&](double y) { return f(sx * x, sy * y); };
        QuadEstimate e = integrate_half_line(row, inner);
        total_subdivisions += e.subdivisions;
        return e.value;
    };
    QuadEstimate est = integrate_half_line(outer, tol);
    est.subdivisions += total_subdivisions;
    return est;
}

// ---------------------------------------------------------------------------
// Uniform grid densities.

/// Uniform axis symmetric about zero: nodes -n*step .. n*step with n even,
/// so Simpson's rule applies on each half-axis.
struct Axis {
    double step = 1.0;
    std::size_t half = 0;   // n; node count is 2n + 1

    std::size_t count() const { return 2 * half + 1; }
    double node(std::size_t i) const { return (static_cast<double>(i) - static_cast<double>(half)) * step; }
    double extent() const { return static_cast<double>(half) * step; }

    static Axis covering(double extent, double step) {
        if (!(extent > 0) || !(step > 0)) throw InvalidArgument("Axis: extent and step must be positive");
        auto n = static_cast<std::size_t>(std::ceil(extent / step));
        if (n % 2) ++n;
        if (n == 0) n = 2;
        return {step, n};
    }

    bool operator==(const Axis&) const = default;
};

/// Composite Simpson weights over nodes [first, last] (even interval count).
inline std::vector<double> simpson_weights(const Axis& ax, std::size_t first, std::size_t last) {
    std::vector<double> w(ax.count(), 0.0);
    if (last == first) return w;
    const double h3 = ax.step / 3.0;
    for (std::size_t i = first; i <= last; ++i) {
        const std::size_t k = i - first;
        w[i] = (i == first || i == last) ? h3 : (k % 2 ? 4 * h3 : 2 * h3);
    }
    return w;
}

struct QuadrantMasses {
    double pp = 0, pm = 0, mp = 0, mm = 0;   // first sign: x (Alice), second: y (Bob)

    double total() const { return pp + pm + mp + mm; }
    double correlation() const { return pp + mm - pm - mp; }
};

/// Density tabulated on a uniform grid. Values are stored x-major:
/// density[ix * y.count() + iy].
struct GridPdf {
    Axis x, y;
    std::vector<double> density;
    double total_mass = 1.0;     // mass before the last renormalization
    double clipped_mass = 0.0;   // negative mass removed by clipping

    double at(std::size_t ix, std::size_t iy) const { return density[ix * y.count() + iy]; }
    double& at(std::size_t ix, std::size_t iy) { return density[ix * y.count() + iy]; }

    template <class F>
    static GridPdf tabulate(F f, Axis ax, Axis ay) {
        GridPdf g{ax, ay, std::vector<double>(ax.count() * ay.count()), 1.0, 0.0};
        for (std::size_t i = 0; i < ax.count(); ++i) {
            const double xv = ax.node(i);
            for (std::size_t j = 0; j < ay.count(); ++j) g.at(i, j) = f(xv, ay.node(j));
        }
        return g;
    }

    /// Simpson mass over the full grid.
    double mass() const {
        const auto wx = simpson_weights(x, 0, x.count() - 1);
        const auto wy = simpson_weights(y, 0, y.count() - 1);
        return weighted_sum(wx, wy);
    }

    /// Riemann mass h_x h_y sum(p); exactly conserved by smooth_inefficiency.
    double riemann_mass() const {
        double s = 0.0;
        for (double v : density) s += v;
        return s * x.step * y.step;
    }

    double weighted_sum(const std::vector<double>& wx, const std::vector<double>& wy) const {
        double total = 0.0;
        for (std::size_t i = 0; i < x.count(); ++i) {
            if (wx[i] == 0.0) continue;
            const double* row = &density[i * y.count()];
            double acc = 0.0;
            for (std::size_t j = 0; j < y.count(); ++j) acc += wy[j] * row[j];
            total += wx[i] * acc;
        }
        return total;
    }

    /// Zero out negative values, recording the removed mass.
    void clip_negative() {
        double neg = 0.0;
        for (double& v : density) {
            if (v < 0) {
                neg -= v;
                v = 0.0;
            }
        }
        clipped_mass += neg * x.step * y.step;
    }

    /// Scale to unit Simpson mass; total_mass keeps the pre-scaling value.
    void normalize() {
        const double m = mass();
        if (!(m > 0)) throw std::runtime_error("GridPdf::normalize: non-positive mass");
        for (double& v : density) v /= m;
        total_mass = m;
    }
};

/// Simpson integral of each signed quadrant; the four add up to mass().
inline QuadrantMasses quadrant_masses(const GridPdf& p) {
    const auto wxm = simpson_weights(p.x, 0, p.x.half);
    const auto wxp = simpson_weights(p.x, p.x.half, p.x.count() - 1);
    const auto wym = simpson_weights(p.y, 0, p.y.half);
    const auto wyp = simpson_weights(p.y, p.y.half, p.y.count() - 1);
    return {p.weighted_sum(wxp, wyp), p.weighted_sum(wxp, wym), p.weighted_sum(wxm, wyp),
            p.weighted_sum(wxm, wym)};
}

namespace detail {

inline std::vector<double> sampled_gaussian_kernel(double sigma, double step, std::size_t& radius) {
    radius = static_cast<std::size_t>(std::ceil(8.0 * sigma / step));
    std::vector<double> k(2 * radius + 1);
    double s = 0.0;
    for (std::size_t m = 0; m < k.size(); ++m) {
        const double t = (static_cast<double>(m) - static_cast<double>(radius)) * step;
        k[m] = std::exp(-0.5 * t * t / (sigma * sigma));
        s += k[m];
    }
    for (double& v : k) v /= s;
    return k;
}

}  // namespace detail

/// Density of the measured quadratures when each mode passes a beam splitter
/// of transmissivity eta before an ideal homodyne detector:
/// x_meas = sqrt(eta) x + sqrt(1 - eta) x_vac, vacuum variance 1/2.
///
/// The output grid has step sqrt(eta) * step so the scaling is exact; each
/// axis is then convolved with a normalized sampled Gaussian of variance
/// (1 - eta)/2 and widened by the kernel radius. Riemann mass is conserved
/// exactly; the result is renormalized to unit Simpson mass.
inline GridPdf smooth_inefficiency(const GridPdf& p, double eta) {
    if (!(eta > 0 && eta <= 1)) throw InvalidArgument("smooth_inefficiency: eta must lie in (0, 1]");
    if (eta == 1.0) return p;
    const double se = std::sqrt(eta);
    const double sigma = std::sqrt((1.0 - eta) / 2.0);

    auto smooth_axis = [&](const Axis& in, std::size_t& radius) {
        const Axis out_step{in.step * se, 0};
        auto kernel = detail::sampled_gaussian_kernel(sigma, out_step.step, radius);
        std::size_t pad = radius + (radius % 2);
        return std::make_pair(Axis{out_step.step, in.half + pad}, kernel);
    };
    std::size_t rx = 0, ry = 0;
    auto [ax, kx] = smooth_axis(p.x, rx);
    auto [ay, ky] = smooth_axis(p.y, ry);
    const std::size_t offx = ax.half - p.x.half;
    const std::size_t offy = ay.half - p.y.half;
    // step ratio so that sum(out) * h_out == sum(in) * h_in
    const double jac = 1.0 / se;

    // x pass: (in.x) x (in.y) -> (ax) x (in.y)
    const std::size_t ny_in = p.y.count();
    std::vector<double> tmp(ax.count() * ny_in, 0.0);
    for (std::size_t i = 0; i < p.x.count(); ++i) {
        const double* src = &p.density[i * ny_in];
        bool any = false;
        for (std::size_t j = 0; j < ny_in; ++j) {
            if (src[j] != 0.0) {
                any = true;
                break;
            }
        }
        if (!any) continue;
        const std::size_t centre = i + offx;
        for (std::size_t m = 0; m < kx.size(); ++m) {
            const std::size_t o = centre + m - rx;
            const double w = kx[m] * jac;
            double* dst = &tmp[o * ny_in];
            for (std::size_t j = 0; j < ny_in; ++j) dst[j] += w * src[j];
        }
    }
    // y pass: (ax) x (in.y) -> (ax) x (ay)
    GridPdf out{ax, ay, std::vector<double>(ax.count() * ay.count(), 0.0), 1.0, p.clipped_mass};
    for (std::size_t i = 0; i < ax.count(); ++i) {
        const double* src = &tmp[i * ny_in];
        double* dst = &out.density[i * ay.count()];
        for (std::size_t j = 0; j < ny_in; ++j) {
            const double v = src[j];
            if (v == 0.0) continue;
            const std::size_t centre = j + offy;
            for (std::size_t m = 0; m < ky.size(); ++m) dst[centre + m - ry] += ky[m] * jac * v;
        }
    }
    out.normalize();
    return out;
}

/// Quadrant masses of the measured density without materializing it: the
/// probability that a true quadrature x is read with sign s is
/// Phi(s sqrt(eta) x / sigma), so each quadrant is a weighted integral of p.
/// Agrees with quadrant_masses(smooth_inefficiency(p, eta)) up to grid error.
inline QuadrantMasses quadrant_masses_after_loss(const GridPdf& p, double eta) {
    if (!(eta > 0 && eta <= 1)) throw InvalidArgument("quadrant_masses_after_loss: eta must lie in (0, 1]");
    if (eta == 1.0) return quadrant_masses(p);
    const double se = std::sqrt(eta);
    const double sigma = std::sqrt((1.0 - eta) / 2.0);
    auto weights = [&](const Axis& ax, double sgn) {
        auto w = simpson_weights(ax, 0, ax.count() - 1);
        for (std::size_t i = 0; i < ax.count(); ++i) {
            w[i] *= 0.5 * std::erfc(-sgn * se * ax.node(i) / (sigma * std::sqrt(2.0)));
        }
        return w;
    };
    const auto wxp = weights(p.x, 1.0), wxm = weights(p.x, -1.0);
    const auto wyp = weights(p.y, 1.0), wym = weights(p.y, -1.0);
    return {p.weighted_sum(wxp, wyp), p.weighted_sum(wxp, wym), p.weighted_sum(wxm, wyp),
            p.weighted_sum(wxm, wym)};
}

}  // namespace bellgauss

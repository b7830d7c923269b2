#pragma once

// Brute-force evaluation of the ideal-rotation statistics directly in the
// coherent-state basis. Nothing here uses the closed-form correlations.
//
// The resource is N * int dalpha G(r, alpha) |alpha/sqrt2, alpha/sqrt2>, alpha
// real. A rotation acts on the pair {|beta>, |-beta>}:
//   R|beta>  = sin2t |beta> + cos2t |-beta>
//   R|-beta> = cos2t |beta> - sin2t |-beta>
// so each component becomes a|alpha/sqrt2> + b|-alpha/sqrt2> with (a, b)
// fixed by PairConvention.

#include <cmath>
#include <complex>
#include <vector>

#include <Eigen/Dense>

#include "model.hpp"
#include "quadrature.hpp"

namespace bellgauss {

/// Which line of the pair rule a coherent component |alpha/sqrt2> obeys.
///   Representative: beta is the member with Re beta >= 0, so components with
///                   Re alpha < 0 are |-beta> and pick up line 2.
///   Linear:         line 1 for every alpha, i.e. R is a single linear map
///                   |g> -> sin2t |g> + cos2t |-g>.
/// Only Linear gives zero correlation at theta = pi/8; under Representative
/// the even and odd parts of the superposition interfere.
enum class PairConvention { Representative, Linear };

inline const char* to_string(PairConvention c) {
    return c == PairConvention::Representative ? "representative" : "linear";
}

struct CoherentOracleConfig {
    PairConvention convention = PairConvention::Linear;
    double alpha_sigmas = 6.0;   // alpha range in standard deviations of G
    double alpha_step = 0.2;     // Simpson step of the alpha quadrature
    QuadTolerance tol{1e-10, 1e-13, 4000};   // thermal mixture integrals
};

inline constexpr double kOracleMinSqueezing = 0.05;

/// G(r, alpha) = exp(-(1 - tanh r) alpha^2 / (2 tanh r)).
inline double superposition_weight(double r, double alpha) {
    const double t = std::tanh(r);
    return std::exp(-(1 - t) * alpha * alpha / (2 * t));
}

inline double alpha_max(double r, double sigmas = 6.0) {
    const double t = std::tanh(r);
    return sigmas * std::sqrt(t / (1 - t));
}

/// Coefficients (a, b) of |alpha/sqrt2> and |-alpha/sqrt2> after rotation.
/// `side` is the sign of Re alpha; at alpha = 0 it selects the one-sided limit.
struct PairCoefficients {
    double a, b;
};

inline PairCoefficients pair_coefficients(double theta, double side, PairConvention conv) {
    const double s = std::sin(2 * theta), c = std::cos(2 * theta);
    if (conv == PairConvention::Linear || side >= 0) return {s, c};
    return {-s, c};
}

/// <x|beta> with vacuum variance 1/2.
inline std::complex<double> coherent_overlap(double x, std::complex<double> beta) {
    const double br = beta.real(), bi = beta.imag();
    const double u = x - std::sqrt(2.0) * br;
    return std::pow(kPi, -0.25) * std::exp(std::complex<double>(-0.5 * u * u, std::sqrt(2.0) * bi * x - br * bi));
}

namespace detail {

inline void check_oracle_r(double r) {
    if (!(r >= kOracleMinSqueezing)) throw InvalidArgument("coherent oracle: requires r >= 0.05");
}

/// Simpson nodes for one half of the alpha range; `side` = -1 or +1.
struct AlphaNode {
    double alpha;
    double weight;   // Simpson weight * N * G(r, alpha)
    double side;
};

inline std::vector<AlphaNode> alpha_nodes(double r, const CoherentOracleConfig& cfg) {
    const double amax = alpha_max(r, cfg.alpha_sigmas);
    auto n = static_cast<std::size_t>(std::ceil(amax / cfg.alpha_step));
    if (n % 2) ++n;
    const double h = amax / static_cast<double>(n);
    const double norm = 1.0 / std::sqrt(2 * kPi * std::sinh(r));
    std::vector<AlphaNode> out;
    out.reserve(2 * (n + 1));
    for (double side : {-1.0, 1.0}) {
        for (std::size_t k = 0; k <= n; ++k) {
            const double w = (k == 0 || k == n) ? 1.0 : (k % 2 ? 4.0 : 2.0);
            const double a = side * h * static_cast<double>(k);
            out.push_back({a, w * h / 3.0 * norm * superposition_weight(r, a), side});
        }
    }
    return out;
}

inline double psi0(double u) { return std::pow(kPi, -0.25) * std::exp(-0.5 * u * u); }

}  // namespace detail

/// Joint amplitude <x, y| R_A R_B |xi>, normalized at theta_A = theta_B = 0.
inline double amplitude_ideal(double x, double y, double theta_a, double theta_b, double r,
                              const CoherentOracleConfig& cfg = {}) {
    detail::check_oracle_r(r);
    double acc = 0.0;
    for (const auto& n : detail::alpha_nodes(r, cfg)) {
        const auto ca = pair_coefficients(theta_a, n.side, cfg.convention);
        const auto cb = pair_coefficients(theta_b, n.side, cfg.convention);
        const double fa = ca.a * detail::psi0(x - n.alpha) + ca.b * detail::psi0(x + n.alpha);
        const double fb = cb.a * detail::psi0(y - n.alpha) + cb.b * detail::psi0(y + n.alpha);
        acc += n.weight * fa * fb;
    }
    return acc;
}

/// Grid used for ideal-rotation density dumps.
inline Axis ideal_oracle_axis(double r, double step = 0.1, double sigmas = 8.0) {
    return Axis::covering(sigmas * std::sqrt((std::exp(2 * r) + 1) / 4) + 2.0, step);
}

/// |amplitude|^2 on a grid, normalized to unit Simpson mass.
inline GridPdf ideal_oracle_grid_pdf(double theta_a, double theta_b, double r, const Axis& axis,
                                     const CoherentOracleConfig& cfg = {}) {
    detail::check_oracle_r(r);
    const auto nodes = detail::alpha_nodes(r, cfg);
    const auto nx = static_cast<Eigen::Index>(axis.count());
    const auto na = static_cast<Eigen::Index>(nodes.size());
    Eigen::MatrixXd fa(nx, na), fb(nx, na);
    for (Eigen::Index k = 0; k < na; ++k) {
        const auto& n = nodes[static_cast<std::size_t>(k)];
        const auto ca = pair_coefficients(theta_a, n.side, cfg.convention);
        const auto cb = pair_coefficients(theta_b, n.side, cfg.convention);
        for (Eigen::Index i = 0; i < nx; ++i) {
            const double x = axis.node(static_cast<std::size_t>(i));
            const double p = detail::psi0(x - n.alpha), m = detail::psi0(x + n.alpha);
            fa(i, k) = n.weight * (ca.a * p + ca.b * m);
            fb(i, k) = cb.a * p + cb.b * m;
        }
    }
    const Eigen::MatrixXd amp = fa * fb.transpose();
    GridPdf g{axis, axis, std::vector<double>(axis.count() * axis.count()), 1.0, 0.0};
    for (Eigen::Index i = 0; i < nx; ++i) {
        for (Eigen::Index j = 0; j < nx; ++j) {
            g.at(static_cast<std::size_t>(i), static_cast<std::size_t>(j)) = amp(i, j) * amp(i, j);
        }
    }
    g.normalize();
    return g;
}

/// Quadrant probabilities of the rotated resource read out with efficiency
/// eta, summed over pairs of alpha nodes. The position integrals are done in
/// closed form: for Gaussians centred at mu and mu',
///   int psi0(x - mu) psi0(x - mu') P(+|x) dx = exp(-(mu - mu')^2/4) erfc(-sqrt(eta)(mu + mu')/2) / 2
/// where P(+|x) is the lossy sign readout. Normalized to sum 1.
inline QuadrantMasses ideal_oracle_quadrants(double theta_a, double theta_b, double r, double eta = 1.0,
                                             const CoherentOracleConfig& cfg = {}) {
    detail::check_oracle_r(r);
    if (!(eta > 0 && eta <= 1)) throw InvalidArgument("ideal oracle: eta must lie in (0, 1]");
    const auto nodes = detail::alpha_nodes(r, cfg);
    const std::size_t n = nodes.size();
    const double se = std::sqrt(eta);

    struct Comp {
        double a0, a1, b0, b1;   // party A and B coefficients of psi0(. - alpha), psi0(. + alpha)
    };
    std::vector<Comp> comp(n);
    for (std::size_t k = 0; k < n; ++k) {
        const auto ca = pair_coefficients(theta_a, nodes[k].side, cfg.convention);
        const auto cb = pair_coefficients(theta_b, nodes[k].side, cfg.convention);
        comp[k] = {ca.a, ca.b, cb.a, cb.b};
    }

    double pp = 0, pm = 0, mp = 0, mm = 0;
    for (std::size_t i = 0; i < n; ++i) {
        const double ai = nodes[i].alpha;
        double rpp = 0, rpm = 0, rmp = 0, rmm = 0;
        for (std::size_t j = 0; j <= i; ++j) {
            const double aj = nodes[j].alpha;
            // centres: (ai, aj), (ai, -aj), (-ai, aj), (-ai, -aj)
            const double g_same = std::exp(-(ai - aj) * (ai - aj) / 4);
            const double g_opp = std::exp(-(ai + aj) * (ai + aj) / 4);
            const double hs = se * (ai + aj) / 2, ho = se * (ai - aj) / 2;
            const double up_pp = 0.5 * std::erfc(-hs), up_pm = 0.5 * std::erfc(-ho);
            const double up_mp = 0.5 * std::erfc(ho), up_mm = 0.5 * std::erfc(hs);
            const auto& ci = comp[i];
            const auto& cj = comp[j];
            auto overlap = [&](double p0, double p1, double q0, double q1, bool plus) {
                // sum over centre pairs of coefficient product * overlap * readout
                const double s_pp = plus ? up_pp : 1 - up_pp;   // (+ai, +aj)
                const double s_pm = plus ? up_pm : 1 - up_pm;   // (+ai, -aj)
                const double s_mp = plus ? up_mp : 1 - up_mp;   // (-ai, +aj)
                const double s_mm = plus ? up_mm : 1 - up_mm;   // (-ai, -aj)
                return p0 * q0 * g_same * s_pp + p0 * q1 * g_opp * s_pm + p1 * q0 * g_opp * s_mp +
                       p1 * q1 * g_same * s_mm;
            };
            const double ap = overlap(ci.a0, ci.a1, cj.a0, cj.a1, true);
            const double am = overlap(ci.a0, ci.a1, cj.a0, cj.a1, false);
            const double bp = overlap(ci.b0, ci.b1, cj.b0, cj.b1, true);
            const double bm = overlap(ci.b0, ci.b1, cj.b0, cj.b1, false);
            const double w = nodes[j].weight * (j == i ? 1.0 : 2.0);
            rpp += w * ap * bp;
            rpm += w * ap * bm;
            rmp += w * am * bp;
            rmm += w * am * bm;
        }
        const double w = nodes[i].weight;
        pp += w * rpp;
        pm += w * rpm;
        mp += w * rmp;
        mm += w * rmm;
    }
    const double z = pp + pm + mp + mm;
    return {pp / z, pm / z, mp / z, mm / z};
}

inline double corr_ideal_oracle(double theta_a, double theta_b, double r, double eta = 1.0,
                                const CoherentOracleConfig& cfg = {}) {
    return ideal_oracle_quadrants(theta_a, theta_b, r, eta, cfg).correlation();
}

// ---------------------------------------------------------------------------
// Squeezed thermal resource as a P-function mixture of |alpha/sqrt2, alpha/sqrt2>.

/// Gaussian P-function weight of the squeezed thermal resource, centre c on
/// the real axis. Normalized; exists only for V e^{-2r} > 1.
inline double thermal_weight(double r, double v, double center, double alpha_r, double alpha_i) {
    const double vi = std::exp(2 * r) * v - 1, vr = std::exp(-2 * r) * v - 1;
    const double du = alpha_r - center;
    return 2 * std::exp(-2 * alpha_i * alpha_i / vi - 2 * du * du / vr) /
           (kPi * std::sqrt(v * v + 1 - 2 * v * std::cosh(2 * r)));
}

/// Probability that the rotated component R|alpha/sqrt2> reads x > 0 (sign
/// +1) or x < 0 (sign -1), unnormalized. The cross term between |beta> and
/// |-beta> splits evenly between the half-lines.
inline double component_half_mass(double theta, std::complex<double> alpha, double sign,
                                  PairConvention conv = PairConvention::Linear) {
    const auto co = pair_coefficients(theta, alpha.real() >= 0 ? 1.0 : -1.0, conv);
    const double ar = alpha.real();
    const double cross = co.a * co.b * std::exp(-std::norm(alpha));
    return co.a * co.a * 0.5 * std::erfc(-sign * ar) + co.b * co.b * 0.5 * std::erfc(sign * ar) + cross;
}

inline bool thermal_oracle_domain(double r, double v) { return v * std::exp(-2 * r) > 1 + 1e-6; }

inline Result<QuadrantMasses> thermal_oracle_quadrants(double theta_a, double theta_b, double r, double v,
                                                       double center = 0.0, const CoherentOracleConfig& cfg = {}) {
    if (!(r >= 0) || !(v >= 1)) return Error{ErrorCode::InvalidParameter, "thermal oracle: requires r >= 0, V >= 1"};
    if (!thermal_oracle_domain(r, v)) {
        return domain_error("thermal oracle: P-function requires V e^{-2r} > 1");
    }
    const double sr = 0.5 * std::sqrt(std::exp(-2 * r) * v - 1);
    const double si = 0.5 * std::sqrt(std::exp(2 * r) * v - 1);
    const double span = 10.0;
    const double lo = center - span * sr, hi = center + span * sr;

    QuadrantMasses q;
    double* slots[4] = {&q.pp, &q.pm, &q.mp, &q.mm};
    const double signs[4][2] = {{1, 1}, {1, -1}, {-1, 1}, {-1, -1}};
    for (int k = 0; k < 4; ++k) {
        auto inner = [&](double ar) {
            auto f = [&](double ai) {
                const std::complex<double> a(ar, ai);
                return thermal_weight(r, v, center, ar, ai) *
                       component_half_mass(theta_a, a, signs[k][0], cfg.convention) *
                       component_half_mass(theta_b, a, signs[k][1], cfg.convention);
            };
            return integrate_interval(f, -span * si, span * si, cfg.tol).value;
        };
        double total = 0.0;
        // the pair rule flips at Re alpha = 0
        if (lo < 0 && hi > 0) {
            total = integrate_interval(inner, lo, 0.0, cfg.tol).value + integrate_interval(inner, 0.0, hi, cfg.tol).value;
        } else {
            total = integrate_interval(inner, lo, hi, cfg.tol).value;
        }
        *slots[k] = total;
    }
    const double z = q.total();
    q.pp /= z;
    q.pm /= z;
    q.mp /= z;
    q.mm /= z;
    return q;
}

inline Result<double> corr_thermal_oracle(double theta_a, double theta_b, double r, double v, double center = 0.0,
                                          const CoherentOracleConfig& cfg = {}) {
    auto q = thermal_oracle_quadrants(theta_a, theta_b, r, v, center, cfg);
    if (!q) return q.error();
    return q.value().correlation();
}

}  // namespace bellgauss

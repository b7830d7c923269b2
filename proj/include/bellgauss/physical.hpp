#pragma once

// Joint homodyne density for Kerr-based local rotations in closed form, and
// the quadrant probabilities / correlations derived from it.
//
// The closed form is not normalized and can go negative; every evaluation
// clips, renormalizes, and reports what it removed.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <memory>
#include <vector>

#include "analytic.hpp"
#include "model.hpp"
#include "quadrature.hpp"

namespace bellgauss {

enum class PdfVariant {
    AsPrinted,           // cross term exp(x y) in the cosine part
    EnvelopeCorrected,   // cross term exp((1 - e^{-2r}) x y): exact theta = 0 envelope
};

inline const char* to_string(PdfVariant v) {
    return v == PdfVariant::AsPrinted ? "as-printed" : "envelope-corrected";
}

namespace detail {

inline double cosine_cross_coefficient(double r, PdfVariant v) {
    return v == PdfVariant::AsPrinted ? 1.0 : 1.0 - std::exp(-2 * r);
}

inline double diagonal_coefficient(double r) { return 0.5 * (1.0 + std::exp(-2 * r)); }   // e^{-r} cosh r

}  // namespace detail

/// Unnormalized joint density (may be negative).
inline double pdf_ef(double x, double y, double theta_a, double theta_b, double r, double d, PdfVariant variant) {
    const double k = detail::diagonal_coefficient(r);
    const double base = -r - k * (x * x + y * y);
    const double c2 = detail::cosine_cross_coefficient(r, variant);
    const double s = std::sqrt(2.0) / d;
    const double sin_part = std::exp(base + x * y * std::exp(-2 * r)) * std::sin(s * (y * theta_a + x * theta_b));
    const double cos_part = std::exp(base + c2 * x * y) * std::cos(s * (y * theta_a - x * theta_b));
    return (sin_part + cos_part) / kPi;
}

struct QuadrantProbs {
    double p_pp = 0, p_pm = 0, p_mp = 0, p_mm = 0;
    double normalization = 1.0;    // positive-part mass of the raw density
    double clipped_mass = 0.0;     // |negative-part mass| of the raw density
    bool clipping_warning = false; // clipped_mass > kClipWarning

    static constexpr double kClipWarning = 1e-3;

    double sum() const { return p_pp + p_pm + p_mp + p_mm; }
    double correlation() const { return p_pp + p_mm - p_pm - p_mp; }
};

/// Discretization of the physical density.
///
/// Extent is `sigmas` marginal standard deviations of the Gaussian envelope.
/// The step resolves both the narrow anti-diagonal envelope width and the
/// fastest oscillation expected for |theta|/d <= max_angle_over_d.
struct PhysicalGrid {
    double sigmas = 8.0;
    std::size_t min_nodes = 801;
    double steps_per_width = 4.0;
    double steps_per_wavelength = 16.0;
    double max_angle_over_d = 1.5;
    double band_cutoff = 1e-17;   // envelope below this fraction of its peak is dropped

    /// Axis (same for x and y) for a given squeezing and variant.
    Axis axis(double r, PdfVariant variant) const {
        const double k = detail::diagonal_coefficient(r);
        const double c = std::max(detail::cosine_cross_coefficient(r, variant), std::exp(-2 * r));
        const double var_x = 2 * k / (4 * k * k - c * c);
        const double extent = sigmas * std::sqrt(var_x);
        const double narrow = 1.0 / std::sqrt(2 * k + c);
        const double omega = std::sqrt(2.0) * 2.0 * max_angle_over_d;
        double step = narrow / steps_per_width;
        if (omega > 0) step = std::min(step, 2 * kPi / omega / steps_per_wavelength);
        step = std::min(step, 2 * extent / static_cast<double>(min_nodes - 1));
        return Axis::covering(extent, step);
    }
};

/// Precomputed envelope on the band of grid nodes where the density is not
/// negligible. Evaluating a new angle pair then costs a few multiplies per
/// node. Immutable after construction; safe to share between threads.
class PhysicalDensityTable {
public:
    PhysicalDensityTable(double r, double d, PdfVariant variant, const PhysicalGrid& grid = {})
        : r_(r), d_(d), max_ratio_(grid.max_angle_over_d), variant_(variant), axis_(grid.axis(r, variant)) {
        if (!(d > 0)) throw InvalidArgument("physical density: d must be positive");
        if (!(r >= 0)) throw InvalidArgument("physical density: r must be >= 0");
        const double k = detail::diagonal_coefficient(r);
        const double c2 = detail::cosine_cross_coefficient(r, variant);
        const double c1 = std::exp(-2 * r);
        const double log_cut = std::log(grid.band_cutoff);
        const std::size_t n = axis_.count();
        nodes_.reserve(n * 64);
        row_start_.assign(n + 1, 0);
        for (std::size_t i = 0; i < n; ++i) {
            row_start_[i] = nodes_.size();
            const double x = axis_.node(i);
            for (std::size_t j = 0; j < n; ++j) {
                const double y = axis_.node(j);
                const double q = -k * (x * x + y * y);
                const double l1 = q + c1 * x * y;
                const double l2 = q + c2 * x * y;
                if (std::max(l1, l2) < log_cut) continue;
                nodes_.push_back({static_cast<std::uint32_t>(j), std::exp(l1 - r) / kPi, std::exp(l2 - r) / kPi});
            }
        }
        row_start_[n] = nodes_.size();
    }

    const Axis& axis() const { return axis_; }
    double r() const { return r_; }
    double d() const { return d_; }
    /// Largest |theta|/d the grid resolves.
    double max_angle_over_d() const { return max_ratio_; }
    PdfVariant variant() const { return variant_; }
    std::size_t band_size() const { return nodes_.size(); }

    /// Quadrant probabilities of the clipped, renormalized density, read out
    /// through detectors of efficiency eta.
    QuadrantProbs quadrant_probs(double theta_a, double theta_b, double eta = 1.0) const {
        if (!(eta > 0 && eta <= 1)) throw InvalidArgument("quadrant_probs: eta must lie in (0, 1]");
        const std::size_t n = axis_.count();
        const double s = std::sqrt(2.0) / d_;
        // sin(a_y + b_x) and cos(a_y - b_x) by angle addition, a_y = s y theta_a, b_x = s x theta_b
        std::vector<double> sa(n), ca(n), sb(n), cb(n);
        for (std::size_t i = 0; i < n; ++i) {
            const double t = axis_.node(i);
            sa[i] = std::sin(s * t * theta_a);
            ca[i] = std::cos(s * t * theta_a);
            sb[i] = std::sin(s * t * theta_b);
            cb[i] = std::cos(s * t * theta_b);
        }
        const auto w = simpson_weights(axis_, 0, n - 1);
        // probability that a node reads '+' on its axis
        std::vector<double> plus(n);
        if (eta == 1.0) {
            for (std::size_t i = 0; i < n; ++i) {
                plus[i] = i > axis_.half ? 1.0 : (i == axis_.half ? 0.5 : 0.0);
            }
        } else {
            const double se = std::sqrt(eta), sigma = std::sqrt((1 - eta) / 2);
            for (std::size_t i = 0; i < n; ++i) plus[i] = 0.5 * std::erfc(-se * axis_.node(i) / (sigma * std::sqrt(2.0)));
        }
        // At eta = 1 the split at x = 0 uses the half-axis Simpson rules, whose
        // weights differ from the full-axis ones only at the centre node.
        const auto wm = simpson_weights(axis_, 0, axis_.half);
        const auto wp = simpson_weights(axis_, axis_.half, n - 1);

        double pp = 0, pm = 0, mp = 0, mm = 0, neg = 0, pos_riemann = 0;
        for (std::size_t i = 0; i < n; ++i) {
            double rp = 0, rm = 0;   // row sums weighted by y '+' / '-' readout
            for (std::size_t idx = row_start_[i]; idx < row_start_[i + 1]; ++idx) {
                const auto& nd = nodes_[idx];
                const std::size_t j = nd.j;
                const double v = nd.e_sin * (sa[j] * cb[i] + ca[j] * sb[i]) + nd.e_cos * (ca[j] * cb[i] + sa[j] * sb[i]);
                if (v <= 0) {
                    neg -= v;
                    continue;
                }
                pos_riemann += v;
                if (eta == 1.0) {
                    rp += wp[j] * v;
                    rm += wm[j] * v;
                } else {
                    rp += w[j] * plus[j] * v;
                    rm += w[j] * (1 - plus[j]) * v;
                }
            }
            double xp, xm;
            if (eta == 1.0) {
                xp = wp[i];
                xm = wm[i];
            } else {
                xp = w[i] * plus[i];
                xm = w[i] * (1 - plus[i]);
            }
            pp += xp * rp;
            pm += xp * rm;
            mp += xm * rp;
            mm += xm * rm;
        }
        QuadrantProbs q;
        const double z = pp + pm + mp + mm;
        q.p_pp = pp / z;
        q.p_pm = pm / z;
        q.p_mp = mp / z;
        q.p_mm = mm / z;
        q.normalization = pos_riemann * axis_.step * axis_.step;
        q.clipped_mass = neg * axis_.step * axis_.step;
        q.clipping_warning = q.clipped_mass > QuadrantProbs::kClipWarning;
        return q;
    }

    /// Dense clipped density (not yet renormalized) on this table's grid.
    GridPdf grid_pdf(double theta_a, double theta_b) const {
        GridPdf g{axis_, axis_, std::vector<double>(axis_.count() * axis_.count(), 0.0), 1.0, 0.0};
        const double s = std::sqrt(2.0) / d_;
        double neg = 0;
        for (std::size_t i = 0; i < axis_.count(); ++i) {
            const double x = axis_.node(i);
            for (std::size_t idx = row_start_[i]; idx < row_start_[i + 1]; ++idx) {
                const auto& nd = nodes_[idx];
                const double y = axis_.node(nd.j);
                const double v = nd.e_sin * std::sin(s * (y * theta_a + x * theta_b)) +
                                 nd.e_cos * std::cos(s * (y * theta_a - x * theta_b));
                if (v < 0) neg -= v;
                g.at(i, nd.j) = std::max(v, 0.0);
            }
        }
        g.clipped_mass = neg * axis_.step * axis_.step;
        return g;
    }

private:
    struct Node {
        std::uint32_t j;
        double e_sin;   // envelope of the sine part
        double e_cos;   // envelope of the cosine part
    };

    double r_, d_, max_ratio_;
    PdfVariant variant_;
    Axis axis_;
    std::vector<Node> nodes_;
    std::vector<std::size_t> row_start_;
};

/// Clipped, renormalized physical density on a dense grid with explicit
/// loss smoothing applied. Used for dumps and cross-checks; the optimizer
/// goes through PhysicalDensityTable::quadrant_probs.
inline GridPdf physical_grid_pdf(double theta_a, double theta_b, double r, double d, double eta, PdfVariant variant,
                                 const PhysicalGrid& grid = {}) {
    PhysicalDensityTable table(r, d, variant, grid);
    GridPdf g = table.grid_pdf(theta_a, theta_b);
    g.normalize();
    return smooth_inefficiency(g, eta);
}

inline QuadrantProbs quadrant_probs(double theta_a, double theta_b, double r, double d, double eta,
                                    PdfVariant variant, const PhysicalGrid& grid = {}) {
    return PhysicalDensityTable(r, d, variant, grid).quadrant_probs(theta_a, theta_b, eta);
}

inline double corr_physical(double theta_a, double theta_b, double r, double d, double eta, PdfVariant variant,
                            const PhysicalGrid& grid = {}) {
    return quadrant_probs(theta_a, theta_b, r, d, eta, variant, grid).correlation();
}

/// Correlation evaluator sharing one precomputed table across calls. Angles
/// the grid does not resolve are reported as domain errors.
inline CorrelationFn physical_evaluator(std::shared_ptr<const PhysicalDensityTable> table, double eta) {
    return [table = std::move(table), eta](double a, double b) -> Result<double> {
        const double lim = table->max_angle_over_d() * table->d() * (1 + 1e-12);
        if (std::abs(a) > lim || std::abs(b) > lim) {
            return domain_error("physical: |theta|/d beyond the resolved range");
        }
        return table->quadrant_probs(a, b, eta).correlation();
    };
}

}  // namespace bellgauss

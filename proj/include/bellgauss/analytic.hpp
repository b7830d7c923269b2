#pragma once

// Closed-form correlation functions for ideal (qubit-like) local rotations and
// the CHSH combination built from any correlation evaluator.

#include <cmath>
#include <functional>
#include <string>

#include "model.hpp"

namespace bellgauss {

/// Correlation evaluator: (theta_A, theta_B) -> C or domain-error.
using CorrelationFn = std::function<Result<double>(double, double)>;

struct DenominatorGuard {
    double min_denominator = 1e-6;
};

/// Values beyond this are not correlations of any probability table.
inline constexpr double kCorrelationSlack = 1e-9;

/// Third denominator term of the ideal-rotation correlation.
///   SinhTerm: (sin4a + sin4b) * sinh r, the form as printed.
///   SechTerm: (sin4a + sin4b) / cosh r, the form the coherent-basis oracle
///             reproduces and the V = 1 limit of the thermal formula.
enum class DenominatorForm { SinhTerm, SechTerm };

inline const char* to_string(DenominatorForm f) {
    return f == DenominatorForm::SinhTerm ? "sinh" : "sech";
}

/// Arctan factor with detector efficiency folded in. Reduces to
/// arctan(sinh r) at eta = 1 because 1 + 2 e^r sinh r = e^{2r}.
inline double efficiency_arctan(double r, double eta) {
    if (eta == 1.0) return std::atan(std::sinh(r));
    const double u = eta * std::exp(r) * std::sinh(r);
    return std::atan(u / std::sqrt(1.0 + 2.0 * u));
}

namespace detail {

inline Result<double> guarded_ratio(double numerator, double denominator_over_pi,
                                    const DenominatorGuard& guard, const char* what) {
    if (!(denominator_over_pi >= guard.min_denominator)) {
        return domain_error(std::string(what) + ": denominator " + std::to_string(denominator_over_pi) +
                            " below guard");
    }
    const double c = numerator / (kPi * denominator_over_pi);
    if (!(std::abs(c) <= 1.0 + kCorrelationSlack)) {
        return domain_error(std::string(what) + ": |C| = " + std::to_string(std::abs(c)) + " exceeds 1");
    }
    return c;
}

}  // namespace detail

/// Correlation for the split squeezed vacuum with ideal rotations and
/// efficiency eta applied through the arctan factor only.
inline Result<double> corr_ideal(double theta_a, double theta_b, double r, double eta = 1.0,
                                 DenominatorForm form = DenominatorForm::SinhTerm,
                                 DenominatorGuard guard = {}) {
    if (!(r >= 0) || !(eta > 0 && eta <= 1)) {
        return Error{ErrorCode::InvalidParameter, "corr_ideal: requires r >= 0 and 0 < eta <= 1"};
    }
    const double sa = std::sin(4 * theta_a);
    const double sb = std::sin(4 * theta_b);
    const double third = form == DenominatorForm::SinhTerm ? std::sinh(r) : 1.0 / std::cosh(r);
    const double num = 2.0 * efficiency_arctan(r, eta) * (std::cos(4 * theta_a) * std::cos(4 * theta_b));
    const double den = 1.0 + sa * sb + (sa + sb) * third;
    return detail::guarded_ratio(num, den, guard, "corr_ideal");
}

/// Squeezed thermal resource, evaluated exactly as printed.
inline Result<double> corr_thermal(double theta_a, double theta_b, double r, double v,
                                   DenominatorGuard guard = {}) {
    if (!(r >= 0) || !(v >= 1)) {
        return Error{ErrorCode::InvalidParameter, "corr_thermal: requires r >= 0 and V >= 1"};
    }
    const double sa = std::sin(4 * theta_a);
    const double sb = std::sin(4 * theta_b);
    const double arg = (std::exp(r) - v * std::exp(-r)) / (2.0 * std::sqrt(v));
    const double num = 2.0 * std::atan(arg) * (std::cos(4 * theta_a) * std::cos(4 * theta_b));
    const double den = 1.0 + sa * sb / v + 2.0 * (sa + sb) / std::sqrt(v * v + 1.0 + 2.0 * v * std::cosh(2 * r));
    return detail::guarded_ratio(num, den, guard, "corr_thermal");
}

/// Two-mode squeezed vacuum: the ideal formula at doubled squeezing.
inline Result<double> corr_tmss(double theta_a, double theta_b, double r, double eta = 1.0,
                                DenominatorForm form = DenominatorForm::SinhTerm,
                                DenominatorGuard guard = {}) {
    return corr_ideal(theta_a, theta_b, 2.0 * r, eta, form, guard);
}

/// C(a,b) + C(a',b) + C(a,b') - C(a',b').
inline Result<double> chsh(const CorrelationFn& corr, const AngleQuad& q) {
    const Result<double> c[4] = {corr(q.theta_a, q.theta_b), corr(q.theta_a2, q.theta_b),
                                 corr(q.theta_a, q.theta_b2), corr(q.theta_a2, q.theta_b2)};
    for (const auto& ci : c) {
        if (!ci) return ci.error();
    }
    return *c[0] + *c[1] + *c[2] - *c[3];
}

/// (2/pi) arcsin(tanh r): sign correlation of a zero-mean bivariate Gaussian
/// whose correlation coefficient is tanh r. Equal to (2/pi) arctan(sinh r).
inline double orthant_correlation(double r) { return 2.0 / kPi * std::asin(std::tanh(r)); }

}  // namespace bellgauss

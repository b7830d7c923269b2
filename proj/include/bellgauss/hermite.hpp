#pragma once

#include <cmath>
#include <span>
#include <vector>

#include "model.hpp"

namespace bellgauss {

/// Harmonic-oscillator eigenfunctions psi_0..psi_n at x, vacuum variance 1/2:
///   psi_0(x) = pi^{-1/4} exp(-x^2/2)
///   psi_{k+1}(x) = sqrt(2/(k+1)) x psi_k(x) - sqrt(k/(k+1)) psi_{k-1}(x)
///
/// The recurrence runs on a rescaled mantissa with the Gaussian factor kept in
/// log form, so large |x| and large n neither underflow early nor overflow.
inline void oscillator_eigenfunctions(double x, std::span<double> out) {
    if (out.empty()) return;
    const double log_psi0 = -0.5 * x * x - 0.25 * std::log(kPi);
    double log_scale = log_psi0;   // psi_k = v_k * exp(log_scale)
    double prev = 0.0;
    double cur = 1.0;
    out[0] = std::exp(log_psi0);
    for (std::size_t k = 0; k + 1 < out.size(); ++k) {
        const double kk = static_cast<double>(k);
        double next = std::sqrt(2.0 / (kk + 1.0)) * x * cur - std::sqrt(kk / (kk + 1.0)) * prev;
        prev = cur;
        cur = next;
        const double mag = std::abs(cur);
        if (mag > 1e150 || (mag < 1e-150 && mag > 0)) {
            const double s = std::log(mag);
            cur /= mag;
            prev /= mag;
            log_scale += s;
        }
        out[k + 1] = cur * std::exp(log_scale);
    }
}

inline std::vector<double> oscillator_eigenfunctions(double x, std::size_t count) {
    std::vector<double> v(count);
    oscillator_eigenfunctions(x, v);
    return v;
}

}  // namespace bellgauss

#pragma once

// Truncated photon-number simulation of the physical (Kerr + displacement)
// rotations acting on the split squeezed vacuum, and the exact homodyne
// statistics of the result.

#include <cmath>
#include <complex>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <unsupported/Eigen/MatrixFunctions>

#include "hermite.hpp"
#include "model.hpp"
#include "quadrature.hpp"

namespace bellgauss {

using cplx = std::complex<double>;

inline constexpr double kKerrPhase = kPi / 2;

/// Norm lost to truncation exceeded the allowed tolerance.
class CutoffError : public std::runtime_error {
public:
    CutoffError(const std::string& what, double deficit)
        : std::runtime_error(what + ": norm deficit " + std::to_string(deficit)), deficit_(deficit) {}
    double deficit() const { return deficit_; }
    ErrorCode code() const { return ErrorCode::CutoffTooSmall; }

private:
    double deficit_;
};

enum class Mode { A, B };

struct SingleModeState {
    Eigen::VectorXcd amp;

    int cutoff() const { return static_cast<int>(amp.size()) - 1; }
    double norm2() const { return amp.squaredNorm(); }
};

/// Two-mode state; amp(n, m) is the amplitude of |n>_A |m>_B.
struct FockVector {
    Eigen::MatrixXcd amp;
    double truncation_tol = 1e-8;

    int cutoff() const { return static_cast<int>(amp.rows()) - 1; }
    double norm2() const { return amp.squaredNorm(); }
    double deficit() const { return 1.0 - norm2(); }
};

namespace detail {

inline void check_norm(const FockVector& s, const char* what) {
    if (s.deficit() > s.truncation_tol) throw CutoffError(what, s.deficit());
}

}  // namespace detail

inline SingleModeState fock_state(int n, int cutoff) {
    if (n < 0 || n > cutoff) throw InvalidArgument("fock_state: n outside [0, cutoff]");
    SingleModeState s{Eigen::VectorXcd::Zero(cutoff + 1)};
    s.amp(n) = 1.0;
    return s;
}

/// |beta> = e^{-|beta|^2/2} sum beta^n / sqrt(n!) |n>, truncated.
inline SingleModeState coherent_fock(cplx beta, int cutoff) {
    SingleModeState s{Eigen::VectorXcd(cutoff + 1)};
    cplx c = std::exp(-0.5 * std::norm(beta));
    for (int n = 0; n <= cutoff; ++n) {
        s.amp(n) = c;
        c *= beta / std::sqrt(static_cast<double>(n + 1));
    }
    return s;
}

/// S(r)|0> with S(r) = exp[(r/2)(a^dag^2 - a^2)]: amplitudes
/// (tanh r)^k sqrt((2k)!) / (2^k k!) / sqrt(cosh r) on |2k>.
inline SingleModeState squeezed_vacuum_fock(double r, int cutoff, double truncation_tol = 1e-8) {
    if (!(r >= 0)) throw InvalidArgument("squeezed_vacuum_fock: r must be >= 0");
    const double sh = std::sinh(r);
    if (cutoff < 4 * sh * sh + 10) throw InvalidArgument("squeezed_vacuum_fock: cutoff below 4 sinh^2 r + 10");
    SingleModeState s{Eigen::VectorXcd::Zero(cutoff + 1)};
    const double t = std::tanh(r);
    double c = 1.0 / std::sqrt(std::cosh(r));
    for (int n = 0; n <= cutoff; n += 2) {
        s.amp(n) = c;
        c *= t * std::sqrt((n + 1.0) / (n + 2.0));
    }
    const double deficit = 1.0 - s.norm2();
    if (deficit > truncation_tol) throw CutoffError("squeezed_vacuum_fock", deficit);
    return s;
}

inline FockVector tensor(const SingleModeState& a, const SingleModeState& b, double truncation_tol = 1e-8) {
    if (a.cutoff() != b.cutoff()) throw InvalidArgument("tensor: cutoffs differ");
    return {a.amp * b.amp.transpose(), truncation_tol};
}

/// exp[zeta/2 (a^dag b - a b^dag)]. In the Heisenberg picture
/// a^dag -> a^dag cos(zeta/2) - b^dag sin(zeta/2) and
/// b^dag -> b^dag cos(zeta/2) + a^dag sin(zeta/2), so
/// U|n, m> = (c a^dag - s b^dag)^n (c b^dag + s a^dag)^m |0> / sqrt(n! m!).
/// The images are built block by block in total photon number; amplitude
/// pushed beyond the cutoff is dropped and shows up as norm deficit.
inline FockVector apply_beam_splitter(const FockVector& state, double zeta) {
    const int n_max = state.cutoff();
    const double c = std::cos(zeta / 2), s = std::sin(zeta / 2);
    FockVector out{Eigen::MatrixXcd::Zero(n_max + 1, n_max + 1), state.truncation_tol};

    int k_max = 0;
    for (int n = 0; n <= n_max; ++n) {
        for (int m = 0; m <= n_max; ++m) {
            if (state.amp(n, m) != cplx(0.0)) k_max = std::max(k_max, n + m);
        }
    }
    // prev[n][j]: coefficient of |j, K-1-j> in U|n, K-1-n>
    std::vector<std::vector<double>> prev{{1.0}}, cur;
    for (int k = 0; k <= k_max; ++k) {
        if (k > 0) {
            cur.assign(k + 1, std::vector<double>(k + 1, 0.0));
            for (int n = 0; n <= k; ++n) {
                // U|n, k-n> from U|n-1, k-n> via (c a^dag - s b^dag)/sqrt(n),
                // or from U|0, k-1> via (c b^dag + s a^dag)/sqrt(k) when n = 0
                const auto& src = prev[n > 0 ? n - 1 : 0];
                const double ca = n > 0 ? c : s, cb = n > 0 ? -s : c;
                const double scale = 1.0 / std::sqrt(static_cast<double>(n > 0 ? n : k));
                auto& dst = cur[n];
                for (int j = 0; j < k; ++j) {
                    const double v = src[j] * scale;
                    if (v == 0.0) continue;
                    dst[j + 1] += ca * std::sqrt(j + 1.0) * v;        // a^dag on |j, k-1-j>
                    dst[j] += cb * std::sqrt(static_cast<double>(k - j)) * v;   // b^dag
                }
            }
            prev.swap(cur);
        }
        for (int n = std::max(0, k - n_max); n <= std::min(k, n_max); ++n) {
            const cplx a = state.amp(n, k - n);
            if (a == cplx(0.0)) continue;
            const auto& img = prev[n];
            for (int j = std::max(0, k - n_max); j <= std::min(k, n_max); ++j) out.amp(j, k - j) += a * img[j];
        }
    }
    return out;
}

/// e^{-i phase n^2} on the selected mode.
inline FockVector apply_kerr(const FockVector& state, Mode mode, double phase = kKerrPhase) {
    FockVector out = state;
    for (int n = 0; n <= state.cutoff(); ++n) {
        const double q = static_cast<double>(n) * n;
        const cplx f = std::polar(1.0, -phase * q);
        if (mode == Mode::A) out.amp.row(n) *= f;
        else out.amp.col(n) *= f;
    }
    return out;
}

inline SingleModeState apply_kerr(const SingleModeState& state, double phase = kKerrPhase) {
    SingleModeState out = state;
    for (int n = 0; n <= state.cutoff(); ++n) out.amp(n) *= std::polar(1.0, -phase * n * static_cast<double>(n));
    return out;
}

/// <k|D(gamma)|n> for k, n <= cutoff, exact (no truncation error): column n
/// is (a^dag - gamma^*)^n |gamma> / sqrt(n!), built recursively.
inline Eigen::MatrixXcd displacement_matrix(cplx gamma, int cutoff) {
    Eigen::MatrixXcd d(cutoff + 1, cutoff + 1);
    d.col(0) = coherent_fock(gamma, cutoff).amp;
    const cplx gc = std::conj(gamma);
    for (int n = 1; n <= cutoff; ++n) {
        const double inv = 1.0 / std::sqrt(static_cast<double>(n));
        d(0, n) = -gc * d(0, n - 1) * inv;
        for (int k = 1; k <= cutoff; ++k) d(k, n) = (std::sqrt(static_cast<double>(k)) * d(k - 1, n - 1) - gc * d(k, n - 1)) * inv;
    }
    return d;
}

/// Applies a single-mode operator (matrix in the number basis) to one mode.
inline FockVector apply_single_mode(const FockVector& state, Mode mode, const Eigen::MatrixXcd& op) {
    FockVector out = state;
    if (mode == Mode::A) out.amp = op * state.amp;
    else out.amp = state.amp * op.transpose();
    return out;
}

inline FockVector apply_displacement(const FockVector& state, Mode mode, cplx amp) {
    FockVector out = apply_single_mode(state, mode, displacement_matrix(amp, state.cutoff()));
    detail::check_norm(out, "apply_displacement");
    return out;
}

/// Kerr, displacement by i theta / d, Kerr.
inline FockVector physical_rotation(const FockVector& state, Mode mode, double theta, double d,
                                    double phase = kKerrPhase) {
    if (!(d > 0)) throw InvalidArgument("physical_rotation: d must be positive");
    FockVector s = apply_kerr(state, mode, phase);
    s = apply_displacement(s, mode, cplx(0.0, theta / d));
    return apply_kerr(s, mode, phase);
}

/// exp[(z/2)(a^dag^2 - a^2)] restricted to photon numbers <= cutoff. The
/// exponential is taken at a larger working cutoff and then cropped.
inline Eigen::MatrixXcd squeeze_operator(double z, int cutoff, int work_cutoff = -1) {
    if (work_cutoff < cutoff) work_cutoff = 2 * cutoff + 40;
    Eigen::MatrixXd g = Eigen::MatrixXd::Zero(work_cutoff + 1, work_cutoff + 1);
    for (int n = 0; n + 2 <= work_cutoff; ++n) {
        const double v = std::sqrt((n + 1.0) * (n + 2.0)) * z / 2;
        g(n + 2, n) = v;    // a^dag^2
        g(n, n + 2) = -v;   // -a^2
    }
    const Eigen::MatrixXd u = g.exp();
    return u.topLeftCorner(cutoff + 1, cutoff + 1).cast<cplx>();
}

/// exp[z (a^dag b^dag - a b)] applied to a two-mode state, one block of
/// fixed n_A - n_B at a time, each exponentiated at a working cutoff.
inline FockVector apply_two_mode_squeeze(const FockVector& state, double z, int work_cutoff = -1) {
    const int n_max = state.cutoff();
    if (work_cutoff < n_max) work_cutoff = 2 * n_max + 40;
    FockVector out{Eigen::MatrixXcd::Zero(n_max + 1, n_max + 1), state.truncation_tol};
    for (int diff = -work_cutoff; diff <= work_cutoff; ++diff) {
        // basis |j + max(diff,0), j + max(-diff,0)>, j = 0..len-1
        const int oa = std::max(diff, 0), ob = std::max(-diff, 0);
        const int len = work_cutoff - std::max(oa, ob) + 1;
        if (len <= 0) continue;
        bool any = false;
        for (int j = 0; j < len && j + oa <= n_max && j + ob <= n_max; ++j) {
            if (state.amp(j + oa, j + ob) != cplx(0.0)) any = true;
        }
        if (!any) continue;
        Eigen::MatrixXd g = Eigen::MatrixXd::Zero(len, len);
        for (int j = 0; j + 1 < len; ++j) {
            const double v = z * std::sqrt((j + oa + 1.0) * (j + ob + 1.0));
            g(j + 1, j) = v;
            g(j, j + 1) = -v;
        }
        const Eigen::MatrixXd u = g.exp();
        for (int i = 0; i < len && i + oa <= n_max && i + ob <= n_max; ++i) {
            cplx acc = 0.0;
            for (int j = 0; j < len && j + oa <= n_max && j + ob <= n_max; ++j) acc += u(i, j) * state.amp(j + oa, j + ob);
            out.amp(i + oa, i + ob) = acc;
        }
    }
    return out;
}

/// |<phi|psi>|^2 / (|phi|^2 |psi|^2).
inline double fidelity(const Eigen::MatrixXcd& a, const Eigen::MatrixXcd& b) {
    const cplx ov = (a.array().conjugate() * b.array()).sum();
    return std::norm(ov) / (a.squaredNorm() * b.squaredNorm());
}

/// Fidelity of the two sides of
///   B(pi/2) S_A(r) |0,0> = S_A(r/2) S_B(r/2) S_AB(r/2) |0,0>
/// with S_j(r) = exp[(r/2)(a^2 - a^dag^2)] and S_AB(r) = exp[r(a^dag b^dag - a b)],
/// on photon numbers <= cutoff. Both sides are built at a working cutoff
/// large enough that the cropped amplitudes are exact.
inline double tmss_identity_fidelity(double r, int cutoff) {
    const int w = 2 * cutoff + 40;
    const FockVector vac = tensor(fock_state(0, w), fock_state(0, w));
    const FockVector lhs = apply_beam_splitter(apply_single_mode(vac, Mode::A, squeeze_operator(-r, w)), kPi / 2);
    FockVector rhs = apply_two_mode_squeeze(vac, r / 2);
    const Eigen::MatrixXcd local = squeeze_operator(-r / 2, w);
    rhs = apply_single_mode(apply_single_mode(rhs, Mode::A, local), Mode::B, local);
    return fidelity(lhs.amp.topLeftCorner(cutoff + 1, cutoff + 1), rhs.amp.topLeftCorner(cutoff + 1, cutoff + 1));
}

// ---------------------------------------------------------------------------
// Homodyne statistics.

/// Oscillator eigenfunctions psi_0..psi_cutoff at each axis node (rows).
inline Eigen::MatrixXd eigenfunction_table(const Axis& ax, int cutoff) {
    Eigen::MatrixXd t(static_cast<Eigen::Index>(ax.count()), cutoff + 1);
    std::vector<double> buf(static_cast<std::size_t>(cutoff) + 1);
    for (std::size_t i = 0; i < ax.count(); ++i) {
        oscillator_eigenfunctions(ax.node(i), buf);
        for (int n = 0; n <= cutoff; ++n) t(static_cast<Eigen::Index>(i), n) = buf[static_cast<std::size_t>(n)];
    }
    return t;
}

/// |sum c_nm psi_n(x) psi_m(y)|^2.
inline double joint_pdf_fock(const FockVector& state, double x, double y) {
    const auto px = oscillator_eigenfunctions(x, static_cast<std::size_t>(state.cutoff()) + 1);
    const auto py = oscillator_eigenfunctions(y, static_cast<std::size_t>(state.cutoff()) + 1);
    const Eigen::Map<const Eigen::VectorXd> vx(px.data(), static_cast<Eigen::Index>(px.size()));
    const Eigen::Map<const Eigen::VectorXd> vy(py.data(), static_cast<Eigen::Index>(py.size()));
    const cplx a = vx.cast<cplx>().dot(state.amp * vy.cast<cplx>());
    return std::norm(a);
}

/// Joint density on a grid (not renormalized; total_mass holds its Simpson mass).
inline GridPdf fock_grid_pdf(const FockVector& state, const Axis& ax) {
    const Eigen::MatrixXd t = eigenfunction_table(ax, state.cutoff());
    const Eigen::MatrixXcd amp = t.cast<cplx>() * state.amp * t.transpose().cast<cplx>();
    GridPdf g{ax, ax, std::vector<double>(ax.count() * ax.count()), 1.0, 0.0};
    for (std::size_t i = 0; i < ax.count(); ++i) {
        for (std::size_t j = 0; j < ax.count(); ++j) {
            g.at(i, j) = std::norm(amp(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)));
        }
    }
    g.total_mass = g.mass();
    return g;
}

// ---------------------------------------------------------------------------
// Oracle for the physical-rotation correlation.

struct FockOracleConfig {
    double truncation_tol = 1e-8;
    double kerr_phase = kKerrPhase;
    int cutoff = 0;              // 0: chosen from r, theta/d and truncation_tol
    double grid_step = 0.05;
    double grid_sigmas = 8.0;
};

/// Smallest cutoff whose squeezed-vacuum tail is below tol, and at least
/// ceil(4 sinh^2 r + 6 |amp|^2 + 20).
inline int fock_cutoff(double r, double max_amp, double tol) {
    const double sh = std::sinh(r);
    int n = static_cast<int>(std::ceil(4 * sh * sh + 6 * max_amp * max_amp + 20));
    const double t = std::tanh(r);
    double c2 = 1.0 / std::cosh(r), acc = 0.0;
    int k = 0;
    while (1.0 - acc > tol * 1e-2 && k < 100000) {
        acc += c2;
        c2 *= t * t * (k + 1.0) / (k + 2.0);
        k += 2;
    }
    return std::max(n, k + static_cast<int>(std::ceil(6 * max_amp * max_amp)) + 10);
}

/// Split squeezed vacuum: squeezed mode A and vacuum B through a 50:50
/// splitter. zeta = -pi/2 yields positively correlated x_A, x_B, matching
/// the coherent-superposition form N int dalpha G |alpha/sqrt2, alpha/sqrt2>.
inline FockVector split_squeezed_vacuum_fock(double r, int cutoff, double truncation_tol = 1e-8) {
    const FockVector in = tensor(squeezed_vacuum_fock(r, cutoff, truncation_tol), fock_state(0, cutoff), truncation_tol);
    FockVector out = apply_beam_splitter(in, -kPi / 2);
    detail::check_norm(out, "split_squeezed_vacuum_fock");
    return out;
}

inline FockVector physical_oracle_state(double theta_a, double theta_b, double r, double d,
                                        const FockOracleConfig& cfg = {}) {
    const double amp = std::max(std::abs(theta_a), std::abs(theta_b)) / d;
    const int n = cfg.cutoff > 0 ? cfg.cutoff : fock_cutoff(r, amp, cfg.truncation_tol);
    FockVector s = split_squeezed_vacuum_fock(r, n, cfg.truncation_tol);
    s = physical_rotation(s, Mode::A, theta_a, d, cfg.kerr_phase);
    return physical_rotation(s, Mode::B, theta_b, d, cfg.kerr_phase);
}

inline Axis physical_oracle_axis(double r, const FockOracleConfig& cfg = {}) {
    return Axis::covering(cfg.grid_sigmas * std::sqrt((std::exp(2 * r) + 1) / 4) + 3.0, cfg.grid_step);
}

/// Normalized joint density of the rotated state.
inline GridPdf physical_oracle_grid_pdf(double theta_a, double theta_b, double r, double d,
                                        const FockOracleConfig& cfg = {}) {
    GridPdf g = fock_grid_pdf(physical_oracle_state(theta_a, theta_b, r, d, cfg), physical_oracle_axis(r, cfg));
    g.normalize();
    return g;
}

inline QuadrantMasses physical_oracle_quadrants(double theta_a, double theta_b, double r, double d, double eta = 1.0,
                                                const FockOracleConfig& cfg = {}) {
    const GridPdf g = physical_oracle_grid_pdf(theta_a, theta_b, r, d, cfg);
    QuadrantMasses q = quadrant_masses(eta == 1.0 ? g : smooth_inefficiency(g, eta));
    const double z = q.total();
    return {q.pp / z, q.pm / z, q.mp / z, q.mm / z};
}

inline double corr_physical_oracle(double theta_a, double theta_b, double r, double d, double eta = 1.0,
                                   const FockOracleConfig& cfg = {}) {
    return physical_oracle_quadrants(theta_a, theta_b, r, d, eta, cfg).correlation();
}

}  // namespace bellgauss

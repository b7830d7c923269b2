#include <catch_amalgamated.hpp>

#include <cmath>

#include "bellgauss/analytic.hpp"
#include "bellgauss/oracle_fock.hpp"
#include "bellgauss/physical.hpp"

using namespace bellgauss;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

namespace {

FockVector random_state(int cutoff, int max_total, unsigned seed) {
    std::srand(seed);
    FockVector s{Eigen::MatrixXcd::Random(cutoff + 1, cutoff + 1)};
    for (int n = 0; n <= cutoff; ++n) {
        for (int m = 0; m <= cutoff; ++m) {
            if (n + m > max_total) s.amp(n, m) = 0;
        }
    }
    s.amp /= s.amp.norm();
    return s;
}

/// Dense exp[zeta/2 (a^dag b - a b^dag)] on the full truncated two-mode space.
Eigen::MatrixXcd dense_beam_splitter(double zeta, int cutoff) {
    const int d = (cutoff + 1) * (cutoff + 1);
    auto idx = [&](int n, int m) { return n * (cutoff + 1) + m; };
    Eigen::MatrixXd g = Eigen::MatrixXd::Zero(d, d);
    for (int n = 0; n <= cutoff; ++n) {
        for (int m = 0; m <= cutoff; ++m) {
            if (n + 1 <= cutoff && m >= 1) g(idx(n + 1, m - 1), idx(n, m)) += zeta / 2 * std::sqrt((n + 1.0) * m);
            if (n >= 1 && m + 1 <= cutoff) g(idx(n - 1, m + 1), idx(n, m)) -= zeta / 2 * std::sqrt(n * (m + 1.0));
        }
    }
    return g.exp().cast<cplx>();
}

}  // namespace

TEST_CASE("squeezed vacuum amplitudes") {
    auto vac = squeezed_vacuum_fock(0.0, 12);
    CHECK(vac.amp(0) == cplx(1.0));
    CHECK(vac.amp.tail(12).norm() == 0.0);

    auto s = squeezed_vacuum_fock(0.7, 60);
    for (int n = 1; n <= 60; n += 2) CHECK(s.amp(n) == cplx(0.0));

    // dense exponential of the generator on a wider space
    const int n40 = 160;
    Eigen::MatrixXd g = Eigen::MatrixXd::Zero(n40 + 1, n40 + 1);
    for (int n = 0; n + 2 <= n40; ++n) {
        g(n + 2, n) = 0.5 * std::sqrt((n + 1.0) * (n + 2.0));
        g(n, n + 2) = -g(n + 2, n);
    }
    const Eigen::VectorXd dense = (g.exp() * Eigen::VectorXd::Unit(n40 + 1, 0)).eval();
    const auto trunc = squeezed_vacuum_fock(1.0, 100);
    CHECK((dense.head(101) - trunc.amp.real()).norm() < 1e-10);
    CHECK((squeeze_operator(1.0, 40, 160).col(0) - trunc.amp.head(41)).norm() < 1e-10);

    const auto wide = squeezed_vacuum_fock(1.0, 100);
    double nbar = 0;
    for (int n = 0; n <= 100; ++n) nbar += n * std::norm(wide.amp(n));
    CHECK_THAT(nbar, WithinRel(std::sinh(1.0) * std::sinh(1.0), 1e-6));
}

TEST_CASE("squeezed vacuum cutoff checks") {
    CHECK_THROWS_AS(squeezed_vacuum_fock(1.0, 12), InvalidArgument);
    CHECK_THROWS_AS(squeezed_vacuum_fock(1.0, 40), CutoffError);
    try {
        squeezed_vacuum_fock(1.0, 40);
    } catch (const CutoffError& e) {
        CHECK(e.code() == ErrorCode::CutoffTooSmall);
        CHECK(e.deficit() > 1e-8);
    }
    CHECK(fock_cutoff(1.0, 0.0, 1e-8) >= 40);
    CHECK_NOTHROW(squeezed_vacuum_fock(1.0, fock_cutoff(1.0, 0.0, 1e-8)));
}

TEST_CASE("beam splitter examples") {
    const int n = 4;
    auto one = apply_beam_splitter(tensor(fock_state(1, n), fock_state(0, n)), kPi / 2);
    CHECK_THAT(one.amp(1, 0).real(), WithinAbs(1 / std::sqrt(2.0), 1e-14));
    CHECK_THAT(one.amp(0, 1).real(), WithinAbs(-1 / std::sqrt(2.0), 1e-14));

    auto vac = apply_beam_splitter(tensor(fock_state(0, n), fock_state(0, n)), 0.9);
    CHECK(vac.amp(0, 0) == cplx(1.0));

    auto hom = apply_beam_splitter(tensor(fock_state(1, n), fock_state(1, n)), kPi / 2);
    CHECK_THAT(hom.amp(2, 0).real(), WithinAbs(1 / std::sqrt(2.0), 1e-12));
    CHECK_THAT(hom.amp(0, 2).real(), WithinAbs(-1 / std::sqrt(2.0), 1e-12));
    CHECK(std::abs(hom.amp(1, 1)) < 1e-12);
}

TEST_CASE("beam splitter matches the dense exponential") {
    const int n = 6;
    const auto u = dense_beam_splitter(0.77, n);
    const auto s = random_state(n, n, 3);
    Eigen::VectorXcd flat(s.amp.size());
    for (int i = 0; i <= n; ++i) {
        for (int j = 0; j <= n; ++j) flat(i * (n + 1) + j) = s.amp(i, j);
    }
    const Eigen::VectorXcd dense = u * flat;
    const auto fast = apply_beam_splitter(s, 0.77);
    for (int i = 0; i <= n; ++i) {
        for (int j = 0; j <= n && i + j <= n; ++j) CHECK(std::abs(fast.amp(i, j) - dense(i * (n + 1) + j)) < 1e-12);
    }
}

TEST_CASE("beam splitter composes and preserves norm") {
    const auto s = random_state(20, 20, 5);
    const auto ab = apply_beam_splitter(apply_beam_splitter(s, 0.4), 1.1);
    const auto direct = apply_beam_splitter(s, 1.5);
    CHECK((ab.amp - direct.amp).norm() < 1e-8);
    CHECK_THAT(direct.norm2(), WithinAbs(1.0, 1e-10));
}

TEST_CASE("Kerr phase") {
    const int n = 40;
    auto s = tensor(coherent_fock(0.8, n), coherent_fock(cplx(0.1, 0.4), n));
    auto k = apply_kerr(s, Mode::A, kPi / 2);
    CHECK(k.amp(0, 3) == s.amp(0, 3));
    CHECK(std::abs(k.amp(1, 2) - cplx(0, -1) * s.amp(1, 2)) < 1e-15);
    CHECK_THAT(k.norm2(), WithinAbs(s.norm2(), 1e-12));

    const auto cat_in = apply_kerr(coherent_fock(2.0, n), kPi / 2);
    const Eigen::VectorXcd cat = (std::polar(1.0, -kPi / 4) * coherent_fock(2.0, n).amp +
                                  std::polar(1.0, kPi / 4) * coherent_fock(-2.0, n).amp) / std::sqrt(2.0);
    const double fid = std::norm(cat.dot(cat_in.amp)) / (cat.squaredNorm() * cat_in.amp.squaredNorm());
    CHECK(fid >= 1 - 1e-8);
}

TEST_CASE("displacement") {
    const int n = 40;
    for (cplx g : {cplx(0.5, 0.0), cplx(1.2, -0.7), cplx(0.0, 2.0)}) {
        const auto d = displacement_matrix(g, n);
        const Eigen::VectorXcd out = d.col(0);
        const auto ref = coherent_fock(g, n).amp;
        CHECK(std::norm(ref.dot(out)) / (ref.squaredNorm() * out.squaredNorm()) >= 1 - 1e-8);

        const auto s = random_state(n, 6, 9);
        const auto moved = apply_displacement(s, Mode::A, g);
        CHECK_THAT(moved.norm2(), WithinAbs(1.0, 1e-10));
        const auto back = apply_displacement(apply_displacement(s, Mode::B, g), Mode::B, -g);
        CHECK((back.amp - s.amp).norm() < 1e-8);
    }
}

TEST_CASE("displacement leakage is reported") {
    FockVector s = tensor(fock_state(10, 12), fock_state(0, 12));
    CHECK_THROWS_AS(apply_displacement(s, Mode::A, cplx(0.0, 2.0)), CutoffError);
}

TEST_CASE("physical rotation") {
    const int n = 60;
    const double beta = 2.0, phi = 0.3;
    const auto in = tensor(coherent_fock(beta, n), fock_state(0, n));
    const auto out = physical_rotation(in, Mode::A, 0.3, 1.0);
    CHECK_THAT(out.norm2(), WithinAbs(in.norm2(), 1e-10));

    // four coherent components
    const cplx i(0, 1);
    auto coh = [&](cplx g) { return coherent_fock(g, n).amp; };
    const Eigen::VectorXcd v = 0.5 * (std::exp(i * phi * beta) * (coh(beta + i * phi) + i * coh(-beta - i * phi)) +
                                      i * std::exp(-i * phi * beta) * (coh(-beta + i * phi) + i * coh(beta - i * phi)));
    const Eigen::VectorXcd got = out.amp.col(0);
    CHECK(std::norm(v.dot(got)) / (v.squaredNorm() * got.squaredNorm()) >= 0.999);

    // theta = 0: parity
    const auto par = physical_rotation(in, Mode::A, 0.0, 1.0);
    const Eigen::VectorXcd flipped = coh(-beta);
    CHECK((par.amp.col(0) - flipped).norm() < 1e-12);
}

TEST_CASE("two-mode squeezing identity") {
    CHECK(tmss_identity_fidelity(1.0, 40) >= 1 - 1e-6);
    CHECK(tmss_identity_fidelity(0.4, 20) >= 1 - 1e-6);
}

TEST_CASE("joint density of simple states") {
    const int n = 40;
    const auto vac = tensor(fock_state(0, n), fock_state(0, n));
    const auto one = tensor(fock_state(1, n), fock_state(0, n));
    for (auto [x, y] : {std::pair{0.0, 0.0}, std::pair{0.7, -1.3}, std::pair{-2.0, 0.4}}) {
        const double g = std::exp(-x * x - y * y) / kPi;
        CHECK_THAT(joint_pdf_fock(vac, x, y), WithinRel(g, 1e-12));
        CHECK_THAT(joint_pdf_fock(one, x, y), WithinAbs(2 * x * x * g, 1e-14));
    }
    const auto s = random_state(n, 30, 13);
    const GridPdf g = fock_grid_pdf(s, Axis::covering(12.0, 0.05));
    CHECK_THAT(g.total_mass, WithinAbs(1.0, 1e-6));
    for (double v : g.density) CHECK(v >= 0.0);
}

TEST_CASE("split squeezed vacuum matches its coherent expansion") {
    const double r = 0.8;
    const auto s = split_squeezed_vacuum_fock(r, fock_cutoff(r, 0, 1e-8));
    const double t = std::tanh(r), norm = 1 / std::sqrt(2 * kPi * std::sinh(r));
    for (auto [n, m] : {std::pair{0, 0}, std::pair{1, 1}, std::pair{2, 0}, std::pair{3, 1}, std::pair{2, 4}}) {
        auto f = [&](double a) {
            return std::exp(-(1 - t) * a * a / (2 * t) - a * a / 2) * std::pow(a / std::sqrt(2.0), n + m);
        };
        const double expected = norm * integrate_real_line(f).value / std::sqrt(std::tgamma(n + 1.0) * std::tgamma(m + 1.0));
        CHECK_THAT(s.amp(n, m).real(), WithinAbs(expected, 1e-10));
        CHECK(std::abs(s.amp(n, m).imag()) < 1e-14);
    }
    CHECK(std::abs(s.amp(1, 0)) < 1e-14);
}

TEST_CASE("physical oracle at zero angles is the orthant formula") {
    for (double r : {0.5, 1.0, 1.5}) {
        CHECK_THAT(corr_physical_oracle(0, 0, r, 1.0), WithinAbs(orthant_correlation(r), 1e-6));
    }
}

TEST_CASE("physical oracle depends on theta/d only") {
    const double c1 = corr_physical_oracle(0.1, -0.05, 1.0, 1.0);
    CHECK_THAT(corr_physical_oracle(0.2, -0.1, 1.0, 2.0), WithinAbs(c1, 1e-6));
    CHECK_THAT(corr_physical_oracle(0.05, -0.025, 1.0, 0.5), WithinAbs(c1, 1e-6));
}

TEST_CASE("physical oracle with lossy detection") {
    CHECK_THAT(corr_physical_oracle(0, 0, 1.0, 1.0, 0.5), WithinAbs(*corr_ideal(0, 0, 1.0, 0.5), 1e-5));
}

TEST_CASE("physical oracle grid is converged") {
    FockOracleConfig coarse;
    coarse.grid_step = 0.1;
    FockOracleConfig big;
    big.cutoff = fock_cutoff(1.0, 0.1, 1e-8) + 30;
    const double c = corr_physical_oracle(0.1, -0.05, 1.0, 1.0);
    CHECK_THAT(corr_physical_oracle(0.1, -0.05, 1.0, 1.0, 1.0, coarse), WithinAbs(c, 1e-6));
    CHECK_THAT(corr_physical_oracle(0.1, -0.05, 1.0, 1.0, 1.0, big), WithinAbs(c, 1e-8));
    CHECK_THAT(c, WithinAbs(0.403960, 1e-5));
}

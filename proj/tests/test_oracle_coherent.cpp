#include <catch_amalgamated.hpp>

#include <cmath>

#include "bellgauss/analytic.hpp"
#include "bellgauss/oracle_coherent.hpp"

using namespace bellgauss;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

namespace {

CoherentOracleConfig with(PairConvention c) {
    CoherentOracleConfig cfg;
    cfg.convention = c;
    return cfg;
}

}  // namespace

TEST_CASE("zero angles reproduce the orthant formula") {
    for (auto conv : {PairConvention::Linear, PairConvention::Representative}) {
        for (double r : {0.5, 1.0, 1.5, 3.0}) {
            CHECK_THAT(corr_ideal_oracle(0, 0, r, 1.0, with(conv)), WithinAbs(orthant_correlation(r), 1e-7));
        }
    }
    CHECK_THAT(corr_ideal_oracle(0, 0, 1.0), WithinAbs(0.5511659713428301, 1e-7));
}

TEST_CASE("resource amplitude is normalized") {
    const Axis ax = ideal_oracle_axis(1.0, 0.1);
    GridPdf g = ideal_oracle_grid_pdf(0, 0, 1.0, ax);
    CHECK_THAT(g.total_mass, WithinAbs(1.0, 1e-7));
    CHECK_THAT(g.mass(), WithinAbs(1.0, 1e-12));
}

TEST_CASE("grid density and pair sums agree") {
    const Axis ax = ideal_oracle_axis(1.5, 0.1);
    const GridPdf g = ideal_oracle_grid_pdf(0.1, -0.05, 1.5, ax);
    CHECK_THAT(quadrant_masses(g).correlation(), WithinAbs(corr_ideal_oracle(0.1, -0.05, 1.5), 1e-5));
    CHECK_THAT(quadrant_masses(smooth_inefficiency(g, 0.7)).correlation(),
               WithinAbs(corr_ideal_oracle(0.1, -0.05, 1.5, 0.7), 1e-5));
}

TEST_CASE("pointwise amplitude matches the grid") {
    const Axis ax = Axis::covering(6.0, 0.5);
    GridPdf g = ideal_oracle_grid_pdf(0.12, 0.03, 1.0, ax);
    const double scale = g.total_mass;
    for (std::size_t i : {3u, 10u, 14u}) {
        for (std::size_t j : {5u, 12u}) {
            const double a = amplitude_ideal(ax.node(i), ax.node(j), 0.12, 0.03, 1.0);
            CHECK_THAT(a * a / scale, WithinRel(g.at(i, j), 1e-10));
        }
    }
}

TEST_CASE("amplitude is symmetric under mode swap") {
    for (auto conv : {PairConvention::Linear, PairConvention::Representative}) {
        const auto cfg = with(conv);
        CHECK_THAT(amplitude_ideal(0.3, -1.1, 0.07, -0.2, 1.2, cfg),
                   WithinRel(amplitude_ideal(-1.1, 0.3, -0.2, 0.07, 1.2, cfg), 1e-12));
        CHECK_THAT(corr_ideal_oracle(0.07, -0.12, 2.0, 1.0, cfg),
                   WithinAbs(corr_ideal_oracle(-0.12, 0.07, 2.0, 1.0, cfg), 1e-12));
    }
}

TEST_CASE("rotation angle has period pi/2") {
    for (auto conv : {PairConvention::Linear, PairConvention::Representative}) {
        const auto cfg = with(conv);
        const double c = corr_ideal_oracle(0.07, -0.12, 2.0, 1.0, cfg);
        CHECK_THAT(corr_ideal_oracle(0.07 + kPi / 2, -0.12, 2.0, 1.0, cfg), WithinAbs(c, 1e-6));
        CHECK_THAT(corr_ideal_oracle(0.07, -0.12 - kPi / 2, 2.0, 1.0, cfg), WithinAbs(c, 1e-6));
    }
}

TEST_CASE("theta = pi/8 gives zero correlation under the linear convention") {
    for (double b : {-0.2, 0.0, 0.1, 0.3}) {
        CHECK(std::abs(corr_ideal_oracle(kPi / 8, b, 2.0)) < 1e-10);
        CHECK(std::abs(corr_ideal_oracle(b, kPi / 8, 1.0)) < 1e-10);
    }
    // the representative convention does not cancel
    CHECK_THAT(corr_ideal_oracle(kPi / 8, 0.1, 2.0, 1.0, with(PairConvention::Representative)),
               WithinAbs(0.3488, 1e-3));
}

TEST_CASE("linear convention reproduces the sech closed form") {
    const double angles[] = {-0.2, -0.1, 0.0, 0.1, 0.2};
    int compared = 0;
    for (double r : {0.5, 1.0, 2.0, 3.0}) {
        for (double a : angles) {
            for (double b : angles) {
                auto closed = corr_ideal(a, b, r, 1.0, DenominatorForm::SechTerm);
                if (!closed) continue;
                ++compared;
                CHECK_THAT(corr_ideal_oracle(a, b, r), WithinAbs(*closed, 1e-6));
            }
        }
    }
    CHECK(compared > 80);
}

TEST_CASE("published maximizing angles") {
    // at (0.061, 0.182), r = 4 the oracle and the printed sinh form disagree
    const double oracle = corr_ideal_oracle(0.061, 0.182, 4.0);
    CHECK_THAT(oracle, WithinAbs(0.592570, 1e-5));
    CHECK_THAT(*corr_ideal(0.061, 0.182, 4.0, 1.0, DenominatorForm::SechTerm), WithinAbs(oracle, 1e-6));
    CHECK_THAT(*corr_ideal(0.061, 0.182, 4.0), WithinAbs(0.027304, 1e-5));
}

TEST_CASE("lossy detection matches the arctan substitution") {
    for (double eta : {0.05, 0.5, 0.9}) {
        CHECK_THAT(corr_ideal_oracle(0, 0, 1.0, eta), WithinAbs(*corr_ideal(0, 0, 1.0, eta), 1e-7));
    }
    const Axis ax = ideal_oracle_axis(1.0, 0.1);
    const GridPdf g = ideal_oracle_grid_pdf(0, 0, 1.0, ax);
    CHECK_THAT(quadrant_masses(smooth_inefficiency(g, 0.5)).correlation(), WithinAbs(*corr_ideal(0, 0, 1.0, 0.5), 1e-5));
}

TEST_CASE("alpha quadrature is converged") {
    CoherentOracleConfig fine;
    fine.alpha_step = 0.1;
    CHECK_THAT(corr_ideal_oracle(0.13, -0.04, 2.5, 1.0, fine), WithinAbs(corr_ideal_oracle(0.13, -0.04, 2.5), 1e-9));
    CoherentOracleConfig wide;
    wide.alpha_sigmas = 8.0;
    CHECK_THAT(corr_ideal_oracle(0.13, -0.04, 2.5, 1.0, wide), WithinAbs(corr_ideal_oracle(0.13, -0.04, 2.5), 1e-9));
}

TEST_CASE("oracle rejects tiny squeezing") {
    CHECK_THROWS_AS(corr_ideal_oracle(0, 0, 0.01), InvalidArgument);
    CHECK_THROWS_AS(amplitude_ideal(0, 0, 0, 0, 0.0), InvalidArgument);
}

TEST_CASE("thermal weight is a normalized density") {
    const double r = 0.3, v = 4.0, c = 0.2;
    auto inner = [&](double ar) {
        return integrate_real_line([&](double ai) { return thermal_weight(r, v, c, ar + c, ai); }).value;
    };
    CHECK_THAT(integrate_real_line(inner).value, WithinAbs(1.0, 1e-8));
}

TEST_CASE("component half masses add to the component norm") {
    const std::complex<double> a(0.4, -0.7);
    for (double t : {0.0, 0.1, 0.3}) {
        const double sum = component_half_mass(t, a, 1) + component_half_mass(t, a, -1);
        CHECK_THAT(sum, WithinAbs(1 + std::sin(4 * t) * std::exp(-std::norm(a)), 1e-14));
        // direct integration of |a <x|beta> + b <x|-beta>|^2 over x > 0
        const auto co = pair_coefficients(t, 1, PairConvention::Linear);
        auto f = [&](double x) {
            return std::norm(co.a * coherent_overlap(x, a / std::sqrt(2.0)) + co.b * coherent_overlap(x, -a / std::sqrt(2.0)));
        };
        CHECK_THAT(integrate_half_line(f).value, WithinAbs(component_half_mass(t, a, 1), 1e-9));
    }
}

TEST_CASE("thermal oracle domain") {
    auto c = corr_thermal_oracle(0, 0, 1.0, 2.0);
    REQUIRE_FALSE(c.ok());
    CHECK(c.error().code == ErrorCode::DomainError);
    CHECK_FALSE(corr_thermal_oracle(0, 0, 0.5, std::exp(1.0)).ok());
    CHECK(corr_thermal_oracle(0, 0, 0.5, std::exp(1.0) * 1.01).ok());
}

TEST_CASE("thermal oracle is the printed formula with opposite sign") {
    for (auto [r, v] : {std::pair{0.1, 2.0}, std::pair{0.3, 3.0}, std::pair{0.5, 5.0}}) {
        for (auto [a, b] : {std::pair{0.0, 0.0}, std::pair{0.1, 0.0}, std::pair{0.05, -0.15}, std::pair{-0.1, 0.2}}) {
            auto o = corr_thermal_oracle(a, b, r, v);
            auto p = corr_thermal(a, b, r, v);
            REQUIRE(o.ok());
            REQUIRE(p.ok());
            CHECK_THAT(*o, WithinAbs(-*p, 1e-8));
        }
    }
}

TEST_CASE("thermal oracle properties") {
    const double c2 = *corr_thermal_oracle(0, 0, 0.1, 2.0);
    const double c3 = *corr_thermal_oracle(0, 0, 0.1, 3.0);
    CHECK(std::abs(c2) <= 1.0);
    CHECK(c3 > c2);
    for (double b : {-0.2, 0.05, 0.3}) {
        CHECK(std::abs(*corr_thermal_oracle(kPi / 8, b, 0.2, 3.0)) < 1e-10);
        CHECK(std::abs(*corr_thermal_oracle(kPi / 8, b, 0.2, 3.0, 0.0, with(PairConvention::Representative))) < 1e-10);
    }
    // the centre of the P-function matters away from zero angles
    const double c0 = *corr_thermal_oracle(0.1, -0.05, 0.2, 3.0, 0.0);
    const double cc = *corr_thermal_oracle(0.1, -0.05, 0.2, 3.0, 0.5);
    CHECK(std::abs(cc - c0) > 1e-2);
}

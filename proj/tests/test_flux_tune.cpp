#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "xduct/errors.hpp"
#include "xduct/flux_tune.hpp"

using namespace xduct;
using namespace xduct::flux;

namespace {
// Closed-form two-point coefficient from the measured endpoints:
// 90 MHz shift at 4 mT on a 5.669 GHz resonance.
const double kEndpointK = (90e6 / 5.669e9) / 16.0;
const FluxTuneModel kPaperModel{5.669e9, kEndpointK, 4.0};
} // namespace

TEST_CASE("kinetic inductance quadratic law") {
    const KineticInductanceLaw law{1.2e-9, 3.5e-3};
    CHECK(kinetic_inductance(law, 0.0) == law.l_k0_h);
    CHECK(kinetic_inductance(law, law.i_star_a) == doctest::Approx(2.0 * law.l_k0_h).epsilon(1e-15));
    CHECK(kinetic_inductance(law, 0.5 * law.i_star_a) ==
          doctest::Approx(1.25 * law.l_k0_h).epsilon(1e-15));
}

TEST_CASE("kinetic inductance is even in current") {
    const KineticInductanceLaw law{0.8e-9, 2.1e-3};
    for (double i : {1e-4, 7e-4, 1.9e-3, 3.3e-3}) {
        CHECK(kinetic_inductance(law, i) == kinetic_inductance(law, -i));
    }
}

TEST_CASE("frequency_at_bias: zero field identity and the 4 mT endpoint") {
    CHECK(frequency_at_bias(kPaperModel, 0.0) == kPaperModel.f0_hz);

    // quoted coefficient rounded to 9.92e-4 still lands within 1% of -90 MHz
    const FluxTuneModel rounded{5.669e9, 9.92e-4, 4.0};
    const double shift = frequency_at_bias(rounded, 4.0) - rounded.f0_hz;
    CHECK(shift == doctest::Approx(-90e6).epsilon(0.01));
    CHECK(frequency_at_bias(rounded, 4.0) == doctest::Approx(5.579e9).epsilon(0.001));
}

TEST_CASE("frequency_at_bias: quadratic scaling to 2 mT") {
    // (2/4)^2 of the endpoint shift
    const double expect = -90e6 * (2.0 / 4.0) * (2.0 / 4.0);
    const double shift = frequency_at_bias(kPaperModel, 2.0) - kPaperModel.f0_hz;
    CHECK(shift == doctest::Approx(expect).epsilon(1e-12));
}

TEST_CASE("frequency_at_bias rejects out-of-range bias") {
    CHECK_THROWS_AS(frequency_at_bias(kPaperModel, -0.1), validation_error);
    CHECK_THROWS_AS(frequency_at_bias(kPaperModel, 4.1), validation_error);
}

TEST_CASE("solve_bias identities and the 4 mT endpoint") {
    CHECK(*solve_bias(kPaperModel, kPaperModel.f0_hz) == 0.0);
    CHECK(*solve_bias(kPaperModel, 5.579e9) == doctest::Approx(4.0).epsilon(1e-12));
    CHECK_FALSE(solve_bias(kPaperModel, kPaperModel.f0_hz + 1e6).has_value());
    CHECK_FALSE(solve_bias(kPaperModel, kPaperModel.floor_hz() - 1.0).has_value());
}

TEST_CASE("solve_bias / frequency_at_bias round-trip to 1e-12 relative") {
    for (double frac = 0.0; frac <= 1.0; frac += 0.05) {
        const double f_t = kPaperModel.floor_hz() + frac * (kPaperModel.f0_hz - kPaperModel.floor_hz());
        const auto b = solve_bias(kPaperModel, f_t);
        REQUIRE(b.has_value());
        CHECK(frequency_at_bias(kPaperModel, *b) == doctest::Approx(f_t).epsilon(1e-12));
    }
}

TEST_CASE("fit recovers a noiseless synthetic model to 1e-10") {
    const FluxTuneModel truth{6.1e9, 7.3e-4, 5.0};
    std::vector<std::pair<double, double>> pts;
    for (double b = 0.0; b <= 5.0; b += 0.25) {
        pts.emplace_back(b, truth.f0_hz * (1.0 - truth.k_per_mt2 * b * b));
    }
    const auto fit = fit_flux_quadratic(pts);
    CHECK(fit.model.f0_hz == doctest::Approx(truth.f0_hz).epsilon(1e-10));
    CHECK(fit.model.k_per_mt2 == doctest::Approx(truth.k_per_mt2).epsilon(1e-10));
}

TEST_CASE("two-endpoint fit reproduces the closed-form coefficient") {
    const auto fit = fit_flux_quadratic({{0.0, 5.669e9}, {4.0, 5.579e9}});
    CHECK(fit.model.k_per_mt2 == doctest::Approx(kEndpointK).epsilon(1e-12));
    CHECK(fit.model.k_per_mt2 == doctest::Approx(9.92e-4).epsilon(1e-3));
    CHECK(fit.model.f0_hz == doctest::Approx(5.669e9).epsilon(1e-12));
    // fractional shift at 4 mT: the quoted 1.6% of f0
    CHECK(fit.model.max_fractional_shift() == doctest::Approx(0.016).epsilon(0.05 / 1.6));
}

TEST_CASE("fit under gaussian noise covers the truth at 3 sigma in >= 95/100 seeds") {
    const FluxTuneModel truth{5.669e9, kEndpointK, 4.0};
    int covered = 0;
    for (unsigned seed = 0; seed < 100; ++seed) {
        std::mt19937_64 rng(seed);
        std::normal_distribution<double> noise(0.0, 0.1e6);
        std::vector<std::pair<double, double>> pts;
        for (double b = 0.0; b <= 4.0; b += 0.2) {
            pts.emplace_back(b, truth.f0_hz * (1.0 - truth.k_per_mt2 * b * b) + noise(rng));
        }
        const auto fit = fit_flux_quadratic(pts);
        if (std::abs(fit.model.k_per_mt2 - truth.k_per_mt2) <= 3.0 * fit.k_stderr) {
            ++covered;
        }
    }
    CHECK(covered >= 95);
}

TEST_CASE("fit rejects degenerate designs") {
    CHECK_THROWS_AS(fit_flux_quadratic({{1.0, 5e9}}), validation_error);
    CHECK_THROWS_AS(fit_flux_quadratic({{2.0, 5e9}, {2.0, 5.1e9}, {2.0, 5.2e9}}),
                    validation_error);
}

TEST_CASE("flux model invariants") {
    CHECK_THROWS_AS((FluxTuneModel{-5e9, 1e-4, 4.0}).validate(), validation_error);
    CHECK_THROWS_AS((FluxTuneModel{5e9, -1e-4, 4.0}).validate(), validation_error);
    CHECK_THROWS_AS((FluxTuneModel{5e9, 1e-4, 0.0}).validate(), validation_error);
    CHECK_THROWS_AS((FluxTuneModel{5e9, 0.9, 2.0}).validate(), validation_error);
}

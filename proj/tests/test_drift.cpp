#include <doctest.h>

#include <cmath>
#include <numbers>

#include "exdiff/drift.hpp"

using namespace exdiff;
using doctest::Approx;

TEST_CASE("theta for the reference drifts") {
    CHECK(make_piecewise_constant(0.2, -0.9).theta() == Approx(0.55));
    CHECK(make_piecewise_constant(0.3, 0.9).theta() == Approx(-0.3));
    CHECK(make_piecewise_sine(7 * std::numbers::pi / 6, std::numbers::pi / 4).theta() == Approx(0.60355).epsilon(1e-5));
}

TEST_CASE("phi of a piecewise constant drift") {
    const auto d = make_piecewise_constant(0.2, -0.9);
    CHECK(phi(d, -1.0) == Approx(0.385));
    CHECK(phi(d, 1.0) == Approx(0.0));
    CHECK(phi(d, 0.0) == Approx(-d.kappa()));
    CHECK(d.alpha(0.0) == 0.2);
    CHECK(d.alpha(-1e-300) == -0.9);
}

TEST_CASE("antiderivative of the sine drift") {
    const double t1 = 7 * std::numbers::pi / 6, t2 = std::numbers::pi / 4;
    const auto d = make_piecewise_sine(t1, t2);
    CHECK(d.antiderivative(0.0) == 0.0);
    // A(u) = cos(theta) - cos(u - theta) on each side.
    CHECK(d.antiderivative(1.3) == Approx(std::cos(t1) - std::cos(1.3 - t1)).epsilon(1e-14));
    CHECK(d.antiderivative(-0.8) == Approx(std::cos(t2) - std::cos(-0.8 - t2)).epsilon(1e-14));
    for (double u : {-5.0, -1.0, -0.1, 0.2, 3.0}) {
        CHECK(phi(d, u) >= -1e-15);
        CHECK(phi(d, u) <= d.big_m() + 1e-15);
    }
}

TEST_CASE("reference drifts pass the assumption checks") {
    for (const auto& d : {make_piecewise_constant(0.2, -0.9), make_piecewise_constant(0.3, 0.9),
                          make_piecewise_sine(7 * std::numbers::pi / 6, std::numbers::pi / 4)}) {
        const auto r = validate_assumptions(d, default_validation_grid(), 0.0, 1.0);
        CHECK(r.phi_min >= -1e-12);
        CHECK(r.phi_max <= d.big_m() + 1e-12);
        CHECK(r.tilted_mass > 0.0);
        CHECK(std::isfinite(r.tilted_mass));
    }
}

TEST_CASE("a wrong bound on phi is rejected") {
    DriftDefinition def;
    def.alpha = [](double u) { return u >= 0 ? 1.0 : -1.0; };
    def.alpha_prime = [](double) { return 0.0; };
    def.antiderivative = [](double u) { return std::fabs(u); };
    def.alpha_plus = 1.0;
    def.alpha_minus = -1.0;
    def.kappa = 0.0;
    def.big_m = 0.1;  // phi is 0.5
    CHECK_THROWS_AS(validate_assumptions(DriftSpec(def), default_validation_grid()), AssumptionViolation);
}

TEST_CASE("inconsistent one-sided limits are rejected") {
    DriftDefinition def;
    def.alpha = [](double u) { return u >= 0 ? 0.5 : 0.1; };
    def.alpha_prime = [](double) { return 0.0; };
    def.antiderivative = [](double u) { return u >= 0 ? 0.5 * u : 0.1 * u; };
    def.alpha_plus = 0.5;
    def.alpha_minus = 0.3;
    def.kappa = 0.005;
    def.big_m = 0.12;
    CHECK_THROWS_AS(validate_assumptions(DriftSpec(def), default_validation_grid()), AssumptionViolation);
}

TEST_CASE("missing callables") {
    CHECK_THROWS_AS(DriftSpec(DriftDefinition{}), std::invalid_argument);
}

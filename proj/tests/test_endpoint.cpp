#include <doctest.h>

#include <cmath>
#include <numbers>
#include <stdexcept>

#include "exdiff/distributions.hpp"
#include "exdiff/endpoint.hpp"
#include "exdiff/rng.hpp"
#include "exdiff/validation.hpp"

using namespace exdiff;
using doctest::Approx;

TEST_CASE("tilted densities factor through A and theta") {
    const auto d = make_piecewise_constant(0.2, -0.9);
    const EndpointLaw law(d, 0.5, 1.0);
    const double b = -0.3, l = 0.4;
    CHECK(law.gtilde(b, l) ==
          Approx(std::exp(d.antiderivative(b) - d.theta() * l) * joint_density_f({0.5, 1.0, b, l})).epsilon(1e-12));
    CHECK(law.gstar_tilde(0.8) ==
          Approx(std::exp(d.antiderivative(0.8)) * atom_density_fstar(0.5, 1.0, 0.8)).epsilon(1e-12));
    CHECK(law.gstar_tilde(-0.8) == 0.0);
    CHECK_THROWS_AS(law.gtilde(0.1, 0.0), std::domain_error);
}

TEST_CASE("mixture components are normalised and dominate the target") {
    for (double x : {0.0, 0.5, -1.0}) {
        const EndpointLaw law(make_piecewise_constant(0.3, 0.9), x, 1.0);
        REQUIRE(law.has_mixture());
        CHECK_NOTHROW(verify_mixture(law, law.mixture(), 60));
    }
}

TEST_CASE("sign dispatch") {
    RngStream rng(31, 0);
    const EndpointLaw pos(make_piecewise_constant(0.2, -0.9), 0.0, 1.0);
    const EndpointLaw neg(make_piecewise_constant(0.3, 0.9), 0.0, 1.0);
    CHECK_THROWS(sample_endpoint_theta_positive(neg, rng));
    CHECK_THROWS(sample_endpoint_theta_negative(pos, rng));
    for (int i = 0; i < 1000; ++i) {
        const auto a = sample_endpoint(pos, rng);
        const auto b = sample_endpoint(neg, rng);
        REQUIRE(a.l >= 0.0);
        REQUIRE(b.l >= 0.0);
    }
}

TEST_CASE("atom draws keep the sign of the start") {
    RngStream rng(32, 0);
    const EndpointLaw law(make_piecewise_constant(0.3, 0.9), 1.0, 1.0);
    int atoms = 0;
    for (int i = 0; i < 5000; ++i) {
        const auto e = sample_endpoint(law, rng);
        if (e.l == 0.0) {
            ++atoms;
            REQUIRE(e.b > 0.0);
        }
    }
    CHECK(atoms > 0);
}

TEST_CASE("tilted mass is stable under refinement") {
    const EndpointLaw law(make_piecewise_sine(7 * std::numbers::pi / 6, std::numbers::pi / 4), 0.5, 1.0);
    CHECK(tilted_mass(law, 0) == Approx(tilted_mass(law, 1)).epsilon(1e-7));
}

TEST_CASE("zero drift endpoint has mass one") {
    const auto d = make_piecewise_constant(0.0, 0.0);
    const EndpointLaw law(d, 0.3, 1.0);
    CHECK(tilted_mass(law) == Approx(1.0).epsilon(1e-8));
    // P(L_T = 0) = P(no zero hit) = 2 Phi(x / sqrt(T)) - 1.
    CHECK(endpoint_atom_probability(law) == Approx(2 * std_normal_cdf(0.3) - 1).epsilon(1e-8));
}

TEST_CASE("h sampler mean for a piecewise constant drift") {
    // h(u) is proportional to e^{a u} phi(u) on each side; its mean is checked by quadrature.
    const auto d = make_piecewise_constant(0.2, -0.9);
    const EndpointLaw law(d, 0.0, 1.0);
    auto h = [&](double u) { return std::exp(d.antiderivative(u) + log_normal_pdf(u, 0.0, 1.0)); };
    const double z = integrate(h, -kInf, 0.0) + integrate(h, 0.0, kInf);
    const double m = (integrate([&](double u) { return u * h(u); }, -kInf, 0.0) +
                      integrate([&](double u) { return u * h(u); }, 0.0, kInf)) / z;
    RngStream rng(33, 0);
    const int n = 100000;
    double sum = 0.0;
    for (int i = 0; i < n; ++i) sum += sample_XT_from_h(law, rng);
    CHECK(std::fabs(sum / n - m) < 5.0 / std::sqrt(n));
}

#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

#include "exdiff/distributions.hpp"
#include "exdiff/rng.hpp"
#include "exdiff/validation.hpp"

using namespace exdiff;
using doctest::Approx;

TEST_CASE("gaussian pdf and cdf reference values") {
    CHECK(normal_pdf(0.0, 0.0, 1.0) == Approx(0.3989423).epsilon(1e-7));
    CHECK(normal_cdf(1.96, 0.0, 1.0) == Approx(0.9750021).epsilon(1e-7));
    CHECK(normal_cdf(3.0, 1.0, 4.0) == Approx(std_normal_cdf(1.0)).epsilon(1e-14));
    CHECK(std_normal_cdf(-1.0) + std_normal_sf(-1.0) == Approx(1.0).epsilon(1e-15));
    CHECK_THROWS_AS(normal_pdf(0.0, 0.0, 0.0), std::domain_error);
    CHECK(log_normal_pdf(0.7, 0.2, 2.0) == Approx(std::log(normal_pdf(0.7, 0.2, 2.0))).epsilon(1e-13));
}

TEST_CASE("log cdf deep in the lower tail") {
    // Asymptotic series for log Phi(-z).
    const double z = 40.0;
    const double series = -0.5 * z * z - std::log(z * std::sqrt(2.0 * std::numbers::pi)) + std::log1p(-1.0 / (z * z) + 3.0 / std::pow(z, 4));
    CHECK(log_std_normal_cdf(-z) == Approx(series).epsilon(1e-9));
    CHECK(std::isfinite(log_std_normal_cdf(-1e3)));
}

TEST_CASE("mills ratio") {
    CHECK(mills_ratio(0.0) == Approx(std::sqrt(std::numbers::pi / 2)).epsilon(1e-14));
    CHECK(mills_ratio(2.0) == Approx(std_normal_sf(2.0) / normal_pdf(2.0, 0, 1)).epsilon(1e-12));
    CHECK(one_minus_z_mills(30.0) == Approx(1.0 / 901.0).epsilon(1e-3));
}

TEST_CASE("half-normal mean from the one-sided truncated sampler") {
    RngStream rng(11, 0);
    const int n = 200000;
    double sum = 0.0;
    for (int i = 0; i < n; ++i) {
        const double z = sample_truncated_normal(0.0, 1.0, 0.0, rng);
        REQUIRE(z > 0.0);
        sum += z;
    }
    CHECK(sum / n == Approx(std::sqrt(2.0 / std::numbers::pi)).epsilon(0.01));
}

TEST_CASE("truncated normal respects bounds far in the tail") {
    RngStream rng(12, 0);
    for (int i = 0; i < 1000; ++i) {
        const double z = sample_truncated_normal(1.0, 0.25, 9.0, rng);
        REQUIRE(z > 9.0);
        const double w = sample_truncated_normal(0.0, 1.0, -0.1, 0.1, rng);
        REQUIRE(w > -0.1);
        REQUIRE(w < 0.1);
        const double t = sample_std_truncated_normal(-kInf, -12.0, rng);
        REQUIRE(t < -12.0);
    }
}

TEST_CASE("truncated normal KS against its cdf") {
    RngStream rng(13, 0);
    std::vector<double> s(20000);
    for (auto& v : s) v = sample_truncated_normal(0.5, 2.0, 1.5, rng);
    const double lo = std_normal_cdf((1.5 - 0.5) / std::sqrt(2.0));
    const auto r = ks_one_sample(s, [&](double u) {
        return (std_normal_cdf((u - 0.5) / std::sqrt(2.0)) - lo) / (1.0 - lo);
    });
    CHECK(r.p_value > 1e-4);
}

TEST_CASE("rayleigh quantile and mean") {
    CHECK(truncated_rayleigh_quantile(1.0, 0.0, 0.5) == Approx(1.177410).epsilon(1e-6));
    // Truncation at min shifts y^2 / 2 by min^2 / 2.
    CHECK(truncated_rayleigh_quantile(1.0, 1.0, 0.5) == Approx(std::sqrt(1.0 + 2.0 * std::log(2.0))).epsilon(1e-12));
    RngStream rng(14, 0);
    const int n = 200000;
    double sum = 0.0;
    for (int i = 0; i < n; ++i) sum += sample_truncated_rayleigh(4.0, 0.0, rng);
    CHECK(sum / n == Approx(2.50663).epsilon(0.01));
}

TEST_CASE("poisson process counts and ordering") {
    RngStream rng(15, 0);
    const int reps = 20000;
    double total = 0.0;
    for (int i = 0; i < reps; ++i) {
        const auto t = sample_poisson_times(3.0, 2.0, rng);
        REQUIRE(std::is_sorted(t.begin(), t.end()));
        REQUIRE(std::adjacent_find(t.begin(), t.end()) == t.end());
        for (double v : t) REQUIRE((v > 0.0 && v <= 2.0));
        total += double(t.size());
    }
    CHECK(total / reps == Approx(6.0).epsilon(0.01));
    CHECK_THROWS(sample_poisson_times(0.0, 1.0, rng));
}

TEST_CASE("linear gaussian tail mass matches quadrature") {
    for (auto [c, m, var] : {std::array{0.0, 1.0, 1.0}, {0.5, -2.0, 0.3}, {2.0, 1.0, 0.5}, {0.0, -5.0, 2.0}}) {
        const double q = integrate([&](double w) { return w * std::exp(-(w - m) * (w - m) / (2 * var)); }, c, kInf, 1e-13);
        CHECK(log_linear_gaussian_tail_mass(c, m, var) == Approx(std::log(q)).epsilon(1e-9));
    }
}

TEST_CASE("local time density reference values") {
    CHECK(joint_density_f({0.0, 1.0, 0.0, 1.0}) == Approx(0.2419707).epsilon(1e-7));
    // phi(0) (1 - e^{-2})
    CHECK(atom_density_fstar(1.0, 1.0, 1.0) == Approx(0.3449513).epsilon(1e-7));
    CHECK(atom_density_fstar(1.0, 1.0, -1.0) == 0.0);
    CHECK(log_joint_density_f({0.3, 0.7, -0.2, 0.4}) ==
          Approx(std::log(joint_density_f({0.3, 0.7, -0.2, 0.4}))).epsilon(1e-13));
    CHECK_THROWS_AS(joint_density_f({0.0, 1.0, 0.0, 0.0}), std::domain_error);
    CHECK_THROWS_AS(atom_density_fstar(1.0, 0.0, 1.0), std::domain_error);
}

TEST_CASE("local time density and atom integrate to one") {
    for (double x : {0.0, 0.4, -1.3}) {
        const double s = 0.8;
        const double cont = integrate([&](double b) {
            return integrate([&](double l) { return l > 0 ? joint_density_f({x, s, b, l}) : 0.0; }, 0.0, kInf, 1e-12);
        }, -kInf, kInf, 1e-10);
        const double atom = x == 0.0 ? 0.0
                                     : integrate([&](double b) { return atom_density_fstar(x, s, b); },
                                                 x > 0 ? 0.0 : -kInf, x > 0 ? kInf : 0.0, 1e-12);
        CHECK(cont + atom == Approx(1.0).epsilon(1e-8));
    }
}

TEST_CASE("tilted local time integral") {
    const double x = 0.2, s = 1.1, b = -0.5, theta = 0.7;
    const double q = integrate([&](double l) { return joint_density_f({x, s, b, l}) * std::exp(-theta * l); }, 0.0, kInf, 1e-14);
    CHECK(log_tilted_local_time_integral(x, s, b, theta) == Approx(std::log(q)).epsilon(1e-10));
}

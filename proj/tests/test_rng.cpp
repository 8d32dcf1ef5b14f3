#include <doctest.h>

#include <cmath>

#include "exdiff/rng.hpp"

using namespace exdiff;

TEST_CASE("philox known answer, zero counter and key") {
    const auto out = detail::philox4x32_10({0, 0, 0, 0}, {0, 0});
    CHECK(out[0] == 0x6627e8d5u);
    CHECK(out[1] == 0xe169c58du);
    CHECK(out[2] == 0xbc57ac4cu);
    CHECK(out[3] == 0x9b00dbd8u);
}

TEST_CASE("philox known answer, all ones") {
    const auto out = detail::philox4x32_10({0xffffffffu, 0xffffffffu, 0xffffffffu, 0xffffffffu},
                                           {0xffffffffu, 0xffffffffu});
    CHECK(out[0] == 0x408f276du);
    CHECK(out[1] == 0x41c83b0eu);
    CHECK(out[2] == 0xa20bc7c6u);
    CHECK(out[3] == 0x6d5451fdu);
}

TEST_CASE("streams are reproducible and distinct") {
    RngStream a(42, 7), b(42, 7), c(42, 8), d(43, 7);
    for (int i = 0; i < 100; ++i) {
        const auto x = a();
        CHECK(x == b());
        CHECK(x != c());
        CHECK(x != d());
    }
    RngStream e(1, 1);
    e();
    RngStream copy = e;
    CHECK(copy() == e());
}

TEST_CASE("uniform stays in the open unit interval with the right moments") {
    RngStream rng(3, 0);
    double sum = 0.0, sum2 = 0.0;
    const int n = 200000;
    for (int i = 0; i < n; ++i) {
        const double u = rng.uniform();
        REQUIRE(u > 0.0);
        REQUIRE(u < 1.0);
        sum += u;
        sum2 += u * u;
    }
    CHECK(sum / n == doctest::Approx(0.5).epsilon(0.01));
    CHECK(sum2 / n - (sum / n) * (sum / n) == doctest::Approx(1.0 / 12).epsilon(0.02));
}

TEST_CASE("normal and exponential moments") {
    RngStream rng(4, 0);
    const int n = 200000;
    double m = 0, v = 0, e = 0;
    for (int i = 0; i < n; ++i) {
        const double z = rng.normal();
        m += z;
        v += z * z;
        e += rng.exponential();
    }
    CHECK(std::fabs(m / n) < 5.0 / std::sqrt(n));
    CHECK(v / n == doctest::Approx(1.0).epsilon(0.02));
    CHECK(e / n == doctest::Approx(1.0).epsilon(0.02));
}

TEST_CASE("philox known answer, digits of pi") {
    const auto out = detail::philox4x32_10({0x243f6a88u, 0x85a308d3u, 0x13198a2eu, 0x03707344u},
                                           {0xa4093822u, 0x299f31d0u});
    CHECK(out[0] == 0xd16cfe09u);
    CHECK(out[1] == 0x94fdccebu);
    CHECK(out[2] == 0x5001e420u);
    CHECK(out[3] == 0x24126ea1u);
}

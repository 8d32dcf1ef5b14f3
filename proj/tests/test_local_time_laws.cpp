#include <doctest.h>

#include <cmath>
#include <stdexcept>

#include "exdiff/distributions.hpp"
#include "exdiff/local_time_laws.hpp"
#include "exdiff/rng.hpp"
#include "exdiff/validation.hpp"

using namespace exdiff;
using doctest::Approx;

TEST_CASE("probability of constant local time") {
    CHECK(prob_local_time_constant({0.0, 1.0, 1.0, 1.0, 0.0}) == Approx(0.8646647).epsilon(1e-7));
    CHECK(prob_local_time_constant({0.0, 1.0, 1.0, -1.0, 0.0}) == 0.0);
    CHECK(prob_local_time_constant({0.0, 1.0, 0.0, 1.0, 0.0}) == 0.0);
}

TEST_CASE("L given endpoints never decreases") {
    RngStream rng(21, 0);
    for (int i = 0; i < 10000; ++i) {
        const double b1 = 2 * rng.normal(), b2 = 2 * rng.normal(), l1 = rng.exponential();
        const double l = sample_L_given_endpoints({0.0, 0.5 + rng.uniform(), b1, b2, l1}, rng);
        REQUIRE(l >= l1);
        if (b1 * b2 <= 0) REQUIRE(l > l1);
    }
}

TEST_CASE("zero increment proposal and acceptance") {
    const BridgeQuery q{0.0, 1.0, 2.0, 1.0, 1.0, 0.3, 0.3};
    const auto g = zero_increment_proposal(q);
    CHECK(g.mean == Approx(1.0));
    CHECK(g.variance == Approx(0.5));
    CHECK(zero_increment_acceptance(q, 0.0) == 0.0);
    CHECK(zero_increment_acceptance(q, 1.0) == Approx((1 - std::exp(-2.0)) * (1 - std::exp(-2.0))));
    const double mass = integrate([&](double b) { return zero_increment_density(b, q); }, 0.0, kInf, 1e-12);
    CHECK(mass == Approx(1.0).epsilon(1e-8));
    RngStream rng(22, 0);
    for (int i = 0; i < 1000; ++i) REQUIRE(sample_B_conditional_zero_increment(q, rng) > 0.0);
    const BridgeQuery neg{0.0, 0.4, 1.0, -0.2, -1.5, 0.0, 0.0};
    for (int i = 0; i < 1000; ++i) REQUIRE(sample_B_conditional_zero_increment(neg, rng) < 0.0);
}

TEST_CASE("bridge query validation") {
    CHECK_THROWS_AS((BridgeQuery{0.0, 1.0, 1.0, 1.0, 1.0, 0.0, 0.0}.validate()), std::domain_error);
    CHECK_THROWS_AS((BridgeQuery{0.0, 0.5, 1.0, 1.0, 1.0, 0.4, 0.2}.validate()), std::domain_error);
    CHECK_THROWS_AS((BridgeQuery{0.0, 0.5, 1.0, 1.0, -1.0, 0.2, 0.2}.validate()), std::domain_error);
    CHECK_NOTHROW((BridgeQuery{0.0, 0.5, 1.0, 1.0, -1.0, 0.2, 0.7}.validate()));
}

TEST_CASE("case weights sum to one and match their densities") {
    const BridgeQuery q{0.0, 0.4, 1.0, 0.3, -0.2, 0.1, 0.6};
    const auto w = compute_case_weights(q);
    CHECK(w.p1 + w.p2 + w.p3 == Approx(1.0).epsilon(1e-12));
    CHECK(w.p1 >= 0.0);
    CHECK(w.p3 >= 0.0);
    const double i1 = integrate([&](double b) { return xi1_density(b, q); }, -kInf, kInf, 1e-13);
    const double i3 = integrate([&](double b) { return xi3_density(b, q); }, -kInf, kInf, 1e-13);
    CHECK(i1 == Approx(w.p1).epsilon(1e-6));
    CHECK(i3 == Approx(w.p3).epsilon(1e-6));
}

TEST_CASE("R2 region transforms are inverse") {
    const BridgeQuery q{0.0, 0.5, 1.0, 0.4, -0.3, 0.2, 0.9};
    const auto r = UVRegion::from_query(q);
    for (double b : {0.1, 1.5})
        for (double l : {0.3, 0.5, 0.8}) {
            const auto uv = r.to_uv(b, l);
            CHECK(r.contains(uv[0], uv[1]));
            const auto back = r.to_bridge(uv[0], uv[1]);
            CHECK(back.b == Approx(b).epsilon(1e-12));
            CHECK(back.l == Approx(l).epsilon(1e-12));
        }
    CHECK_FALSE(r.contains(0.0, 0.0));
}

TEST_CASE("bridge draws stay between their neighbours' local times") {
    RngStream rng(23, 0);
    const BridgeQuery q{0.0, 0.5, 1.0, 0.4, -0.3, 0.2, 0.9};
    for (int i = 0; i < 5000; ++i) {
        BridgeCase which{};
        const auto p = sample_bridge_point(q, rng, which);
        REQUIRE(p.l >= q.l1);
        REQUIRE(p.l <= q.l3);
        if (which == BridgeCase::LeftFlat) REQUIRE(p.l == q.l1);
        if (which == BridgeCase::RightFlat) REQUIRE(p.l == q.l3);
        if (which == BridgeCase::Interior) REQUIRE((p.l > q.l1 && p.l < q.l3));
    }
}

TEST_CASE("xi acceptance ratios lie in the unit interval") {
    const BridgeQuery q{0.0, 0.3, 1.0, 0.5, 0.2, 0.0, 0.4};
    for (double b = -4.0; b <= 4.0; b += 0.01) {
        const double r1 = xi1_acceptance_ratio(q, b), r3 = xi3_acceptance_ratio(q, b);
        REQUIRE((r1 >= 0.0 && r1 <= 1.0));
        REQUIRE((r3 >= 0.0 && r3 <= 1.0));
    }
}

TEST_CASE("interpolating an existing time is a no-op") {
    const std::vector<SkeletonPoint> pts{{0.0, 0.1, 0.0}, {1.0, -0.4, 0.3}};
    RngStream rng(24, 0);
    const std::vector<double> times{1.0};
    const auto out = interpolate_skeleton(pts, times, rng);
    REQUIRE(out.size() == 2);
    CHECK(out[1].x == -0.4);
    const std::vector<double> bad{1.5};
    CHECK_THROWS_AS(interpolate_skeleton(pts, bad, rng), std::domain_error);
}

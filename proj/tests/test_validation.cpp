#include <doctest.h>

#include <cmath>
#include <numbers>

#include "exdiff/distributions.hpp"
#include "exdiff/rng.hpp"
#include "exdiff/validation.hpp"

using namespace exdiff;
using doctest::Approx;

namespace {
std::vector<double> normals(std::size_t n, std::uint64_t stream, double shift = 0.0) {
    RngStream rng(51, stream);
    std::vector<double> v(n);
    for (auto& x : v) x = rng.normal() + shift;
    return v;
}
}  // namespace

TEST_CASE("quadrature cdf of a gaussian") {
    const QuadratureCdf cdf([](double u) { return normal_pdf(u, 0.3, 2.0); }, -kInf, kInf, {0.3});
    CHECK(cdf.total_mass() == Approx(1.0).epsilon(1e-8));
    for (double u : {-4.0, -1.0, 0.0, 0.3, 2.5})
        CHECK(std::fabs(cdf(u) - normal_cdf(u, 0.3, 2.0)) < 1e-8);
}

TEST_CASE("tabulated quadrature cdf") {
    QuadratureCdf cdf([](double u) { return u > 0 ? u * std::exp(-u * u / 2) : 0.0; }, 0.0, 12.0, {}, 1e-10);
    cdf.tabulate(16, 1e-7);
    for (double u : {0.1, 0.7, 1.9, 4.0}) CHECK(std::fabs(cdf(u) - (1 - std::exp(-u * u / 2))) < 1e-6);
}

TEST_CASE("ks two sample") {
    const auto a = normals(5000, 0);
    CHECK(ks_two_sample(a, a).statistic == 0.0);
    CHECK(ks_two_sample(a, a).p_value == Approx(1.0));
    CHECK(ks_two_sample(normals(100000, 1), normals(100000, 2, 0.05)).p_value < 1e-6);
}

TEST_CASE("ks two sample calibration") {
    int rejected = 0;
    const int reps = 200;
    for (int r = 0; r < reps; ++r)
        if (ks_two_sample(normals(500, 100 + 2 * r), normals(500, 101 + 2 * r)).p_value < 0.05) ++rejected;
    // Binomial(200, 0.05) lies in [2, 20] with probability > 0.999.
    CHECK(rejected >= 2);
    CHECK(rejected <= 20);
}

TEST_CASE("ks one sample with an atom") {
    RngStream rng(52, 0);
    std::vector<double> s(20000);
    for (auto& x : s) x = rng.uniform() < 0.3 ? 0.0 : rng.exponential();
    auto cdf = [](double u) { return u < 0 ? 0.0 : 0.3 + 0.7 * (1 - std::exp(-u)); };
    auto left = [](double u) { return u <= 0 ? 0.0 : 0.3 + 0.7 * (1 - std::exp(-u)); };
    CHECK(ks_one_sample(s, cdf, left).p_value > 1e-3);
}

TEST_CASE("kolmogorov survival function") {
    CHECK(kolmogorov_p_value(0.0, 100) == Approx(1.0));
    // Q_KS(1.36) ~ 0.0494.
    const double n = 1e6;
    CHECK(kolmogorov_p_value(1.36 / (std::sqrt(n) + 0.12 + 0.11 / std::sqrt(n)), n) == Approx(0.0494).epsilon(0.01));
}

TEST_CASE("chi square") {
    const std::vector<double> probs{0.25, 0.25, 0.5};
    const std::vector<double> exact{250, 250, 500};
    CHECK(chi_square_test(exact, probs).statistic == Approx(0.0));
    CHECK(chi_square_test(exact, probs).dof == 2);
    const std::vector<double> off{300, 200, 500};
    CHECK(chi_square_test(off, probs).p_value < 1e-3);
}

TEST_CASE("find cell") {
    const std::vector<double> edges{-kInf, 0.0, 1.0, kInf};
    CHECK(find_cell(edges, -5.0) == 0);
    CHECK(find_cell(edges, 0.0) == 1);
    CHECK(find_cell(edges, 3.0) == 2);
    const std::vector<double> finite{0.0, 1.0};
    CHECK(find_cell(finite, 2.0) == -1);
}

TEST_CASE("kde") {
    const auto s = normals(100000, 3);
    const auto g = kde(s);
    CHECK(g.total_mass == Approx(1.0).epsilon(1e-3));
    CHECK(g.trapezoid_mass() == Approx(g.total_mass).epsilon(1e-9));
    double sup = 0.0;
    for (std::size_t i = 0; i < g.values.size(); ++i)
        sup = std::max(sup, std::fabs(g.values[i] - normal_pdf(g.axes[0][i], 0.0, 1.0)));
    CHECK(sup < 0.02);
    // A wider kernel flattens the peak.
    const std::vector<double> at0{0.0};
    CHECK(kde_at(s, 0.5, at0)[0] < kde_at(s, 0.1, at0)[0]);
    CHECK(kde_at(s, 1.0, at0)[0] < kde_at(s, 0.5, at0)[0]);
}

TEST_CASE("levy oracle marginals") {
    RngStream rng(53, 0);
    const auto draws = levy_identity_oracle(1.0, 20000, rng);
    std::vector<double> abs_b, l;
    for (const auto& d : draws) {
        abs_b.push_back(d[0]);
        l.push_back(d[1]);
    }
    // |B_1| and L_1 are both half-normal.
    auto half = [](double u) { return u <= 0 ? 0.0 : 2 * std_normal_cdf(u) - 1; };
    CHECK(ks_one_sample(abs_b, half).p_value > 1e-3);
    CHECK(ks_one_sample(l, half).p_value > 1e-3);
}

#include "exdiff/drift.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "exdiff/distributions.hpp"

namespace exdiff {

DriftSpec::DriftSpec(DriftDefinition def) : def_(std::move(def)) {
    if (!def_.alpha || !def_.alpha_prime || !def_.antiderivative)
        throw std::invalid_argument("drift: alpha, alpha' and A must all be supplied");
    if (!(def_.big_m >= 0.0) || !std::isfinite(def_.big_m))
        throw std::invalid_argument("drift: M must be finite and nonnegative");
    if (!std::isfinite(def_.kappa)) throw std::invalid_argument("drift: kappa must be finite");
    if (!std::isfinite(def_.alpha_plus) || !std::isfinite(def_.alpha_minus))
        throw std::invalid_argument("drift: one-sided limits at 0 must be finite");
}

double phi(const DriftSpec& d, double u) {
    if (u == 0.0) return -d.kappa();
    const double a = d.alpha(u);
    return 0.5 * (a * a + d.alpha_prime(u)) - d.kappa();
}

DriftSpec make_piecewise_constant(double a1, double a2) {
    DriftDefinition def;
    def.family = "piecewise_constant";
    def.alpha = [a1, a2](double u) { return u >= 0.0 ? a1 : a2; };
    def.alpha_prime = [](double) { return 0.0; };
    def.antiderivative = [a1, a2](double u) { return u >= 0.0 ? a1 * u : a2 * u; };
    def.alpha_plus = a1;
    def.alpha_minus = a2;
    def.kappa = 0.5 * std::min(a1 * a1, a2 * a2);
    def.big_m = 0.5 * std::fabs(a1 * a1 - a2 * a2);
    def.linear_antiderivative = PiecewiseLinearAntiderivative{a1, a2};
    return DriftSpec(std::move(def));
}

DriftSpec make_piecewise_sine(double theta1, double theta2) {
    DriftDefinition def;
    def.family = "piecewise_sine";
    def.alpha = [theta1, theta2](double u) {
        return u >= 0.0 ? std::sin(u - theta1) : std::sin(u - theta2);
    };
    def.alpha_prime = [theta1, theta2](double u) {
        return u >= 0.0 ? std::cos(u - theta1) : std::cos(u - theta2);
    };
    // integral of sin(y - t) over [0, u] is cos(t) - cos(u - t) on either side.
    def.antiderivative = [theta1, theta2](double u) {
        const double t = u >= 0.0 ? theta1 : theta2;
        return std::cos(t) - std::cos(u - t);
    };
    def.alpha_plus = std::sin(-theta1);
    def.alpha_minus = std::sin(-theta2);
    // sin^2 + cos ranges over [-1, 5/4].
    def.kappa = -0.5;
    def.big_m = 9.0 / 8.0;
    def.antiderivative_sup = 1.0 + std::max(std::cos(theta1), std::cos(theta2));
    return DriftSpec(std::move(def));
}

std::vector<double> default_validation_grid() {
    std::vector<double> grid;
    constexpr int n = 10000;
    grid.reserve(n);
    for (int i = 0; i < n; ++i) {
        // Cell midpoints of [-20, 20]: symmetric and never exactly 0.
        grid.push_back(-20.0 + 40.0 * (i + 0.5) / n);
    }
    return grid;
}

AssumptionReport validate_assumptions(const DriftSpec& d, const std::vector<double>& grid,
                                      double x, double T) {
    if (grid.empty()) throw std::invalid_argument("validate_assumptions: empty grid");
    if (!(T > 0.0)) throw std::invalid_argument("validate_assumptions: T must be positive");
    constexpr double kTol = 1e-12;

    AssumptionReport report;
    report.phi_min = kInf;
    report.phi_max = -kInf;
    for (double u : grid) {
        if (u == 0.0) continue;
        const double v = phi(d, u);
        ++report.grid_points;
        report.phi_min = std::min(report.phi_min, v);
        report.phi_max = std::max(report.phi_max, v);
        if (!(v >= -kTol) || !(v <= d.big_m() + kTol)) {
            std::ostringstream msg;
            msg.precision(17);
            msg << "phi(" << u << ") = " << v << " outside [0, M = " << d.big_m()
                << "]: kappa or M is mis-specified";
            throw AssumptionViolation(msg.str());
        }
    }

    if (d.antiderivative(0.0) != 0.0) throw AssumptionViolation("A(0) must be exactly 0");
    constexpr double kEps = 1e-9;
    for (double u : {kEps, -kEps}) {
        if (std::fabs(d.antiderivative(u)) > 1e-6)
            throw AssumptionViolation("A is not continuous at 0");
    }
    if (std::fabs(d.alpha(kEps) - d.alpha_plus()) > 1e-6 ||
        std::fabs(d.alpha(-kEps) - d.alpha_minus()) > 1e-6) {
        throw AssumptionViolation("stored alpha(0+) / alpha(0-) disagree with alpha");
    }

    // Finiteness of the tilted endpoint mass: integrate out l in closed form,
    // then b by adaptive quadrature on a window wide enough for Gaussian decay.
    const double theta = d.theta();
    auto integrand = [&](double b) {
        const double cont = std::exp(d.antiderivative(b) +
                                     log_tilted_local_time_integral(x, T, b, theta));
        const double atom = std::exp(d.antiderivative(b) + log_atom_density_fstar(x, T, b));
        return cont + atom;
    };
    const double drift_scale = std::max(std::fabs(d.alpha_plus()), std::fabs(d.alpha_minus()));
    const double half_width = std::fabs(x) + 2.0 * std::fabs(theta) * T + drift_scale * T +
                              40.0 * std::sqrt(T);
    using Quad = boost::math::quadrature::gauss_kronrod<double, 31>;
    double err = 0.0;
    const double lo = std::min(x, 0.0) - half_width;
    const double hi = std::max(x, 0.0) + half_width;
    const double mass = Quad::integrate(integrand, lo, 0.0, 15, 1e-12, &err) +
                        Quad::integrate(integrand, 0.0, hi, 15, 1e-12, &err);
    report.tilted_mass = mass;
    if (!std::isfinite(mass) || !(mass > 0.0)) {
        throw AssumptionViolation("tilted endpoint mass is not finite and positive");
    }
    double peak = 0.0;
    for (int i = 0; i <= 400; ++i) peak = std::max(peak, integrand(lo + (hi - lo) * i / 400.0));
    report.tail_ratio = std::max(integrand(lo), integrand(hi)) / peak;
    if (!(report.tail_ratio < 1e-12)) {
        report.integrability_conclusive = false;
        report.notes.push_back("tilted-mass integrand has not decayed at the truncation window; "
                               "integrability is inconclusive");
    }
    report.notes.push_back(
        "the martingale property of the Girsanov density cannot be checked numerically and "
        "remains the caller's obligation");
    return report;
}

}  // namespace exdiff

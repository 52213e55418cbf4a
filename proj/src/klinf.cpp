#include "seqtest/klinf.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace seqtest {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kLambdaTol = 1e-12;
constexpr double kFocTol = 1e-10;

double objective_raw(std::span<const double> atoms, std::span<const double> weights,
                     double m, double lambda) {
    double v = 0.0;
    for (std::size_t i = 0; i < atoms.size(); ++i) {
        if (weights[i] == 0.0) continue;
        const double arg = 1.0 - lambda * (atoms[i] - m);
        if (arg <= 0.0) return -kInf;
        v += weights[i] * std::log(arg);
    }
    return v;
}

// g(lambda) = E_P[(m - X)/(1 - lambda (X - m))]; monotone decreasing.
// A pole (nonpositive denominator) means lambda is past the feasible range
// on that side, so the sign is forced.
double derivative_raw(std::span<const double> atoms, std::span<const double> weights,
                      double m, double lambda) {
    double g = 0.0;
    for (std::size_t i = 0; i < atoms.size(); ++i) {
        if (weights[i] == 0.0) continue;
        const double denom = 1.0 - lambda * (atoms[i] - m);
        if (denom <= 0.0) return lambda > 0.0 ? -kInf : kInf;
        g += weights[i] * (m - atoms[i]) / denom;
    }
    return g;
}

double curvature_raw(std::span<const double> atoms, std::span<const double> weights,
                     double m, double lambda) {
    double h = 0.0;
    for (std::size_t i = 0; i < atoms.size(); ++i) {
        const double d = atoms[i] - m;
        const double denom = 1.0 - lambda * d;
        h -= weights[i] * (d * d) / (denom * denom);
    }
    return h;
}

}  // namespace

double kl_bernoulli(double p, double q) {
    if (!(p >= 0.0 && p <= 1.0)) throw std::domain_error("kl_bernoulli: p outside [0,1]");
    if (!(q >= 0.0 && q <= 1.0)) throw std::domain_error("kl_bernoulli: q outside [0,1]");
    if (q == 0.0 || q == 1.0) {
        if (p == q) return 0.0;
        throw std::domain_error("kl_bernoulli: q in {0,1} with p != q");
    }
    double d = 0.0;
    if (p > 0.0) d += p * std::log(p / q);
    if (p < 1.0) d += (1.0 - p) * std::log((1.0 - p) / (1.0 - q));
    return std::max(d, 0.0);
}

DualSolution solve_dual(std::span<const double> atoms, std::span<const double> weights,
                        double m, double lo, double hi, double lambda_init) {
    auto g = [&](double lambda) { return derivative_raw(atoms, weights, m, lambda); };

    const double glo = g(lo);
    const double ghi = g(hi);

    DualSolution sol;
    if (glo == 0.0 && ghi == 0.0) {
        // Degenerate P = delta_m: every lambda is optimal; pick 0.
        sol.lambda_star = 0.0;
        sol.value = 0.0;
        sol.foc_residual = 0.0;
        return sol;
    }
    if (glo <= 0.0) {
        sol.lambda_star = lo;
        sol.at_boundary = true;
        sol.foc_residual = glo;
        sol.value = std::max(objective_raw(atoms, weights, m, lo), 0.0);
        return sol;
    }
    if (ghi >= 0.0) {
        sol.lambda_star = hi;
        sol.at_boundary = true;
        sol.foc_residual = ghi;
        sol.value = std::max(objective_raw(atoms, weights, m, hi), 0.0);
        return sol;
    }

    // Interior root of the monotone decreasing derivative: safeguarded
    // Newton from the hint, falling back to bisection of [a, b].
    double a = lo, b = hi;
    double lambda = std::clamp(lambda_init, lo, hi);
    double gl = g(lambda);
    for (int iter = 0; iter < 200; ++iter) {
        if (std::isfinite(gl)) {
            if (gl > 0.0) a = lambda; else b = lambda;
        }
        if (std::abs(gl) <= kFocTol || b - a <= kLambdaTol) break;
        double next;
        const double h = curvature_raw(atoms, weights, m, lambda);
        if (std::isfinite(gl) && std::isfinite(h) && h < 0.0) {
            next = lambda - gl / h;
            if (!(next > a && next < b)) next = 0.5 * (a + b);
        } else {
            next = 0.5 * (a + b);
        }
        lambda = next;
        gl = g(lambda);
    }
    sol.lambda_star = lambda;
    sol.foc_residual = gl;
    sol.at_boundary = false;
    sol.value = std::max(objective_raw(atoms, weights, m, lambda), 0.0);
    return sol;
}

double dual_objective(const DiscreteBoundedDist& P, double m, double lambda) {
    return objective_raw(P.atoms(), P.weights(), m, lambda);
}

double dual_derivative(const DiscreteBoundedDist& P, double m, double lambda) {
    return derivative_raw(P.atoms(), P.weights(), m, lambda);
}

DualSolution klinf_bounded(const DiscreteBoundedDist& P, double m) {
    if (!(m > 0.0 && m < 1.0)) throw std::domain_error("klinf_bounded: m outside (0,1)");
    return solve_dual(P.atoms(), P.weights(), m, -1.0 / m, 1.0 / (1.0 - m), 0.0);
}

DualSolution klinf_tilde(const DiscreteBoundedDist& P, double m) {
    if (!(m > 0.0 && m < 1.0)) throw std::domain_error("klinf_tilde: m outside (0,1)");
    return solve_dual(P.atoms(), P.weights(), m, -1.0, 1.0, 0.0);
}

ConcentrationConstants concentration_constants(const DiscreteBoundedDist& P, double m) {
    if (!(m > P.mean()))
        throw std::domain_error("concentration_constants: requires m > mean(P)");
    const DualSolution tilde = klinf_tilde(P, m);
    if (!(tilde.value > 1e-12))
        throw std::domain_error("concentration_constants: degenerate instance (tilde value 0)");
    const double lam = tilde.lambda_star;
    const double phi = std::log1p(m * lam) - std::log1p(-lam * (1.0 - m));
    return {2.0 * tilde.value, phi * phi};
}

double dh_boundary(long n, double alpha, const ConcentrationConstants& constants) {
    if (n < 2) throw std::domain_error("dh_boundary: requires n >= 2");
    if (!(alpha > 0.0 && alpha < 1.0)) throw std::domain_error("dh_boundary: alpha outside (0,1)");
    const double radius =
        (1.0 + 2.0 * std::log(1.0 / alpha) + 4.0 * std::log(std::log2(static_cast<double>(n)))) /
        static_cast<double>(n);
    return std::sqrt(radius) * std::sqrt(constants.d_const / constants.c_const);
}

double hoeffding_dev_bound(const DiscreteBoundedDist& P, double m, long n, double eps) {
    const DualSolution tilde = klinf_tilde(P, m);
    if (!(eps > 0.0 && eps < std::sqrt(tilde.value)))
        throw std::domain_error("hoeffding_dev_bound: eps outside (0, sqrt(tilde value))");
    const ConcentrationConstants c = concentration_constants(P, m);
    return std::exp(-static_cast<double>(n) * eps * eps * c.c_const / c.d_const);
}

}  // namespace seqtest

#pragma once

#include <span>

#include "seqtest/distributions.hpp"

namespace seqtest {

// Solution of the 1-D concave dual max_lambda E_P[log(1 - lambda (X - m))].
struct DualSolution {
    double lambda_star = 0.0;
    double value = 0.0;
    bool at_boundary = false;
    double foc_residual = 0.0;  // E_P[(m - X)/(1 - lambda (X - m))] at lambda_star
};

struct ConcentrationConstants {
    double c_const = 0.0;  // 2 * tilde value
    double d_const = 0.0;  // (log(1 + m lambda*) - log(1 - lambda* (1 - m)))^2
};

// Bernoulli KL d(p,q) = p log(p/q) + (1-p) log((1-p)/(1-q)), 0 log 0 = 0.
// q in {0,1} is a domain error unless p == q.
double kl_bernoulli(double p, double q);

// Full dual over lambda in [-1/m, 1/(1-m)].
DualSolution klinf_bounded(const DiscreteBoundedDist& P, double m);

// Restricted dual over lambda in [-1, 1].
DualSolution klinf_tilde(const DiscreteBoundedDist& P, double m);

// Dual objective / first-order condition, exposed for oracle tests.
double dual_objective(const DiscreteBoundedDist& P, double m, double lambda);
double dual_derivative(const DiscreteBoundedDist& P, double m, double lambda);

// Warm-started solve over raw atom/weight arrays (hot path for the
// empirical-KL_inf kernels). Interval is [lo, hi]; lambda_init is a hint.
DualSolution solve_dual(std::span<const double> atoms, std::span<const double> weights,
                        double m, double lo, double hi, double lambda_init);

// Requires m > mean(P) and tilde value > 0; otherwise std::domain_error.
ConcentrationConstants concentration_constants(const DiscreteBoundedDist& P, double m);

// sqrt((1 + 2 log(1/alpha) + 4 log log2(n)) / n) * sqrt(D/C); requires n >= 2.
double dh_boundary(long n, double alpha, const ConcentrationConstants& constants);

// exp(-n eps^2 C / D); requires 0 < eps < sqrt(tilde value).
double hoeffding_dev_bound(const DiscreteBoundedDist& P, double m, long n, double eps);

}  // namespace seqtest

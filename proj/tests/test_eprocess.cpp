#include <doctest.h>

#include <cmath>
#include <numbers>
#include <stdexcept>
#include <vector>

#include "oracles.hpp"
#include "seqtest/eprocess.hpp"
#include "seqtest/klinf.hpp"

using namespace seqtest;

namespace {

KernelConfig kernel_of(KernelKind kind, double m = 0.5) {
    KernelConfig k;
    k.kind = kind;
    k.m = m;
    return k;
}

ConstraintSystem mean_constraint(double m0, int nodes = 1025) {
    ConstraintSystem s;
    s.constraint_functions = {[m0](double x) { return x - m0; }};
    s.box_lo = {-1.0, -1.0};
    s.box_hi = {1.0, 1.0};
    s.quadrature_nodes_per_axis = nodes;
    return s;
}

}  // namespace

TEST_CASE("gaussian likelihood ratio increments") {
    KernelConfig k = kernel_of(KernelKind::LikelihoodRatio);
    k.lr_null = GaussianDist{0.0, 1.0};
    k.lr_alt = GaussianDist{1.0, 1.0};
    auto e = make_eprocess(k);
    e->update(0.5);
    CHECK(e->log_e() == doctest::Approx(0.0).epsilon(1e-12));
    e->update(1.0);
    CHECK(e->log_e() == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(std::exp(0.5) == doctest::Approx(1.64872).epsilon(1e-5));
    CHECK(e->n() == 2);
}

TEST_CASE("likelihood ratio mean increment under Q equals the KL") {
    KernelConfig k = kernel_of(KernelKind::LikelihoodRatio);
    k.lr_null = GaussianDist{0.0, 1.0};
    k.lr_alt = GaussianDist{1.0, 1.0};
    SeededStream stream(21, 0);
    const long n = 100000;
    auto e = make_eprocess(k);
    for (long i = 0; i < n; ++i) e->update(sample(GaussianDist{1.0, 1.0}, stream));
    // Increment variance under Q is 1, so the 3-sigma band is 3/sqrt(n).
    CHECK(std::abs(e->log_e() / static_cast<double>(n) - 0.5) < 3.0 / std::sqrt(n));
}

TEST_CASE("likelihood ratio construction guards") {
    KernelConfig k = kernel_of(KernelKind::LikelihoodRatio);
    k.lr_null = GaussianDist{0.0, 2.0};
    k.lr_alt = GaussianDist{1.0, 1.0};
    CHECK_THROWS_AS(make_eprocess(k), std::invalid_argument);

    k.lr_null = GaussianDist{0.0, 1.0};
    k.lr_alt = Dist(DiscreteBoundedDist::bernoulli(0.3));
    CHECK_THROWS_AS(make_eprocess(k), std::invalid_argument);

    // Q not absolutely continuous wrt P.
    k.lr_null = Dist(DiscreteBoundedDist::point_mass(0.0));
    k.lr_alt = Dist(DiscreteBoundedDist::bernoulli(0.3));
    CHECK_THROWS_AS(make_eprocess(k), std::invalid_argument);
}

TEST_CASE("discrete likelihood ratio flags zero-density observations") {
    KernelConfig k = kernel_of(KernelKind::LikelihoodRatio);
    k.lr_null = Dist(DiscreteBoundedDist::bernoulli(0.5));
    k.lr_alt = Dist(DiscreteBoundedDist::bernoulli(0.3));
    auto e = make_eprocess(k);
    e->update(1.0);
    CHECK(e->log_e() == doctest::Approx(std::log(0.3 / 0.5)).epsilon(1e-12));
    e->update(0.25);  // outside the null support
    CHECK(std::isinf(e->log_e()));
    CHECK(e->log_e() > 0.0);
}

TEST_CASE("numeraire increments") {
    auto e = make_eprocess(kernel_of(KernelKind::NumeraireSubGaussian, 0.5));
    e->update(0.25);
    CHECK(e->log_e() == doctest::Approx(0.0).epsilon(1e-12));
    e->update(1.0);
    CHECK(e->log_e() == doctest::Approx(0.375).epsilon(1e-12));
    CHECK(std::exp(0.375) == doctest::Approx(1.45499).epsilon(1e-5));

    SeededStream stream(4, 0);
    auto g = make_eprocess(kernel_of(KernelKind::NumeraireSubGaussian, 0.5));
    const long n = 100000;
    for (long i = 0; i < n; ++i) g->update(sample(GaussianDist{0.5, 1.0}, stream));
    // Mean increment m^2/2 = 0.125, increment sd = 0.5.
    CHECK(std::abs(g->log_e() / n - 0.125) < 3.0 * 0.5 / std::sqrt(n));

    CHECK_THROWS_AS(make_eprocess(kernel_of(KernelKind::NumeraireSubGaussian, 0.0)),
                    std::invalid_argument);
}

TEST_CASE("gaussian-mixture closed form") {
    CHECK(mixture_subgaussian_log_value(0, 0.0) == 0.0);
    CHECK(std::exp(mixture_subgaussian_log_value(1, 0.0)) ==
          doctest::Approx(std::sqrt(0.5)).epsilon(1e-12));
    CHECK(std::exp(mixture_subgaussian_log_value(4, 0.5)) ==
          doctest::Approx(std::sqrt(0.2) * std::exp(0.4)).epsilon(1e-12));

    auto e = make_eprocess(kernel_of(KernelKind::MixtureSubGaussian));
    CHECK(e->log_e() == 0.0);
    e->update(0.3);
    e->update(0.7);
    CHECK(e->log_e() == doctest::Approx(mixture_subgaussian_log_value(2, 0.5)).epsilon(1e-12));
}

TEST_CASE("mixture closed form matches direct quadrature of the gaussian prior") {
    // E_n = integral of phi(theta) exp(theta S_n - n theta^2 / 2) dtheta with
    // a standard normal prior; midpoint rule over [-8, 8].
    auto quad = [](long n, double mhat) {
        const long nodes = 200001;
        const double lo = -8.0, hi = 8.0;
        const double h = (hi - lo) / nodes;
        const double s = static_cast<double>(n) * mhat;
        double acc = 0.0;
        for (long j = 0; j < nodes; ++j) {
            const double th = lo + (j + 0.5) * h;
            acc += std::exp(-0.5 * th * th + th * s -
                            0.5 * static_cast<double>(n) * th * th);
        }
        return std::log(acc * h / std::sqrt(2.0 * std::numbers::pi));
    };
    for (long n : {1L, 5L, 20L, 100L}) {
        for (double mhat : {0.0, 0.2, 0.5}) {
            CHECK(mixture_subgaussian_log_value(n, mhat) ==
                  doctest::Approx(quad(n, mhat)).epsilon(1e-6));
        }
    }
}

TEST_CASE("empirical-KL value closed cases") {
    {
        const std::vector<double> one{0.3};
        const auto sol = klinf_bounded(DiscreteBoundedDist::point_mass(0.3), 0.5);
        CHECK(klinf_empirical_log_value(one, 0.5) == doctest::Approx(sol.value).epsilon(1e-10));
    }
    {
        const std::vector<double> flat{0.5, 0.5, 0.5};
        CHECK(klinf_empirical_log_value(flat, 0.5) ==
              doctest::Approx(-std::log(3.0)).epsilon(1e-10));
    }
    {
        const std::vector<double> zeros{0.0, 0.0, 0.0, 0.0};
        CHECK(klinf_empirical_log_value(zeros, 0.5) ==
              doctest::Approx(4.0 * std::log(2.0) - std::log(4.0)).epsilon(1e-10));
    }
}

TEST_CASE("empirical-KL kernel equals the standalone closed form") {
    SeededStream stream(15, 0);
    const auto Q = DiscreteBoundedDist({0.0, 0.5, 1.0}, {0.5, 0.25, 0.25});
    auto e = make_eprocess(kernel_of(KernelKind::KLinfEmpirical, 0.6));
    std::vector<double> prefix;
    for (int i = 1; i <= 60; ++i) {
        const double x = sample(Q, stream);
        prefix.push_back(x);
        e->update(x);
        CHECK(e->log_e() ==
              doctest::Approx(klinf_empirical_log_value(prefix, 0.6)).epsilon(1e-8));
    }
    CHECK_THROWS_AS(e->update(1.5), std::domain_error);
}

TEST_CASE("doubling statistic is piecewise constant and matches the grid oracle") {
    KernelConfig k = kernel_of(KernelKind::TildeKLinfDH, 0.6);
    auto e = make_eprocess(k);
    // Prefix of 8 samples: six zeros then two ones. The statistic over
    // n in {4,...,7} is computed from the first 4 samples only.
    const std::vector<double> xs{0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 1.0, 1.0};
    std::vector<double> stats;
    for (double x : xs) {
        e->update(x);
        const double r = tilde_dh_r_n(e->n(), k.r_n_const);
        stats.push_back((e->log_e() + r) / static_cast<double>(e->n()));
    }
    CHECK(stats[3] == doctest::Approx(stats[4]).epsilon(1e-12));
    CHECK(stats[4] == doctest::Approx(stats[5]).epsilon(1e-12));
    CHECK(stats[5] == doctest::Approx(stats[6]).epsilon(1e-12));
    // At n = 8 the statistic refreshes to tildeKLinf(Bern(0.25), 0.6).
    const auto ref = oracle::grid_search({0.0, 1.0}, {0.75, 0.25}, 0.6, -1.0, 1.0);
    CHECK(stats[7] == doctest::Approx(ref.value).epsilon(1e-6));
}

TEST_CASE("doubling penalty") {
    CHECK(tilde_dh_r_n(1, 3.0) == doctest::Approx(3.0 * std::log(2.0)).epsilon(1e-12));
    CHECK(tilde_dh_r_n(8, 3.0) == doctest::Approx(3.0 * std::log(5.0)).epsilon(1e-12));
    CHECK(tilde_dh_r_n(100, 1.5) ==
          doctest::Approx(1.5 * std::log(1.0 + std::log2(200.0))).epsilon(1e-12));
}

TEST_CASE("LIL margin") {
    // High-precision re-derivation of the n = 100 example.
    const double u = std::sqrt((std::log(std::log(200.0)) + std::log(5.2 / 0.05)) / 100.0);
    CHECK(u == doctest::Approx(0.251235).epsilon(1e-5));
    const double margin = lil_lower_bound(100, 0.5, 0.05, 1.7, 2.0, 5.2);
    CHECK(margin == doctest::Approx(0.5 - 1.7 * u).epsilon(1e-10));
    CHECK(margin == doctest::Approx(0.0729005).epsilon(1e-4));

    // Zero running mean never stops.
    for (long n : {10L, 100L, 10000L})
        CHECK(lil_lower_bound(n, 0.0, 0.05, 1.7, 2.0, 5.2) < 0.0);

    // Boundary width strictly decreasing in n.
    double prev = 1e100;
    for (long n = 3; n <= 3000; n = n * 3 / 2 + 1) {
        const double width = 0.5 - lil_lower_bound(n, 0.5, 0.05, 1.7, 2.0, 5.2);
        CHECK(width < prev);
        prev = width;
    }

    // Undefined boundary region: c2 * n <= e.
    CHECK(std::isinf(lil_lower_bound(1, 0.9, 0.05, 1.7, 1.0, 5.2)));

    KernelConfig k = kernel_of(KernelKind::LILConfidence);
    k.lil_alpha = 0.05;
    auto e = make_eprocess(k);
    for (int i = 0; i < 50; ++i) e->update(1.0);
    CHECK(e->log_e() ==
          doctest::Approx(lil_lower_bound(50, 1.0, 0.05, 1.7, 2.0, 5.2)).epsilon(1e-12));
    CHECK(e->should_stop(0.05) == (e->log_e() > 0.0));
}

TEST_CASE("constraint mixture closed cases") {
    const ConstraintSystem sys = mean_constraint(0.5);
    CHECK(constraint_mixture_log_value(sys, std::vector<double>{}) == 0.0);
    CHECK(constraint_mixture_log_value(sys, std::vector<double>{0.5}) ==
          doctest::Approx(0.0).epsilon(1e-12));
    // One sample at x = 0: the average of (1 - pi/2) over pi in [-1,1] is 1,
    // and the symmetric midpoint grid reproduces it exactly.
    CHECK(constraint_mixture_log_value(sys, std::vector<double>{0.0}) ==
          doctest::Approx(0.0).epsilon(1e-6));
}

TEST_CASE("constraint mixture kernel matches the standalone value") {
    KernelConfig k = kernel_of(KernelKind::ConstraintMixture);
    k.constraint = mean_constraint(0.5, 129);
    auto e = make_eprocess(k);
    SeededStream stream(33, 0);
    const auto Q = DiscreteBoundedDist::bernoulli(0.25);
    std::vector<double> prefix;
    for (int i = 0; i < 40; ++i) {
        const double x = sample(Q, stream);
        prefix.push_back(x);
        e->update(x);
    }
    CHECK(e->log_e() ==
          doctest::Approx(constraint_mixture_log_value(*k.constraint, prefix))
              .epsilon(1e-10));
}

TEST_CASE("constraint system validation") {
    ConstraintSystem sys = mean_constraint(0.5);
    CHECK_NOTHROW(sys.validate());

    ConstraintSystem empty;
    CHECK_THROWS_AS(empty.validate(), std::domain_error);

    // A box so wide that S^pi goes negative on [0,1].
    ConstraintSystem wide = mean_constraint(0.5);
    wide.box_lo = {-5.0, -1.0};
    wide.box_hi = {5.0, 1.0};
    CHECK_THROWS_AS(wide.validate(), std::domain_error);

    ConstraintSystem inverted = mean_constraint(0.5);
    inverted.box_lo = {1.0, -1.0};
    inverted.box_hi = {-1.0, 1.0};
    CHECK_THROWS_AS(inverted.validate(), std::domain_error);
}

TEST_CASE("growth rate under the alternative") {
    // (1/n) log E_n at n = 5000 within 10% of the separation rate.
    SeededStream s1(50, 0), s2(51, 0), s3(52, 0);
    const long n = 5000;

    auto num = make_eprocess(kernel_of(KernelKind::NumeraireSubGaussian, 0.5));
    for (long i = 0; i < n; ++i) num->update(sample(GaussianDist{0.5, 1.0}, s1));
    CHECK(num->log_e() / n == doctest::Approx(0.125).epsilon(0.10));

    auto mix = make_eprocess(kernel_of(KernelKind::MixtureSubGaussian));
    for (long i = 0; i < n; ++i) mix->update(sample(GaussianDist{0.5, 1.0}, s2));
    CHECK(mix->log_e() / n == doctest::Approx(0.125).epsilon(0.10));

    const double rate = klinf_bounded(DiscreteBoundedDist::bernoulli(0.25), 0.5).value;
    auto emp = make_eprocess(kernel_of(KernelKind::KLinfEmpirical, 0.5));
    const auto Q = DiscreteBoundedDist::bernoulli(0.25);
    for (long i = 0; i < n; ++i) emp->update(sample(Q, s3));
    CHECK(emp->log_e() / n == doctest::Approx(rate).epsilon(0.10));
}

TEST_CASE("supermartingale mean at fixed n under a null member") {
    // MC mean of E_n at n = 10 stays below 1 plus three standard errors.
    const long reps = 5000, n = 10;
    SeededStream base(60, 0);
    std::vector<double> values;
    for (long r = 0; r < reps; ++r) {
        SeededStream stream(60, static_cast<std::uint64_t>(r), 1);
        auto e = make_eprocess(kernel_of(KernelKind::NumeraireSubGaussian, 0.5));
        for (long i = 0; i < n; ++i) e->update(sample(GaussianDist{0.0, 1.0}, stream));
        values.push_back(std::exp(e->log_e()));
    }
    double mean = 0.0;
    for (double v : values) mean += v;
    mean /= reps;
    double var = 0.0;
    for (double v : values) var += (v - mean) * (v - mean);
    const double se = std::sqrt(var / (reps - 1) / reps);
    CHECK(mean <= 1.0 + 3.0 * se);
}

#include <doctest.h>

#include <cmath>
#include <stdexcept>

#include "seqtest/bounds.hpp"

using namespace seqtest;

TEST_CASE("expected-sample floor") {
    CHECK(lb_expected_samples(0.01, 0.125) == doctest::Approx(36.8414).epsilon(1e-5));
    CHECK(lb_expected_samples(1.0, 0.125) == 0.0);
    CHECK(std::isinf(lb_expected_samples(0.01, 0.0)));

    // Halving alpha adds log 2 / klinf.
    const double k = 0.2;
    CHECK(lb_expected_samples(0.01, k) + std::log(2.0) / k ==
          doctest::Approx(lb_expected_samples(0.005, k)).epsilon(1e-12));

    CHECK_THROWS_AS(lb_expected_samples(0.0, 0.1), std::domain_error);
    CHECK_THROWS_AS(lb_expected_samples(0.1, -1.0), std::domain_error);
}

TEST_CASE("gap complexity function") {
    CHECK(f_delta(0.1) == doctest::Approx(100.0 * std::log(std::log(10.0))).epsilon(1e-12));
    CHECK(f_delta(0.1) == doctest::Approx(83.4032).epsilon(1e-5));
    CHECK(f_delta(std::exp(-std::exp(1.0))) ==
          doctest::Approx(std::exp(2.0 * std::exp(1.0))).epsilon(1e-10));

    double prev = 1e300;
    for (double d = 0.01; d < std::exp(-1.0); d += 0.03) {
        const double v = f_delta(d);
        CHECK(v < prev);
        prev = v;
    }
    CHECK_THROWS_AS(f_delta(0.5), std::domain_error);
    CHECK_THROWS_AS(f_delta(0.0), std::domain_error);
}

TEST_CASE("gaussian separation") {
    CHECK(klinf_gaussian(0.0, 0.5) == doctest::Approx(0.125).epsilon(1e-12));
    CHECK(klinf_gaussian(0.3, 0.3) == 0.0);
    CHECK(klinf_gaussian(0.1, 0.7) == klinf_gaussian(0.7, 0.1));
}

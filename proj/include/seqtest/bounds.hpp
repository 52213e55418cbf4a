#pragma once

namespace seqtest {

// log(1/alpha) / klinf; +infinity at klinf = 0.
double lb_expected_samples(double alpha, double klinf);

// F(delta) = delta^-2 log log delta^-1 on (0, 1/e); natural logs.
double f_delta(double delta);

// Unit-variance Gaussian separation: (m_p - m_q)^2 / 2.
double klinf_gaussian(double m_q, double m_p);

}  // namespace seqtest

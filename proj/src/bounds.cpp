#include "seqtest/bounds.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace seqtest {

double lb_expected_samples(double alpha, double klinf) {
    if (!(alpha > 0.0 && alpha <= 1.0))
        throw std::domain_error("lb_expected_samples: alpha outside (0,1]");
    if (klinf < 0.0) throw std::domain_error("lb_expected_samples: negative klinf");
    if (klinf == 0.0) return std::numeric_limits<double>::infinity();
    return std::log(1.0 / alpha) / klinf;
}

double f_delta(double delta) {
    if (!(delta > 0.0 && delta < std::exp(-1.0)))
        throw std::domain_error("f_delta: delta outside (0, 1/e)");
    return std::log(std::log(1.0 / delta)) / (delta * delta);
}

double klinf_gaussian(double m_q, double m_p) {
    const double d = m_p - m_q;
    return 0.5 * d * d;
}

}  // namespace seqtest

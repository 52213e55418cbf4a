#pragma once

// Independent reference computations used by the unit and acceptance tests.
// These deliberately avoid the library's solver path: the objective is
// re-implemented locally and maximized by scanning a fixed lambda grid.

#include <cmath>
#include <cstddef>
#include <limits>
#include <vector>

namespace oracle {

inline double objective(const std::vector<double>& atoms,
                        const std::vector<double>& weights, double m,
                        double lambda) {
    double v = 0.0;
    for (std::size_t i = 0; i < atoms.size(); ++i) {
        if (weights[i] == 0.0) continue;
        const double arg = 1.0 - lambda * (atoms[i] - m);
        if (arg <= 0.0) return -std::numeric_limits<double>::infinity();
        v += weights[i] * std::log(arg);
    }
    return v;
}

struct GridMax {
    double lambda = 0.0;
    double value = 0.0;
};

// Exact maximum over the `points`-point uniform lambda grid on [lo, hi],
// found by a coarse scan followed by a fine scan around the coarse winner.
// The objective is concave in lambda, so the coarse bracket contains the
// grid argmax.
inline GridMax grid_search(const std::vector<double>& atoms,
                           const std::vector<double>& weights, double m,
                           double lo, double hi, long points = 1000000) {
    const double step = (hi - lo) / static_cast<double>(points - 1);
    const long coarse_stride = points > 4000 ? points / 1000 : 1;
    long best_i = 0;
    double best_v = -std::numeric_limits<double>::infinity();
    for (long i = 0; i < points; i += coarse_stride) {
        const double v = objective(atoms, weights, m, lo + step * i);
        if (v > best_v) {
            best_v = v;
            best_i = i;
        }
    }
    // Also probe the last grid point, which the stride may skip.
    {
        const double v = objective(atoms, weights, m, hi);
        if (v > best_v) {
            best_v = v;
            best_i = points - 1;
        }
    }
    const long fine_lo = best_i > coarse_stride ? best_i - coarse_stride : 0;
    const long fine_hi =
        best_i + coarse_stride < points ? best_i + coarse_stride : points - 1;
    for (long i = fine_lo; i <= fine_hi; ++i) {
        const double v = objective(atoms, weights, m, lo + step * i);
        if (v > best_v) {
            best_v = v;
            best_i = i;
        }
    }
    GridMax out;
    out.lambda = lo + step * best_i;
    out.value = best_v > 0.0 ? best_v : 0.0;
    return out;
}

// Brute-force scan of every grid point; used to validate grid_search itself.
inline GridMax full_scan(const std::vector<double>& atoms,
                         const std::vector<double>& weights, double m,
                         double lo, double hi, long points = 1000000) {
    const double step = (hi - lo) / static_cast<double>(points - 1);
    GridMax out;
    double best_v = -std::numeric_limits<double>::infinity();
    for (long i = 0; i < points; ++i) {
        const double v = objective(atoms, weights, m, lo + step * i);
        if (v > best_v) {
            best_v = v;
            out.lambda = lo + step * i;
        }
    }
    out.value = best_v > 0.0 ? best_v : 0.0;
    return out;
}

}  // namespace oracle

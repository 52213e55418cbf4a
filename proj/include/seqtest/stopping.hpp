#pragma once

#include <optional>
#include <vector>

#include "seqtest/distributions.hpp"
#include "seqtest/eprocess.hpp"

namespace seqtest {

struct StoppingRecord {
    bool stopped = false;
    std::optional<long> tau;  // samples consumed, set only when stopped
    long horizon = 0;
    double final_log_e = 0.0;
    // log E_{tau-1}, for the first-crossing minimality check; tracked only
    // when requested (costs one log_e evaluation per step).
    double pre_crossing_log_e = 0.0;
};

// Feeds i.i.d. draws from dist into a fresh kernel and stops at the first n
// where the kernel's stop rule fires, truncating at horizon.
StoppingRecord run_threshold(const KernelConfig& config, const Dist& dist,
                             double alpha, long horizon, SeededStream& stream,
                             bool record_pre_crossing = false);

struct MetaSchedule {
    double alpha = 0.0;
    int max_copies = 20;
    std::vector<double> per_copy_alphas;  // alpha_i = alpha / 2^i

    static MetaSchedule make(double alpha, int max_copies = 20);
};

struct MetaCopyDiagnostics {
    int copy_index = 0;
    double copy_alpha = 0.0;
    long samples = 0;
    bool crossed = false;
};

struct MetaRecord {
    StoppingRecord record;
    std::vector<MetaCopyDiagnostics> copies;
};

// Interleaves copies of the base test at levels alpha/2^i: at scheduler step
// r, copy i draws one sample iff 2^i divides r. Each copy has its own forked
// sample stream. tau counts total samples across copies; the run stops when
// any copy crosses its own 1/alpha_i threshold.
MetaRecord run_meta(const KernelConfig& base_config, const Dist& dist,
                    double alpha, long horizon, SeededStream& stream,
                    int max_copies = 20);

// 1 + (d/(gamma c1)) log log(c2/(gamma c1)) + (1/((1-gamma) c1)) log(c3/alpha).
double tau_alpha_closed_bound(double c1, double c2, double c3, double alpha,
                              double gamma, double d);

}  // namespace seqtest

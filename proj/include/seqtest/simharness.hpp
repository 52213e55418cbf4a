#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "seqtest/distributions.hpp"
#include "seqtest/eprocess.hpp"
#include "seqtest/stopping.hpp"

namespace seqtest {

struct ExperimentConfig {
    KernelConfig kernel;
    Dist alt_dist = DiscreteBoundedDist::bernoulli(0.5);
    Dist null_dist = DiscreteBoundedDist::bernoulli(0.5);
    std::vector<double> alpha_grid;  // strictly decreasing
    double alpha = 0.05;
    long replications = 1000;
    long horizon = 1000000;
    std::uint64_t master_seed = 1;
    int workers = 1;
    std::string output_path;

    void validate_grid() const;  // throws if alpha_grid not strictly decreasing
};

// Runs fn(rep) for rep in [0, reps) on up to `workers` threads. Work is
// partitioned by replication index; fn must write only to its own slot.
void parallel_for_reps(long reps, int workers,
                       const std::function<void(long)>& fn);

// Per-replication stream id, fixed per experiment so different experiments
// sharing a master seed draw independent randomness.
enum class StreamId : std::uint64_t {
    ExpectedTau = 1,
    Type1 = 2,
    Concentration = 3,
    Meta = 4,
};

struct TauEstimate {
    double mean = 0.0;           // over stopped replications only
    double standard_error = 0.0;
    double nonstop_fraction = 0.0;
    long stopped = 0;
    long replications = 0;
};

// Condition-on-stopping mean of tau; throws std::runtime_error when no
// replication stops within the horizon.
TauEstimate estimate_expected_tau(const ExperimentConfig& config,
                                  std::vector<long>* taus_out = nullptr);

struct Type1Result {
    double crossing_rate = 0.0;
    double binomial_se = 0.0;
    long crossings = 0;
    long replications = 0;
};

Type1Result type1_experiment(const ExperimentConfig& config);

struct ScalingRow {
    double alpha = 0.0;
    double mean_tau = 0.0;
    double standard_error = 0.0;
    double nonstop_fraction = 0.0;
    double lb_floor = 0.0;
};

struct ScalingResult {
    std::vector<ScalingRow> rows;
    double fitted_slope = 0.0;     // least squares of mean_tau on log(1/alpha)
    double fitted_intercept = 0.0;
    double reference_slope = 0.0;  // 1 / klinf
};

// Mean tau across config.alpha_grid against log(1/alpha); reference_klinf
// feeds the floor column and reference slope.
ScalingResult alpha_scaling(const ExperimentConfig& config, double reference_klinf);

struct GapRow {
    double delta = 0.0;
    double klinf = 0.0;
    double mean_tau = 0.0;
    double standard_error = 0.0;
    double nonstop_fraction = 0.0;
    double ratio = 0.0;  // mean_tau * klinf / log log(1/klinf)
};

// One row per (delta, alternative) pair; klinf values supplied by the caller
// so Gaussian and bounded sequences share the interface.
std::vector<GapRow> gap_scaling(const ExperimentConfig& base,
                                const std::vector<double>& deltas,
                                const std::vector<Dist>& alternatives,
                                const std::vector<double>& klinf_values);

struct ConcentrationRow {
    long n = 0;
    double eps = 0.0;
    double empirical_rate = 0.0;
    double analytic_bound = 0.0;
    double binomial_se = 0.0;
};

struct ConcentrationResult {
    std::vector<ConcentrationRow> fixed_n;
    double time_uniform_rate = 0.0;   // DH boundary violation frequency
    double time_uniform_alpha = 0.0;
    double time_uniform_se = 0.0;
};

// Fixed-n lower-deviation frequency of sqrt(tilde value of the empirical
// distribution) vs the analytic bound, plus the time-uniform DH check over
// n <= n_max (evaluated at dyadic block ends where the statistic changes).
ConcentrationResult concentration_experiment(const DiscreteBoundedDist& P, double m,
                                             const std::vector<long>& n_grid, double eps,
                                             long n_max, double tu_alpha,
                                             long replications, std::uint64_t master_seed,
                                             int workers);

struct MetaResult {
    double base_mean_tau = 0.0;  // conditional on stopping, same alpha
    double base_nonstop_fraction = 0.0;
    double meta_mean_samples = 0.0;
    double meta_standard_error = 0.0;
    double meta_nonstop_fraction = 0.0;
    double overhead_bound = 0.0;  // 4(1-alpha)/(1-2alpha)^2 * base_mean_tau
};

MetaResult meta_experiment(const ExperimentConfig& config);

// CSV with a header row; all values printed at full double precision.
void write_csv(const std::string& path, const std::vector<std::string>& header,
               const std::vector<std::vector<double>>& rows);
std::string csv_to_string(const std::vector<std::string>& header,
                          const std::vector<std::vector<double>>& rows);

}  // namespace seqtest

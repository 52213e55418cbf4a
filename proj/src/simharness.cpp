#include "seqtest/simharness.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <mutex>
#include <stdexcept>
#include <thread>

#include "seqtest/bounds.hpp"
#include "seqtest/klinf.hpp"

namespace seqtest {

namespace {

std::uint64_t stream_key(StreamId id, const KernelConfig& kernel,
                         std::uint64_t salt = 0) {
    return (static_cast<std::uint64_t>(id) << 16) |
           (static_cast<std::uint64_t>(kernel.kind) << 8) | salt;
}

double sample_mean(const std::vector<double>& v) {
    double s = 0.0;
    for (double x : v) s += x;
    return s / static_cast<double>(v.size());
}

double sample_se(const std::vector<double>& v, double mean) {
    if (v.size() < 2) return 0.0;
    double s = 0.0;
    for (double x : v) s += (x - mean) * (x - mean);
    return std::sqrt(s / static_cast<double>(v.size() - 1) /
                     static_cast<double>(v.size()));
}

struct RepOutcome {
    bool stopped = false;
    long tau = 0;
};

TauEstimate reduce_outcomes(const std::vector<RepOutcome>& outcomes,
                            std::vector<long>* taus_out) {
    std::vector<double> taus;
    long stopped = 0;
    for (const auto& o : outcomes) {
        if (!o.stopped) continue;
        ++stopped;
        taus.push_back(static_cast<double>(o.tau));
        if (taus_out) taus_out->push_back(o.tau);
    }
    TauEstimate est;
    est.replications = static_cast<long>(outcomes.size());
    est.stopped = stopped;
    est.nonstop_fraction =
        1.0 - static_cast<double>(stopped) / static_cast<double>(outcomes.size());
    if (stopped == 0)
        throw std::runtime_error("estimate_expected_tau: no replication stopped");
    est.mean = sample_mean(taus);
    est.standard_error = sample_se(taus, est.mean);
    return est;
}

TauEstimate run_tau_batch(const ExperimentConfig& config, std::uint64_t stream_id,
                          std::vector<long>* taus_out) {
    std::vector<RepOutcome> outcomes(static_cast<std::size_t>(config.replications));
    parallel_for_reps(config.replications, config.workers, [&](long rep) {
        SeededStream stream(config.master_seed, static_cast<std::uint64_t>(rep),
                            stream_id);
        const StoppingRecord rec = run_threshold(config.kernel, config.alt_dist,
                                                 config.alpha, config.horizon, stream);
        outcomes[static_cast<std::size_t>(rep)] = {rec.stopped,
                                                   rec.stopped ? *rec.tau : 0};
    });
    return reduce_outcomes(outcomes, taus_out);
}

}  // namespace

void ExperimentConfig::validate_grid() const {
    for (std::size_t i = 1; i < alpha_grid.size(); ++i)
        if (!(alpha_grid[i] < alpha_grid[i - 1]))
            throw std::invalid_argument("alpha_grid must be strictly decreasing");
}

void parallel_for_reps(long reps, int workers, const std::function<void(long)>& fn) {
    if (workers < 1) throw std::invalid_argument("parallel_for_reps: workers < 1");
    if (reps <= 0) return;
    const int n_threads = static_cast<int>(
        std::min<long>(workers, reps));
    if (n_threads == 1) {
        for (long rep = 0; rep < reps; ++rep) fn(rep);
        return;
    }
    std::vector<std::thread> threads;
    std::exception_ptr first_error;
    std::mutex error_mutex;
    for (int t = 0; t < n_threads; ++t) {
        threads.emplace_back([&, t]() {
            try {
                for (long rep = t; rep < reps; rep += n_threads) fn(rep);
            } catch (...) {
                std::lock_guard<std::mutex> lock(error_mutex);
                if (!first_error) first_error = std::current_exception();
            }
        });
    }
    for (auto& th : threads) th.join();
    if (first_error) std::rethrow_exception(first_error);
}

TauEstimate estimate_expected_tau(const ExperimentConfig& config,
                                  std::vector<long>* taus_out) {
    if (config.replications < 1)
        throw std::invalid_argument("estimate_expected_tau: replications < 1");
    return run_tau_batch(config, stream_key(StreamId::ExpectedTau, config.kernel),
                         taus_out);
}

Type1Result type1_experiment(const ExperimentConfig& config) {
    std::vector<char> crossed(static_cast<std::size_t>(config.replications), 0);
    parallel_for_reps(config.replications, config.workers, [&](long rep) {
        SeededStream stream(config.master_seed, static_cast<std::uint64_t>(rep),
                            stream_key(StreamId::Type1, config.kernel));
        const StoppingRecord rec = run_threshold(config.kernel, config.null_dist,
                                                 config.alpha, config.horizon, stream);
        crossed[static_cast<std::size_t>(rep)] = rec.stopped ? 1 : 0;
    });
    Type1Result res;
    res.replications = config.replications;
    for (char c : crossed) res.crossings += c;
    res.crossing_rate = static_cast<double>(res.crossings) /
                        static_cast<double>(res.replications);
    res.binomial_se = std::sqrt(res.crossing_rate * (1.0 - res.crossing_rate) /
                                static_cast<double>(res.replications));
    return res;
}

ScalingResult alpha_scaling(const ExperimentConfig& config, double reference_klinf) {
    if (config.alpha_grid.size() < 2)
        throw std::invalid_argument("alpha_scaling: need at least 2 alphas");
    config.validate_grid();
    ScalingResult result;
    result.reference_slope = 1.0 / reference_klinf;
    for (std::size_t i = 0; i < config.alpha_grid.size(); ++i) {
        ExperimentConfig point = config;
        point.alpha = config.alpha_grid[i];
        const TauEstimate est = run_tau_batch(
            point, stream_key(StreamId::ExpectedTau, config.kernel, i + 1), nullptr);
        result.rows.push_back({point.alpha, est.mean, est.standard_error,
                               est.nonstop_fraction,
                               lb_expected_samples(point.alpha, reference_klinf)});
    }
    // Unweighted least squares of mean_tau on log(1/alpha); the intercept
    // absorbs overshoot and boundary constants.
    double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
    const double n = static_cast<double>(result.rows.size());
    for (const auto& row : result.rows) {
        const double x = std::log(1.0 / row.alpha);
        sx += x;
        sy += row.mean_tau;
        sxx += x * x;
        sxy += x * row.mean_tau;
    }
    result.fitted_slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
    result.fitted_intercept = (sy - result.fitted_slope * sx) / n;
    return result;
}

std::vector<GapRow> gap_scaling(const ExperimentConfig& base,
                                const std::vector<double>& deltas,
                                const std::vector<Dist>& alternatives,
                                const std::vector<double>& klinf_values) {
    if (deltas.size() != alternatives.size() || deltas.size() != klinf_values.size())
        throw std::invalid_argument("gap_scaling: mismatched sequence lengths");
    std::vector<GapRow> rows;
    for (std::size_t i = 0; i < deltas.size(); ++i) {
        ExperimentConfig point = base;
        point.alt_dist = alternatives[i];
        const TauEstimate est = run_tau_batch(
            point, stream_key(StreamId::ExpectedTau, base.kernel, 64 + i), nullptr);
        const double klinf = klinf_values[i];
        if (!(klinf > 0.0 && klinf < std::exp(-1.0)))
            throw std::domain_error("gap_scaling: klinf outside (0, 1/e)");
        const double scale = std::log(std::log(1.0 / klinf));
        rows.push_back({deltas[i], klinf, est.mean, est.standard_error,
                        est.nonstop_fraction, est.mean * klinf / scale});
    }
    return rows;
}

ConcentrationResult concentration_experiment(const DiscreteBoundedDist& P, double m,
                                             const std::vector<long>& n_grid, double eps,
                                             long n_max, double tu_alpha,
                                             long replications, std::uint64_t master_seed,
                                             int workers) {
    const double tilde_true = klinf_tilde(P, m).value;
    const double sqrt_true = std::sqrt(tilde_true);
    const ConcentrationConstants constants = concentration_constants(P, m);
    ConcentrationResult result;
    result.time_uniform_alpha = tu_alpha;

    for (std::size_t g = 0; g < n_grid.size(); ++g) {
        const long n = n_grid[g];
        std::vector<char> hit(static_cast<std::size_t>(replications), 0);
        parallel_for_reps(replications, workers, [&](long rep) {
            SeededStream stream(master_seed, static_cast<std::uint64_t>(rep),
                                (static_cast<std::uint64_t>(StreamId::Concentration) << 16) | g);
            std::vector<double> xs(static_cast<std::size_t>(n));
            for (auto& x : xs) x = sample(P, stream);
            const double tilde_emp = klinf_tilde(empirical(xs), m).value;
            if (std::sqrt(tilde_emp) <= sqrt_true - eps)
                hit[static_cast<std::size_t>(rep)] = 1;
        });
        long count = 0;
        for (char c : hit) count += c;
        const double rate = static_cast<double>(count) / static_cast<double>(replications);
        result.fixed_n.push_back(
            {n, eps, rate, hoeffding_dev_bound(P, m, n, eps),
             std::sqrt(rate * (1.0 - rate) / static_cast<double>(replications))});
    }

    // Time-uniform DH check. The doubling statistic is constant on each
    // dyadic block [2^k, 2^{k+1}-1] and the boundary is unimodal in n, so a
    // violation anywhere in a block implies one at a block endpoint.
    std::vector<char> violated(static_cast<std::size_t>(replications), 0);
    parallel_for_reps(replications, workers, [&](long rep) {
        SeededStream stream(master_seed, static_cast<std::uint64_t>(rep),
                            (static_cast<std::uint64_t>(StreamId::Concentration) << 16) | 0xffU);
        // Incremental atom counts over the sample prefix; avoids re-sorting
        // the prefix at every dyadic block.
        std::vector<double> atoms = P.atoms();
        std::vector<double> counts(atoms.size(), 0.0);
        std::vector<double> weights(atoms.size());
        long drawn = 0;
        double warm = 0.0;
        for (long block = 2; block <= n_max; block *= 2) {
            while (drawn < block) {
                const double x = sample(P, stream);
                const auto it = std::lower_bound(atoms.begin(), atoms.end(),
                                                 x - DiscreteBoundedDist::kAtomMergeTol);
                counts[static_cast<std::size_t>(it - atoms.begin())] += 1.0;
                ++drawn;
            }
            for (std::size_t i = 0; i < atoms.size(); ++i)
                weights[i] = counts[i] / static_cast<double>(drawn);
            const DualSolution sol = solve_dual(atoms, weights, m, -1.0, 1.0, warm);
            warm = sol.lambda_star;
            const long block_end = std::min(2 * block - 1, n_max);
            for (long n : {block, block_end}) {
                if (std::sqrt(sol.value) <
                    sqrt_true - dh_boundary(n, tu_alpha, constants)) {
                    violated[static_cast<std::size_t>(rep)] = 1;
                    return;
                }
            }
        }
    });
    long count = 0;
    for (char c : violated) count += c;
    result.time_uniform_rate =
        static_cast<double>(count) / static_cast<double>(replications);
    result.time_uniform_se = std::sqrt(result.time_uniform_rate *
                                       (1.0 - result.time_uniform_rate) /
                                       static_cast<double>(replications));
    return result;
}

MetaResult meta_experiment(const ExperimentConfig& config) {
    MetaResult result;
    const TauEstimate base = estimate_expected_tau(config, nullptr);
    result.base_mean_tau = base.mean;
    result.base_nonstop_fraction = base.nonstop_fraction;

    std::vector<RepOutcome> outcomes(static_cast<std::size_t>(config.replications));
    parallel_for_reps(config.replications, config.workers, [&](long rep) {
        SeededStream stream(config.master_seed, static_cast<std::uint64_t>(rep),
                            stream_key(StreamId::Meta, config.kernel));
        const MetaRecord rec = run_meta(config.kernel, config.alt_dist, config.alpha,
                                        config.horizon, stream);
        outcomes[static_cast<std::size_t>(rep)] = {
            rec.record.stopped, rec.record.stopped ? *rec.record.tau : 0};
    });
    const TauEstimate meta = reduce_outcomes(outcomes, nullptr);
    result.meta_mean_samples = meta.mean;
    result.meta_standard_error = meta.standard_error;
    result.meta_nonstop_fraction = meta.nonstop_fraction;
    const double a = config.alpha;
    result.overhead_bound =
        4.0 * (1.0 - a) / ((1.0 - 2.0 * a) * (1.0 - 2.0 * a)) * base.mean;
    return result;
}

std::string csv_to_string(const std::vector<std::string>& header,
                          const std::vector<std::vector<double>>& rows) {
    std::string out;
    for (std::size_t i = 0; i < header.size(); ++i) {
        if (i) out += ',';
        out += header[i];
    }
    out += '\n';
    char buf[64];
    for (const auto& row : rows) {
        if (row.size() != header.size())
            throw std::invalid_argument("csv_to_string: row width mismatch");
        for (std::size_t i = 0; i < row.size(); ++i) {
            if (i) out += ',';
            std::snprintf(buf, sizeof buf, "%.17g", row[i]);
            out += buf;
        }
        out += '\n';
    }
    return out;
}

void write_csv(const std::string& path, const std::vector<std::string>& header,
               const std::vector<std::vector<double>>& rows) {
    std::ofstream file(path, std::ios::binary);
    if (!file) throw std::runtime_error("write_csv: cannot open " + path);
    file << csv_to_string(header, rows);
}

}  // namespace seqtest

#include "seqtest/stopping.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace seqtest {

StoppingRecord run_threshold(const KernelConfig& config, const Dist& dist,
                             double alpha, long horizon, SeededStream& stream,
                             bool record_pre_crossing) {
    if (!(alpha > 0.0 && alpha <= 1.0))
        throw std::invalid_argument("run_threshold: alpha outside (0,1]");
    if (horizon < 1) throw std::invalid_argument("run_threshold: horizon < 1");
    auto kernel = make_eprocess(config);
    StoppingRecord rec;
    rec.horizon = horizon;
    double prev_log_e = kernel->log_e();
    for (long n = 1; n <= horizon; ++n) {
        kernel->update(sample(dist, stream));
        if (kernel->should_stop(alpha)) {
            rec.stopped = true;
            rec.tau = n;
            rec.final_log_e = kernel->log_e();
            rec.pre_crossing_log_e = prev_log_e;
            return rec;
        }
        if (record_pre_crossing) prev_log_e = kernel->log_e();
    }
    rec.final_log_e = kernel->log_e();
    rec.pre_crossing_log_e = prev_log_e;
    return rec;
}

MetaSchedule MetaSchedule::make(double alpha, int max_copies) {
    if (!(alpha > 0.0 && alpha < 0.5))
        throw std::invalid_argument("MetaSchedule: alpha outside (0,0.5)");
    if (max_copies < 1) throw std::invalid_argument("MetaSchedule: max_copies < 1");
    MetaSchedule s;
    s.alpha = alpha;
    s.max_copies = max_copies;
    double a = alpha;
    for (int i = 1; i <= max_copies; ++i) {
        a *= 0.5;
        s.per_copy_alphas.push_back(a);
    }
    return s;
}

namespace {

struct MetaCopy {
    std::unique_ptr<EProcess> kernel;
    SeededStream stream;
    long samples = 0;
};

}  // namespace

MetaRecord run_meta(const KernelConfig& base_config, const Dist& dist,
                    double alpha, long horizon, SeededStream& stream,
                    int max_copies) {
    const MetaSchedule schedule = MetaSchedule::make(alpha, max_copies);
    if (horizon < 1) throw std::invalid_argument("run_meta: horizon < 1");

    std::vector<std::optional<MetaCopy>> copies(
        static_cast<std::size_t>(max_copies));

    MetaRecord out;
    out.record.horizon = horizon;
    long total_samples = 0;
    int crossed_copy = -1;

    for (std::uint64_t r = 1; crossed_copy < 0 && total_samples < horizon; ++r) {
        for (int i = 1; i <= max_copies; ++i) {
            if (r % (std::uint64_t{1} << i) != 0) continue;
            auto& slot = copies[static_cast<std::size_t>(i - 1)];
            if (!slot)
                slot = MetaCopy{make_eprocess(base_config),
                                stream.fork(static_cast<std::uint64_t>(i)), 0};
            if (total_samples >= horizon) break;
            slot->kernel->update(sample(dist, slot->stream));
            ++slot->samples;
            ++total_samples;
            if (slot->kernel->should_stop(
                    schedule.per_copy_alphas[static_cast<std::size_t>(i - 1)])) {
                crossed_copy = i;
                out.record.stopped = true;
                out.record.tau = total_samples;
                out.record.final_log_e = slot->kernel->log_e();
                break;
            }
        }
    }

    for (int i = 1; i <= max_copies; ++i) {
        const auto& slot = copies[static_cast<std::size_t>(i - 1)];
        if (!slot) continue;
        out.copies.push_back({i, schedule.per_copy_alphas[static_cast<std::size_t>(i - 1)],
                              slot->samples, crossed_copy == i});
    }
    if (!out.record.stopped && !copies.empty() && copies[0])
        out.record.final_log_e = copies[0]->kernel->log_e();
    return out;
}

double tau_alpha_closed_bound(double c1, double c2, double c3, double alpha,
                              double gamma, double d) {
    if (!(gamma > 0.0 && gamma < 1.0))
        throw std::domain_error("tau_alpha_closed_bound: gamma outside (0,1)");
    if (!(d >= 2.0)) throw std::domain_error("tau_alpha_closed_bound: d < 2");
    if (!(c1 > 0.0 && c2 > 0.0 && c3 > 0.0))
        throw std::domain_error("tau_alpha_closed_bound: constants must be positive");
    const double ratio = c2 / (gamma * c1);
    if (!(ratio > std::exp(1.0)))
        throw std::domain_error("tau_alpha_closed_bound: c2/(gamma c1) <= e");
    return 1.0 + (d / (gamma * c1)) * std::log(std::log(ratio)) +
           (1.0 / ((1.0 - gamma) * c1)) * std::log(c3 / alpha);
}

}  // namespace seqtest

#include "seqtest/eprocess.hpp"

#include <algorithm>
#include <bit>
#include <cstring>
#include <limits>
#include <stdexcept>
#include <unordered_map>

#include "seqtest/klinf.hpp"

namespace seqtest {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

class LikelihoodRatioKernel final : public EProcess {
public:
    LikelihoodRatioKernel(const Dist& null_dist, const Dist& alt_dist) {
        if (auto* pg = std::get_if<GaussianDist>(&null_dist)) {
            auto* qg = std::get_if<GaussianDist>(&alt_dist);
            if (!qg || pg->variance != 1.0 || qg->variance != 1.0)
                throw std::invalid_argument(
                    "LikelihoodRatio: Gaussian pairs must both have unit variance");
            gaussian_ = true;
            m_p_ = pg->mean;
            m_q_ = qg->mean;
            return;
        }
        const auto& p = std::get<DiscreteBoundedDist>(null_dist);
        auto* q = std::get_if<DiscreteBoundedDist>(&alt_dist);
        if (!q) throw std::invalid_argument("LikelihoodRatio: mixed distribution kinds");
        if (std::isinf(kl_divergence(*q, p)))
            throw std::invalid_argument("LikelihoodRatio: Q not absolutely continuous wrt P");
        p_ = p;
        q_ = *q;
    }

    void update(double x) override {
        ++n_;
        if (gaussian_) {
            log_e_ += (m_q_ - m_p_) * x - 0.5 * (m_q_ * m_q_ - m_p_ * m_p_);
            return;
        }
        const long j = p_->find_atom(x);
        if (j < 0 || p_->weights()[j] == 0.0) {
            log_e_ = kInf;  // zero null density: trajectory stops
            return;
        }
        const long i = q_->find_atom(x);
        const double qw = i < 0 ? 0.0 : q_->weights()[i];
        log_e_ += qw == 0.0 ? -kInf : std::log(qw / p_->weights()[j]);
    }

    double log_e() const override { return log_e_; }

private:
    bool gaussian_ = false;
    double m_p_ = 0.0, m_q_ = 0.0;
    std::optional<DiscreteBoundedDist> p_, q_;
    double log_e_ = 0.0;
};

class NumeraireKernel final : public EProcess {
public:
    explicit NumeraireKernel(double m) : m_(m) {
        if (!(m > 0.0)) throw std::invalid_argument("NumeraireSubGaussian: requires m > 0");
    }
    void update(double x) override {
        ++n_;
        log_e_ += m_ * x - 0.5 * m_ * m_;
    }
    double log_e() const override { return log_e_; }

private:
    double m_;
    double log_e_ = 0.0;
};

class MixtureSubGaussianKernel final : public EProcess {
public:
    void update(double x) override {
        ++n_;
        sum_ += x;
    }
    double log_e() const override {
        const double np1 = static_cast<double>(n_) + 1.0;
        return -0.5 * std::log(np1) + sum_ * sum_ / (2.0 * np1);
    }

private:
    double sum_ = 0.0;
};

// Shared incremental empirical distribution over merged atoms.
class AtomCounts {
public:
    void add(double x) {
        auto it = std::lower_bound(atoms_.begin(), atoms_.end(),
                                   x - DiscreteBoundedDist::kAtomMergeTol);
        if (it != atoms_.end() && std::abs(*it - x) <= DiscreteBoundedDist::kAtomMergeTol) {
            counts_[static_cast<std::size_t>(it - atoms_.begin())] += 1.0;
        } else {
            const auto idx = static_cast<std::size_t>(it - atoms_.begin());
            atoms_.insert(it, x);
            counts_.insert(counts_.begin() + static_cast<long>(idx), 1.0);
        }
        ++total_;
        weights_.resize(counts_.size());
        const double inv = 1.0 / static_cast<double>(total_);
        for (std::size_t i = 0; i < counts_.size(); ++i) weights_[i] = counts_[i] * inv;
    }
    std::span<const double> atoms() const { return atoms_; }
    std::span<const double> weights() const { return weights_; }

private:
    std::vector<double> atoms_;
    std::vector<double> counts_;
    std::vector<double> weights_;
    long total_ = 0;
};

class KLinfEmpiricalKernel final : public EProcess {
public:
    explicit KLinfEmpiricalKernel(double m0) : m0_(m0) {
        if (!(m0 > 0.0 && m0 < 1.0))
            throw std::invalid_argument("KLinfEmpirical: m0 outside (0,1)");
    }
    void update(double x) override {
        if (!(x >= 0.0 && x <= 1.0))
            throw std::domain_error("KLinfEmpirical: sample outside [0,1]");
        ++n_;
        counts_.add(x);
        const DualSolution sol = solve_dual(counts_.atoms(), counts_.weights(), m0_,
                                            -1.0 / m0_, 1.0 / (1.0 - m0_), lambda_);
        lambda_ = sol.lambda_star;
        value_ = sol.value;
    }
    double log_e() const override {
        if (n_ == 0) return 0.0;
        return static_cast<double>(n_) * value_ - std::log(static_cast<double>(n_));
    }

private:
    double m0_;
    AtomCounts counts_;
    double lambda_ = 0.0;
    double value_ = 0.0;
};

class TildeDHKernel final : public EProcess {
public:
    TildeDHKernel(double m0, double r_n_const) : m0_(m0), r_n_const_(r_n_const) {
        if (!(m0 > 0.0 && m0 < 1.0))
            throw std::invalid_argument("TildeKLinfDH: m0 outside (0,1)");
    }
    void update(double x) override {
        if (!(x >= 0.0 && x <= 1.0))
            throw std::domain_error("TildeKLinfDH: sample outside [0,1]");
        ++n_;
        counts_.add(x);
        if (n_ == next_power_) {
            // Prefix of length 2^k is exactly the data seen so far.
            const DualSolution sol = solve_dual(counts_.atoms(), counts_.weights(), m0_,
                                                -1.0, 1.0, lambda_);
            lambda_ = sol.lambda_star;
            statistic_ = sol.value;
            next_power_ *= 2;
        }
    }
    double statistic() const { return statistic_; }
    double log_e() const override {
        return static_cast<double>(n_) * statistic_ - tilde_dh_r_n(n_, r_n_const_);
    }

private:
    double m0_;
    double r_n_const_;
    AtomCounts counts_;
    long next_power_ = 1;
    double lambda_ = 0.0;
    double statistic_ = 0.0;
};

class LILConfidenceKernel final : public EProcess {
public:
    LILConfidenceKernel(double alpha, double c1, double c2, double c3)
        : alpha_(alpha), c1_(c1), c2_(c2), c3_(c3) {}
    void update(double x) override {
        ++n_;
        sum_ += x;
    }
    double log_e() const override {
        if (n_ == 0) return -kInf;
        return lil_lower_bound(n_, sum_ / static_cast<double>(n_), alpha_, c1_, c2_, c3_);
    }
    bool should_stop(double) const override { return log_e() > 0.0; }

private:
    double alpha_, c1_, c2_, c3_;
    double sum_ = 0.0;
};

class ConstraintMixtureKernel final : public EProcess {
public:
    explicit ConstraintMixtureKernel(ConstraintSystem system) : system_(std::move(system)) {
        system_.validate();
        nodes_ = build_nodes(system_);
        sums_.assign(nodes_.size(), 0.0);
    }

    static std::vector<std::array<double, 2>> build_nodes(const ConstraintSystem& s) {
        const int n = s.quadrature_nodes_per_axis;
        if (n < 1) throw std::invalid_argument("ConstraintMixture: need >= 1 node per axis");
        std::vector<std::array<double, 2>> nodes;
        auto axis = [&](int k, int i) {
            const double h = (s.box_hi[static_cast<std::size_t>(k)] -
                              s.box_lo[static_cast<std::size_t>(k)]) / n;
            return s.box_lo[static_cast<std::size_t>(k)] + (i + 0.5) * h;  // midpoint rule
        };
        if (s.dim() == 1) {
            for (int i = 0; i < n; ++i) nodes.push_back({axis(0, i), 0.0});
        } else {
            for (int i = 0; i < n; ++i)
                for (int j = 0; j < n; ++j) nodes.push_back({axis(0, i), axis(1, j)});
        }
        return nodes;
    }

    void update(double x) override {
        ++n_;
        const CachedIncrements* inc = cached_increments(x);
        const double* iv = inc->values.data();
        for (std::size_t j = 0; j < sums_.size(); ++j) sums_[j] += iv[j];
        // Running upper bound on max_j sums_[j]; tightened lazily by
        // should_stop so the update loop stays a plain vector add.
        upper_bound_ += inc->max_value;
    }

    double log_e() const override {
        double mx = -kInf;
        for (double s : sums_) mx = std::max(mx, s);
        if (mx == -kInf) return -kInf;
        double acc = 0.0;
        for (double s : sums_) acc += std::exp(s - mx);
        return mx + std::log(acc) - std::log(static_cast<double>(sums_.size()));
    }

    bool should_stop(double alpha) const override {
        // log E_n <= max_j sums_[j] <= upper_bound_, so the cheap bound
        // screens the threshold without touching the node array.
        const double thr = std::log(1.0 / alpha);
        if (upper_bound_ < thr) return false;
        double mx = -kInf;
        for (double s : sums_) mx = std::max(mx, s);
        upper_bound_ = mx;
        if (mx < thr) return false;
        return log_e() >= thr;
    }

private:
    struct CachedIncrements {
        std::vector<double> values;
        double max_value = -kInf;
    };

    const CachedIncrements* cached_increments(double x) {
        std::uint64_t bits;
        std::memcpy(&bits, &x, sizeof bits);
        auto it = cache_.find(bits);
        if (it != cache_.end()) return &it->second;
        CachedIncrements inc;
        inc.values.resize(nodes_.size());
        std::vector<double> phi(system_.dim());
        for (std::size_t k = 0; k < system_.dim(); ++k)
            phi[k] = system_.constraint_functions[k](x);
        for (std::size_t j = 0; j < nodes_.size(); ++j) {
            double s = 1.0;
            for (std::size_t k = 0; k < system_.dim(); ++k) s += nodes_[j][k] * phi[k];
            inc.values[j] = s > 0.0 ? std::log(s) : -kInf;
            inc.max_value = std::max(inc.max_value, inc.values[j]);
        }
        if (cache_.size() >= 4096) cache_.clear();
        return &cache_.emplace(bits, std::move(inc)).first->second;
    }

    ConstraintSystem system_;
    std::vector<std::array<double, 2>> nodes_;
    std::vector<double> sums_;
    mutable double upper_bound_ = 0.0;
    std::unordered_map<std::uint64_t, CachedIncrements> cache_;
};

}  // namespace

void ConstraintSystem::validate() const {
    if (dim() == 0 || dim() > 2)
        throw std::domain_error("ConstraintSystem: K must be 1 or 2");
    for (std::size_t k = 0; k < dim(); ++k)
        if (!(box_lo[k] <= box_hi[k]))
            throw std::domain_error("ConstraintSystem: empty box");
    // S^pi must stay nonnegative over the sample space for every corner pi.
    const int probes = 101;
    std::vector<std::array<double, 2>> corners;
    if (dim() == 1) {
        corners = {{box_lo[0], 0.0}, {box_hi[0], 0.0}};
    } else {
        corners = {{box_lo[0], box_lo[1]}, {box_lo[0], box_hi[1]},
                   {box_hi[0], box_lo[1]}, {box_hi[0], box_hi[1]}};
    }
    for (int i = 0; i < probes; ++i) {
        const double x = domain_lo + (domain_hi - domain_lo) * i / (probes - 1);
        for (const auto& pi : corners) {
            double s = 1.0;
            for (std::size_t k = 0; k < dim(); ++k) s += pi[k] * constraint_functions[k](x);
            if (s < -1e-9)
                throw std::domain_error("ConstraintSystem: S^pi negative on the box");
        }
    }
}

std::unique_ptr<EProcess> make_eprocess(const KernelConfig& config) {
    switch (config.kind) {
        case KernelKind::LikelihoodRatio:
            if (!config.lr_null || !config.lr_alt)
                throw std::invalid_argument("LikelihoodRatio: needs null and alternative");
            return std::make_unique<LikelihoodRatioKernel>(*config.lr_null, *config.lr_alt);
        case KernelKind::NumeraireSubGaussian:
            return std::make_unique<NumeraireKernel>(config.m);
        case KernelKind::MixtureSubGaussian:
            return std::make_unique<MixtureSubGaussianKernel>();
        case KernelKind::KLinfEmpirical:
            return std::make_unique<KLinfEmpiricalKernel>(config.m);
        case KernelKind::TildeKLinfDH:
            return std::make_unique<TildeDHKernel>(config.m, config.r_n_const);
        case KernelKind::LILConfidence:
            return std::make_unique<LILConfidenceKernel>(config.lil_alpha, config.lil_c1,
                                                         config.lil_c2, config.lil_c3);
        case KernelKind::ConstraintMixture:
            if (!config.constraint)
                throw std::invalid_argument("ConstraintMixture: missing constraint system");
            return std::make_unique<ConstraintMixtureKernel>(*config.constraint);
    }
    throw std::invalid_argument("make_eprocess: unknown kernel kind");
}

double mixture_subgaussian_log_value(long n, double running_mean) {
    const double nn = static_cast<double>(n);
    return -0.5 * std::log(nn + 1.0) + nn * nn * running_mean * running_mean / (2.0 * (nn + 1.0));
}

double klinf_empirical_log_value(std::span<const double> prefix, double m0) {
    if (prefix.empty()) throw std::invalid_argument("klinf_empirical_log_value: empty prefix");
    const DiscreteBoundedDist f_n = empirical(prefix);
    const double nn = static_cast<double>(prefix.size());
    return nn * klinf_bounded(f_n, m0).value - std::log(nn);
}

double tilde_dh_r_n(long n, double r_n_const) {
    return r_n_const * std::log(1.0 + std::log2(2.0 * static_cast<double>(n)));
}

double lil_lower_bound(long n, double running_mean, double alpha,
                       double c1, double c2, double c3) {
    const double nn = static_cast<double>(n);
    if (!(c2 * nn > std::exp(1.0))) return -kInf;  // boundary not yet defined: cannot stop
    const double u = std::sqrt((std::log(std::log(c2 * nn)) + std::log(c3 / alpha)) / nn);
    return running_mean - c1 * u;
}

double constraint_mixture_log_value(const ConstraintSystem& system,
                                    std::span<const double> prefix) {
    ConstraintMixtureKernel kernel(system);
    for (double x : prefix) kernel.update(x);
    return kernel.log_e();
}

}  // namespace seqtest

#pragma once

#include <array>
#include <cmath>
#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <vector>

#include "seqtest/distributions.hpp"

namespace seqtest {

enum class KernelKind {
    LikelihoodRatio,
    NumeraireSubGaussian,
    MixtureSubGaussian,
    KLinfEmpirical,
    TildeKLinfDH,
    LILConfidence,
    ConstraintMixture,
};

// Null/alternative families cut out by K <= 2 affine moment constraints;
// e-variables are S^pi(x) = 1 + sum_i pi_i phi_i(x) for pi in the box.
struct ConstraintSystem {
    std::vector<std::function<double(double)>> constraint_functions;  // K <= 2
    std::array<double, 2> box_lo{-1.0, -1.0};
    std::array<double, 2> box_hi{1.0, 1.0};
    int quadrature_nodes_per_axis = 1025;
    // Sample-space interval used to validate S^pi >= 0 at box corners.
    double domain_lo = 0.0;
    double domain_hi = 1.0;

    std::size_t dim() const { return constraint_functions.size(); }
    void validate() const;  // throws std::domain_error on an invalid box
};

struct KernelConfig {
    KernelKind kind = KernelKind::NumeraireSubGaussian;
    double m = 0.5;          // numeraire mean parameter / m0 for bounded-mean kernels
    double r_n_const = 3.0;  // R_n = r_n_const * log(1 + log2(2n)) for the tilde-DH rule
    double lil_c1 = 1.7;
    double lil_c2 = 2.0;
    double lil_c3 = 5.2;
    double lil_alpha = 0.05;  // alpha baked into the LIL margin
    std::optional<Dist> lr_null;  // LikelihoodRatio only
    std::optional<Dist> lr_alt;
    std::optional<ConstraintSystem> constraint;  // ConstraintMixture only
};

// Stateful per-trajectory accumulator exposing log E_n after each
// observation. LILConfidence stores the margin L_n(alpha) in the log_e
// slot and stops on margin > 0 instead of the 1/alpha threshold.
class EProcess {
public:
    virtual ~EProcess() = default;
    virtual void update(double x) = 0;
    virtual double log_e() const = 0;
    virtual bool should_stop(double alpha) const {
        return log_e() >= std::log(1.0 / alpha);
    }
    long n() const { return n_; }

protected:
    long n_ = 0;
};

std::unique_ptr<EProcess> make_eprocess(const KernelConfig& config);

// Closed forms for the individual kernels, usable without kernel state.
double mixture_subgaussian_log_value(long n, double running_mean);
double klinf_empirical_log_value(std::span<const double> prefix, double m0);
double tilde_dh_r_n(long n, double r_n_const);
// Margin L_n(alpha); -infinity while c2 * n <= e.
double lil_lower_bound(long n, double running_mean, double alpha,
                       double c1, double c2, double c3);
double constraint_mixture_log_value(const ConstraintSystem& system,
                                    std::span<const double> prefix);

}  // namespace seqtest

#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <variant>
#include <vector>

namespace seqtest {

// Weighted atoms on [0,1]. Atoms are sorted ascending, deduplicated to
// within kAtomMergeTol (weights merged), and weights sum to 1.
class DiscreteBoundedDist {
public:
    static constexpr double kAtomMergeTol = 1e-12;

    DiscreteBoundedDist(std::vector<double> atoms, std::vector<double> weights);

    static DiscreteBoundedDist bernoulli(double p);
    static DiscreteBoundedDist point_mass(double x);

    const std::vector<double>& atoms() const { return atoms_; }
    const std::vector<double>& weights() const { return weights_; }
    std::size_t size() const { return atoms_.size(); }

    double mean() const;
    double variance() const;

    // Index of the atom equal to x within kAtomMergeTol, or -1.
    long find_atom(double x) const;

private:
    std::vector<double> atoms_;
    std::vector<double> weights_;
};

struct GaussianDist {
    double mean = 0.0;
    double variance = 1.0;
};

using Dist = std::variant<DiscreteBoundedDist, GaussianDist>;

// Counter-based stream: the n-th draw is a pure function of
// (master_seed, stream_id, replication_index, n), so parallel replications
// are reproducible regardless of scheduling.
class SeededStream {
public:
    SeededStream(std::uint64_t master_seed, std::uint64_t replication_index,
                 std::uint64_t stream_id = 0);

    // Independent child stream (used by the meta-algorithm's copies).
    SeededStream fork(std::uint64_t child_id) const;

    std::uint64_t next_u64();
    double next_uniform();   // (0,1)
    double next_gaussian();  // standard normal, consumes two counters

    std::uint64_t master_seed() const { return master_seed_; }
    std::uint64_t replication_index() const { return replication_index_; }
    std::uint64_t counter() const { return counter_; }

private:
    std::uint64_t master_seed_;
    std::uint64_t replication_index_;
    std::uint64_t stream_id_;
    std::uint64_t key_;
    std::uint64_t counter_ = 0;
};

double sample(const DiscreteBoundedDist& dist, SeededStream& stream);
double sample(const GaussianDist& dist, SeededStream& stream);
double sample(const Dist& dist, SeededStream& stream);

// Empirical distribution of values in [0,1]; throws std::domain_error on
// values outside [0,1] and std::invalid_argument on an empty sample.
DiscreteBoundedDist empirical(std::span<const double> samples);

// KL(Q,P). Returns +infinity when Q has an atom outside P's support.
double kl_divergence(const DiscreteBoundedDist& q, const DiscreteBoundedDist& p);
double kl_divergence(const GaussianDist& q, const GaussianDist& p);
// Mixed kinds throw std::invalid_argument.
double kl_divergence(const Dist& q, const Dist& p);

double mean_of(const Dist& dist);

// Compact distribution strings: "bern:p", "gauss:m" (unit variance),
// "point:x", "atoms:a1,a2,...@w1,w2,...".
Dist parse_dist(const std::string& spec);
std::string dist_to_string(const Dist& dist);

}  // namespace seqtest

#include "seqtest/distributions.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <numeric>
#include <sstream>
#include <stdexcept>

namespace seqtest {

namespace {

constexpr double kWeightSumTol = 1e-12;

std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

std::uint64_t mix2(std::uint64_t a, std::uint64_t b) {
    return splitmix64(splitmix64(a) ^ (b * 0xd1342543de82ef95ULL + 0x2545f4914f6cdd1dULL));
}

}  // namespace

DiscreteBoundedDist::DiscreteBoundedDist(std::vector<double> atoms,
                                         std::vector<double> weights) {
    if (atoms.empty() || atoms.size() != weights.size())
        throw std::invalid_argument("DiscreteBoundedDist: atoms/weights size mismatch or empty");
    std::vector<std::size_t> order(atoms.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::sort(order.begin(), order.end(),
              [&](std::size_t a, std::size_t b) { return atoms[a] < atoms[b]; });
    double wsum = 0.0;
    for (std::size_t idx : order) {
        const double a = atoms[idx];
        const double w = weights[idx];
        if (!(a >= 0.0 && a <= 1.0))
            throw std::domain_error("DiscreteBoundedDist: atom outside [0,1]");
        if (!(w >= 0.0))
            throw std::domain_error("DiscreteBoundedDist: negative weight");
        wsum += w;
        if (!atoms_.empty() && a - atoms_.back() <= kAtomMergeTol) {
            weights_.back() += w;
        } else {
            atoms_.push_back(a);
            weights_.push_back(w);
        }
    }
    if (std::abs(wsum - 1.0) > kWeightSumTol)
        throw std::domain_error("DiscreteBoundedDist: weights must sum to 1");
}

DiscreteBoundedDist DiscreteBoundedDist::bernoulli(double p) {
    if (!(p >= 0.0 && p <= 1.0)) throw std::domain_error("bernoulli: p outside [0,1]");
    if (p == 0.0) return point_mass(0.0);
    if (p == 1.0) return point_mass(1.0);
    return DiscreteBoundedDist({0.0, 1.0}, {1.0 - p, p});
}

DiscreteBoundedDist DiscreteBoundedDist::point_mass(double x) {
    return DiscreteBoundedDist({x}, {1.0});
}

double DiscreteBoundedDist::mean() const {
    double m = 0.0;
    for (std::size_t i = 0; i < atoms_.size(); ++i) m += atoms_[i] * weights_[i];
    return m;
}

double DiscreteBoundedDist::variance() const {
    const double m = mean();
    double v = 0.0;
    for (std::size_t i = 0; i < atoms_.size(); ++i) {
        const double d = atoms_[i] - m;
        v += d * d * weights_[i];
    }
    return v;
}

long DiscreteBoundedDist::find_atom(double x) const {
    auto it = std::lower_bound(atoms_.begin(), atoms_.end(), x - kAtomMergeTol);
    if (it == atoms_.end() || std::abs(*it - x) > kAtomMergeTol) return -1;
    return static_cast<long>(it - atoms_.begin());
}

SeededStream::SeededStream(std::uint64_t master_seed, std::uint64_t replication_index,
                           std::uint64_t stream_id)
    : master_seed_(master_seed),
      replication_index_(replication_index),
      stream_id_(stream_id),
      key_(mix2(mix2(master_seed, stream_id), replication_index)) {}

SeededStream SeededStream::fork(std::uint64_t child_id) const {
    return SeededStream(master_seed_, replication_index_,
                        mix2(stream_id_, child_id + 1));
}

std::uint64_t SeededStream::next_u64() {
    return mix2(key_, counter_++);
}

double SeededStream::next_uniform() {
    // 53-bit mantissa, shifted into (0,1).
    return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1.0p-53;
}

double SeededStream::next_gaussian() {
    const double u1 = next_uniform();
    const double u2 = next_uniform();
    return std::sqrt(-2.0 * std::log(u1)) *
           std::cos(2.0 * std::numbers::pi * u2);
}

double sample(const DiscreteBoundedDist& dist, SeededStream& stream) {
    const double u = stream.next_uniform();
    double acc = 0.0;
    const auto& w = dist.weights();
    for (std::size_t i = 0; i + 1 < w.size(); ++i) {
        acc += w[i];
        if (u < acc) return dist.atoms()[i];
    }
    return dist.atoms().back();
}

double sample(const GaussianDist& dist, SeededStream& stream) {
    return dist.mean + std::sqrt(dist.variance) * stream.next_gaussian();
}

double sample(const Dist& dist, SeededStream& stream) {
    return std::visit([&](const auto& d) { return sample(d, stream); }, dist);
}

DiscreteBoundedDist empirical(std::span<const double> samples) {
    if (samples.empty()) throw std::invalid_argument("empirical: empty sample");
    std::vector<double> atoms(samples.begin(), samples.end());
    for (double x : atoms)
        if (!(x >= 0.0 && x <= 1.0))
            throw std::domain_error("empirical: value outside [0,1]");
    const double w = 1.0 / static_cast<double>(samples.size());
    std::vector<double> weights(samples.size(), w);
    return DiscreteBoundedDist(std::move(atoms), std::move(weights));
}

double kl_divergence(const DiscreteBoundedDist& q, const DiscreteBoundedDist& p) {
    double kl = 0.0;
    for (std::size_t i = 0; i < q.size(); ++i) {
        const double qi = q.weights()[i];
        if (qi == 0.0) continue;
        const long j = p.find_atom(q.atoms()[i]);
        if (j < 0 || p.weights()[j] == 0.0)
            return std::numeric_limits<double>::infinity();
        kl += qi * std::log(qi / p.weights()[j]);
    }
    return std::max(kl, 0.0);
}

double kl_divergence(const GaussianDist& q, const GaussianDist& p) {
    const double d = q.mean - p.mean;
    return std::log(std::sqrt(p.variance / q.variance)) +
           (q.variance + d * d) / (2.0 * p.variance) - 0.5;
}

double kl_divergence(const Dist& q, const Dist& p) {
    if (auto* qd = std::get_if<DiscreteBoundedDist>(&q)) {
        if (auto* pd = std::get_if<DiscreteBoundedDist>(&p)) return kl_divergence(*qd, *pd);
    } else if (auto* qg = std::get_if<GaussianDist>(&q)) {
        if (auto* pg = std::get_if<GaussianDist>(&p)) return kl_divergence(*qg, *pg);
    }
    throw std::invalid_argument("kl_divergence: unsupported distribution pair");
}

double mean_of(const Dist& dist) {
    return std::visit([](const auto& d) {
        if constexpr (std::is_same_v<std::decay_t<decltype(d)>, GaussianDist>)
            return d.mean;
        else
            return d.mean();
    }, dist);
}

namespace {

std::vector<double> parse_csv_doubles(const std::string& s) {
    std::vector<double> out;
    std::stringstream ss(s);
    std::string tok;
    while (std::getline(ss, tok, ',')) {
        if (tok.empty()) throw std::invalid_argument("parse_dist: empty number in list");
        out.push_back(std::stod(tok));
    }
    return out;
}

}  // namespace

Dist parse_dist(const std::string& spec) {
    const auto colon = spec.find(':');
    if (colon == std::string::npos)
        throw std::invalid_argument("parse_dist: expected '<kind>:<params>' in '" + spec + "'");
    const std::string kind = spec.substr(0, colon);
    const std::string rest = spec.substr(colon + 1);
    if (kind == "bern") return DiscreteBoundedDist::bernoulli(std::stod(rest));
    if (kind == "gauss") return GaussianDist{std::stod(rest), 1.0};
    if (kind == "point") return DiscreteBoundedDist::point_mass(std::stod(rest));
    if (kind == "atoms") {
        const auto at = rest.find('@');
        if (at == std::string::npos)
            throw std::invalid_argument("parse_dist: atoms form is 'atoms:a1,..@w1,..'");
        return DiscreteBoundedDist(parse_csv_doubles(rest.substr(0, at)),
                                   parse_csv_doubles(rest.substr(at + 1)));
    }
    throw std::invalid_argument("parse_dist: unknown kind '" + kind + "'");
}

std::string dist_to_string(const Dist& dist) {
    std::ostringstream out;
    if (auto* g = std::get_if<GaussianDist>(&dist)) {
        out << "gauss:" << g->mean;
        return out.str();
    }
    const auto& d = std::get<DiscreteBoundedDist>(dist);
    out << "atoms:";
    for (std::size_t i = 0; i < d.size(); ++i) out << (i ? "," : "") << d.atoms()[i];
    out << "@";
    for (std::size_t i = 0; i < d.size(); ++i) out << (i ? "," : "") << d.weights()[i];
    return out.str();
}

}  // namespace seqtest

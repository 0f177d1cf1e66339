#pragma once

#include "pks/core_model.hpp"

#include <cstdint>

namespace pks {

/// Stateless counter-based generator: the i-th draw of a stream depends only on
/// (key, i), so results do not depend on how work is scheduled across threads.
class CounterRng {
public:
    explicit CounterRng(std::uint64_t key) : key_(key) {}

    [[nodiscard]] std::uint64_t key() const { return key_; }

    /// Uniform in the open interval (0, 1).
    [[nodiscard]] double uniform(std::uint64_t counter) const;

    /// Standard normal by inverse CDF of uniform(counter).
    [[nodiscard]] double normal(std::uint64_t counter) const;

private:
    std::uint64_t key_;
};

[[nodiscard]] std::uint64_t splitmix64(std::uint64_t x);

/// Key for the (N, sample) stream of a Monte-Carlo study.
[[nodiscard]] std::uint64_t stream_key(std::uint64_t base_seed, std::uint64_t n_particles,
                                       std::uint64_t sample);

/// N i.i.d. draws from mu (Gaussian by inverse CDF, empirical by inverse of the
/// discrete CDF). GridDensity sampling is not supported.
[[nodiscard]] ParticleEnsemble sample_ensemble(const Measure1D& mu, std::size_t N,
                                               const CounterRng& rng);

}  // namespace pks

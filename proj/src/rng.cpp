#include "pks/rng.hpp"

#include "pks/errors.hpp"

#include <boost/math/special_functions/erf.hpp>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <vector>

namespace pks {

std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

double CounterRng::uniform(std::uint64_t counter) const {
    const std::uint64_t bits = splitmix64(key_ ^ splitmix64(counter));
    return (static_cast<double>(bits >> 11) + 0.5) * 0x1.0p-53;
}

double CounterRng::normal(std::uint64_t counter) const {
    return -std::numbers::sqrt2 * boost::math::erfc_inv(2.0 * uniform(counter));
}

std::uint64_t stream_key(std::uint64_t base_seed, std::uint64_t n_particles, std::uint64_t sample) {
    std::uint64_t h = splitmix64(base_seed);
    h = splitmix64(h ^ n_particles);
    return splitmix64(h ^ (sample * 0xD1B54A32D192ED03ULL));
}

ParticleEnsemble sample_ensemble(const Measure1D& mu, std::size_t N, const CounterRng& rng) {
    validate(mu);
    ParticleEnsemble out;
    const auto n = static_cast<Eigen::Index>(N);
    if (const auto* g = std::get_if<Gaussian>(&mu)) {
        out.Q.resize(1, n);
        const double sd = std::sqrt(g->var);
        for (Eigen::Index j = 0; j < n; ++j) {
            out.Q(0, j) = g->mean + sd * rng.normal(static_cast<std::uint64_t>(j));
        }
        return out;
    }
    if (const auto* e = std::get_if<EmpiricalMeasure>(&mu)) {
        std::vector<double> cdf(static_cast<std::size_t>(e->weights.size()));
        double acc = 0.0;
        for (Eigen::Index k = 0; k < e->weights.size(); ++k) {
            acc += e->weights[k];
            cdf[static_cast<std::size_t>(k)] = acc;
        }
        out.Q.resize(e->atoms.rows(), n);
        for (Eigen::Index j = 0; j < n; ++j) {
            const double u = rng.uniform(static_cast<std::uint64_t>(j)) * acc;
            auto it = std::upper_bound(cdf.begin(), cdf.end(), u);
            const auto k = std::min<std::ptrdiff_t>(it - cdf.begin(), e->weights.size() - 1);
            out.Q.col(j) = e->atoms.col(k);
        }
        return out;
    }
    throw Unsupported("sample_ensemble: sampling from a GridDensity is not supported");
}

}  // namespace pks

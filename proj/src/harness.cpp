#include "pks/harness.hpp"

#include "pks/errors.hpp"
#include "pks/metrics.hpp"
#include "pks/rng.hpp"

#include <omp.h>

#include <algorithm>
#include <cmath>
#include <exception>
#include <mutex>
#include <numeric>
#include <sstream>
#include <stdexcept>

namespace pks {

namespace {

struct SampleOutcome {
    std::vector<double> r;
    double max_residual = 0.0;
    double initial_w1 = 0.0;
};

SampleOutcome run_sample(const Scenario& scenario, std::size_t N, std::size_t sample,
                         std::uint64_t seed) {
    const ModelParams p = scale_particles(scenario.params, N);
    const CounterRng rng(stream_key(seed, N, sample));
    const ParticleEnsemble q_in = sample_ensemble(scenario.mu_in, N, rng);
    MicroOptions opts;
    opts.store_ensemble = false;
    const MicroTrajectory traj = integrate_micro(p, scenario.init, q_in, scenario.t_end,
                                                 scenario.solver, opts);
    SampleOutcome out;
    out.r.reserve(traj.times.size());
    for (const auto& m : traj.macro) {
        out.r.push_back(m.r[0]);
    }
    out.max_residual = *std::max_element(traj.res_ind3.begin(), traj.res_ind3.end());
    out.initial_w1 = w1(EmpiricalMeasure::uniform(q_in.Q), scenario.mu_in);
    return out;
}

void validate_study(const Scenario& scenario, const std::vector<std::size_t>& N_values,
                    std::size_t n_samples) {
    if (n_samples < 2) {
        throw std::invalid_argument("run_mc_study needs n_samples >= 2");
    }
    if (N_values.empty()) {
        throw std::invalid_argument("run_mc_study needs at least one N");
    }
    for (std::size_t N : N_values) {
        if (N < 1) {
            throw std::invalid_argument("run_mc_study: every N must be >= 1");
        }
    }
    if (scenario.params.n_r() != 1 || scenario.params.n_q() != 1) {
        throw Unsupported("run_mc_study records scalar macro trajectories (n_r = n_q = 1)");
    }
}

// Shared aggregation: outcomes[i * n_samples + k] belongs to N_values[i], sample k.
McStudyResult aggregate(const Scenario& scenario, const std::vector<std::size_t>& N_values,
                        std::size_t n_samples, std::uint64_t seed,
                        std::vector<SampleOutcome>& outcomes) {
    McStudyResult study;
    study.n_samples = n_samples;
    study.base_seed = seed;
    study.times = scenario.solver.sample_times(scenario.t_end);
    const KineticTrajectory kin =
        integrate_moment_ode(scenario.params, scenario.init.r, scenario.init.s, scenario.mu_in,
                             scenario.t_end, scenario.solver);
    for (const auto& m : kin.macro) {
        study.r_kin.push_back(m.r[0]);
    }
    const std::size_t n_t = study.times.size();
    const double inv_n = 1.0 / static_cast<double>(n_samples);
    const double inv_nm1 = 1.0 / static_cast<double>(n_samples - 1);

    for (std::size_t i = 0; i < N_values.size(); ++i) {
        McPerN entry;
        entry.N = N_values[i];
        entry.r.reserve(n_samples);
        for (std::size_t k = 0; k < n_samples; ++k) {
            SampleOutcome& o = outcomes[i * n_samples + k];
            entry.max_residual = std::max(entry.max_residual, o.max_residual);
            entry.mean_initial_w1 += o.initial_w1 * inv_n;
            entry.r.push_back(std::move(o.r));
        }
        entry.mean.assign(n_t, 0.0);
        entry.variance.assign(n_t, 0.0);
        for (std::size_t t = 0; t < n_t; ++t) {
            // Shifted two-pass sums: identical samples give exactly zero variance.
            const double pivot = entry.r[0][t];
            double shifted_mean = 0.0;
            for (std::size_t k = 0; k < n_samples; ++k) {
                shifted_mean += entry.r[k][t] - pivot;
            }
            shifted_mean *= inv_n;
            double ss = 0.0;
            for (std::size_t k = 0; k < n_samples; ++k) {
                const double d = (entry.r[k][t] - pivot) - shifted_mean;
                ss += d * d;
            }
            const double mean = pivot + shifted_mean;
            entry.mean[t] = mean;
            entry.variance[t] = ss * inv_nm1;
            entry.max_var = std::max(entry.max_var, entry.variance[t]);
            entry.sup_mf_error = std::max(entry.sup_mf_error, std::abs(mean - study.r_kin[t]));
        }
        study.per_n.push_back(std::move(entry));
    }
    return study;
}

[[noreturn]] void rethrow_with_context(const std::exception_ptr& error, std::size_t N,
                                       std::size_t sample) {
    std::ostringstream ctx;
    ctx << "N = " << N << ", sample = " << sample << ": ";
    try {
        std::rethrow_exception(error);
    } catch (const IntegrationFailure& e) {
        throw IntegrationFailure(ctx.str() + e.what(), e.time());
    } catch (const std::invalid_argument& e) {
        throw std::invalid_argument(ctx.str() + e.what());
    } catch (const std::exception& e) {
        throw std::runtime_error(ctx.str() + e.what());
    }
}

}  // namespace

McStudyResult run_mc_study(const Scenario& scenario, const std::vector<std::size_t>& N_values,
                           std::size_t n_samples, std::uint64_t seed, int threads) {
    validate_study(scenario, N_values, n_samples);
    const std::size_t total = N_values.size() * n_samples;
    std::vector<SampleOutcome> outcomes(total);
    std::exception_ptr first_error;
    std::size_t failed_item = total;
    std::mutex error_mutex;
    const int n_threads = threads > 0 ? threads : omp_get_max_threads();

    // Largest N first so the expensive items do not trail the schedule.
#pragma omp parallel for schedule(dynamic, 1) num_threads(n_threads)
    for (std::ptrdiff_t rev = static_cast<std::ptrdiff_t>(total) - 1; rev >= 0; --rev) {
        const auto item = static_cast<std::size_t>(rev);
        const std::size_t i = item / n_samples;
        const std::size_t k = item % n_samples;
        try {
            outcomes[item] = run_sample(scenario, N_values[i], k, seed);
        } catch (...) {
            const std::lock_guard lock(error_mutex);
            if (item < failed_item) {
                failed_item = item;
                first_error = std::current_exception();
            }
        }
    }
    if (first_error) {
        rethrow_with_context(first_error, N_values[failed_item / n_samples], failed_item % n_samples);
    }
    return aggregate(scenario, N_values, n_samples, seed, outcomes);
}

McStudyResult run_mc_study_serial(const Scenario& scenario, const std::vector<std::size_t>& N_values,
                                  std::size_t n_samples, std::uint64_t seed) {
    validate_study(scenario, N_values, n_samples);
    std::vector<SampleOutcome> outcomes;
    outcomes.reserve(N_values.size() * n_samples);
    for (std::size_t N : N_values) {
        for (std::size_t k = 0; k < n_samples; ++k) {
            try {
                outcomes.push_back(run_sample(scenario, N, k, seed));
            } catch (...) {
                rethrow_with_context(std::current_exception(), N, k);
            }
        }
    }
    return aggregate(scenario, N_values, n_samples, seed, outcomes);
}

SlopeFit loglog_fit(const std::vector<double>& x, const std::vector<double>& y) {
    if (x.size() != y.size() || x.size() < 2) {
        throw std::invalid_argument("loglog_fit needs at least two (x, y) pairs");
    }
    const std::size_t n = x.size();
    std::vector<double> lx(n), ly(n);
    for (std::size_t i = 0; i < n; ++i) {
        if (!(x[i] > 0.0) || !(y[i] > 0.0)) {
            throw std::invalid_argument("loglog_fit needs positive data");
        }
        lx[i] = std::log(x[i]);
        ly[i] = std::log(y[i]);
    }
    const double mx = std::accumulate(lx.begin(), lx.end(), 0.0) / static_cast<double>(n);
    const double my = std::accumulate(ly.begin(), ly.end(), 0.0) / static_cast<double>(n);
    double sxx = 0.0;
    for (double v : lx) {
        sxx += (v - mx) * (v - mx);
    }
    if (sxx == 0.0) {
        throw std::invalid_argument("loglog_fit needs distinct x values");
    }
    SlopeFit fit;
    for (std::size_t i = 0; i < n; ++i) {
        fit.contributions.push_back((lx[i] - mx) * (ly[i] - my) / sxx);
        fit.slope += fit.contributions.back();
    }
    fit.intercept = my - fit.slope * mx;
    return fit;
}

SlopeFit variance_slope(const McStudyResult& study) {
    std::vector<double> x, y;
    for (const auto& e : study.per_n) {
        x.push_back(static_cast<double>(e.N));
        y.push_back(e.max_var);
    }
    return loglog_fit(x, y);
}

namespace {

std::vector<double> ranks(const std::vector<double>& v) {
    std::vector<std::size_t> order(v.size());
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&v](std::size_t a, std::size_t b) { return v[a] < v[b]; });
    std::vector<double> r(v.size());
    std::size_t i = 0;
    while (i < order.size()) {
        std::size_t j = i;
        while (j + 1 < order.size() && v[order[j + 1]] == v[order[i]]) {
            ++j;
        }
        const double avg = 0.5 * static_cast<double>(i + j) + 1.0;
        for (std::size_t k = i; k <= j; ++k) {
            r[order[k]] = avg;
        }
        i = j + 1;
    }
    return r;
}

}  // namespace

double spearman_correlation(const std::vector<double>& x, const std::vector<double>& y) {
    if (x.size() != y.size() || x.size() < 2) {
        throw std::invalid_argument("spearman_correlation needs at least two pairs");
    }
    const auto rx = ranks(x);
    const auto ry = ranks(y);
    const double n = static_cast<double>(x.size());
    const double mean = 0.5 * (n + 1.0);
    double sxy = 0.0, sxx = 0.0, syy = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sxy += (rx[i] - mean) * (ry[i] - mean);
        sxx += (rx[i] - mean) * (rx[i] - mean);
        syy += (ry[i] - mean) * (ry[i] - mean);
    }
    if (sxx == 0.0 || syy == 0.0) {
        return 0.0;
    }
    return sxy / std::sqrt(sxx * syy);
}

MfErrorCurve mf_error_curve(const McStudyResult& study, const ModelParams& p, double t_end,
                            double safety) {
    MfErrorCurve curve;
    const DobrushinConstants c = dobrushin_constants(p);
    const double growth = c.C * std::exp(c.L * t_end);
    std::vector<double> n_values;
    for (const auto& e : study.per_n) {
        curve.N.push_back(e.N);
        curve.error.push_back(e.sup_mf_error);
        n_values.push_back(static_cast<double>(e.N));
        const double bound = safety * growth * e.mean_initial_w1;
        curve.soft_bound.push_back(bound);
        curve.within_soft_bound.push_back(e.sup_mf_error <= bound);
    }
    if (curve.N.size() >= 2) {
        curve.spearman = spearman_correlation(n_values, curve.error);
        curve.trend_defined = true;
    }
    return curve;
}

ConsistencyResult consistency_experiment(const Scenario& scenario, std::uint64_t seed) {
    const ModelParams& p = scenario.params;
    const CounterRng rng(stream_key(seed, p.N, 0));
    const ParticleEnsemble q_in = sample_ensemble(scenario.mu_in, p.N, rng);
    MicroOptions opts;
    opts.store_ensemble = false;
    const MicroTrajectory micro =
        integrate_micro(p, scenario.init, q_in, scenario.t_end, scenario.solver, opts);

    ModelParams kinetic = p;
    kinetic.N_real = static_cast<double>(p.N);
    const KineticTrajectory kin =
        integrate_moment_ode(kinetic, scenario.init.r, scenario.init.s,
                             EmpiricalMeasure::uniform(q_in.Q), scenario.t_end, scenario.solver);

    ConsistencyResult out;
    out.n_real_mismatch = p.N_real != static_cast<double>(p.N);
    for (std::size_t k = 0; k < micro.times.size(); ++k) {
        const double d = std::max((micro.macro[k].r - kin.macro[k].r).cwiseAbs().maxCoeff(),
                                  (micro.macro[k].s - kin.macro[k].s).cwiseAbs().maxCoeff());
        out.max_deviation = std::max(out.max_deviation, d);
    }
    return out;
}

GridDensity initial_grid(const Measure1D& mu_in, const GridSpec& grid) {
    if (const auto* g = std::get_if<Gaussian>(&mu_in)) {
        return GridDensity::from_gaussian(g->mean, g->var, grid.lo, grid.hi, grid.n_pts);
    }
    if (const auto* g = std::get_if<GridDensity>(&mu_in)) {
        return *g;
    }
    throw Unsupported("the PDE path needs a Gaussian or grid initial measure");
}

EnergyExperiment energy_experiment(const Scenario& scenario, const GridSpec& grid,
                                   std::uint64_t seed) {
    const ModelParams& p = scenario.params;
    EnergyExperiment out;

    const CounterRng rng(stream_key(seed, p.N, 0));
    const ParticleEnsemble q_in = sample_ensemble(scenario.mu_in, p.N, rng);
    MicroOptions micro_opts;
    micro_opts.store_ensemble = false;
    out.micro = energy_micro(
        p, integrate_micro(p, scenario.init, q_in, scenario.t_end, scenario.solver, micro_opts));

    out.moment = energy_kinetic(p, integrate_moment_ode(p, scenario.init.r, scenario.init.s,
                                                        scenario.mu_in, scenario.t_end,
                                                        scenario.solver));

    const GridDensity u_in = initial_grid(scenario.mu_in, grid);
    const KineticTrajectory pde = integrate_pde_coupled(p, scenario.init.r, scenario.init.s, u_in,
                                                        scenario.t_end, scenario.solver);
    out.pde = energy_kinetic(p, pde);
    out.warnings = pde.warnings;
    for (std::size_t k = 0; k < pde.times.size(); ++k) {
        out.pde_variance.push_back(central_variance(pde, k));
        const Matrix central = pde.second_moment[k] -
                               pde.first_moment[k] * pde.first_moment[k].transpose() / pde.mass[k];
        out.pde_spread_energy.push_back(0.5 * p.N_real * (p.gamma_q * central).trace());
    }
    out.final_density = pde.snapshots.back();
    return out;
}

}  // namespace pks

#pragma once

#include "pks/core_model.hpp"
#include "pks/meanfield.hpp"
#include "pks/microsim.hpp"

#include <cstdint>
#include <optional>
#include <vector>

namespace pks {

/// Everything needed to start both the discrete and the kinetic system.
struct Scenario {
    ModelParams params = reference_params();
    MacroState init{Vector::Constant(1, 1.0), Vector::Constant(1, 0.0)};
    Measure1D mu_in = Gaussian{-2.0, 1.0};
    double t_end = 60.0;
    SolverOptions solver;
};

struct GridSpec {
    double lo = -5.0;
    double hi = 7.0;
    std::size_t n_pts = 101;
};

struct McPerN {
    std::size_t N = 0;
    std::vector<std::vector<double>> r;  // [sample][time]
    std::vector<double> mean;
    std::vector<double> variance;  // unbiased, pointwise in time
    double max_var = 0.0;
    double sup_mf_error = 0.0;     // sup_t |mean(t) - r_kin(t)|
    double max_residual = 0.0;     // worst index-3 residual over all samples
    double mean_initial_w1 = 0.0;  // mean W1(empirical q_in, mu_in) over samples
};

struct McStudyResult {
    std::vector<double> times;
    std::vector<double> r_kin;
    std::vector<McPerN> per_n;
    std::size_t n_samples = 0;
    std::uint64_t base_seed = 0;
};

/// n_samples independent ensembles per N, each integrated with the micro solver;
/// samples run in parallel with one counter-based RNG stream per (N, sample).
/// threads <= 0 uses the OpenMP default.
[[nodiscard]] McStudyResult run_mc_study(const Scenario& scenario,
                                         const std::vector<std::size_t>& N_values,
                                         std::size_t n_samples, std::uint64_t seed, int threads = 0);

/// Single-threaded reference for run_mc_study; results are bit-identical.
[[nodiscard]] McStudyResult run_mc_study_serial(const Scenario& scenario,
                                                const std::vector<std::size_t>& N_values,
                                                std::size_t n_samples, std::uint64_t seed);

struct SlopeFit {
    double slope = 0.0;
    double intercept = 0.0;
    /// Per-point share of the least-squares slope; sums to slope.
    std::vector<double> contributions;
};

/// Least-squares fit of log(y) against log(x).
[[nodiscard]] SlopeFit loglog_fit(const std::vector<double>& x, const std::vector<double>& y);

/// Slope of log(max_var) over log(N).
[[nodiscard]] SlopeFit variance_slope(const McStudyResult& study);

struct MfErrorCurve {
    std::vector<std::size_t> N;
    std::vector<double> error;
    std::optional<double> spearman;  // empty when fewer than two N values
    bool trend_defined = false;
    /// Soft diagnostic: safety * C e^{L t_end} * mean initial W1, per N.
    std::vector<double> soft_bound;
    std::vector<bool> within_soft_bound;
};

[[nodiscard]] MfErrorCurve mf_error_curve(const McStudyResult& study, const ModelParams& p,
                                          double t_end, double safety = 10.0);

[[nodiscard]] double spearman_correlation(const std::vector<double>& x, const std::vector<double>& y);

struct ConsistencyResult {
    double max_deviation = 0.0;
    bool n_real_mismatch = false;
};

/// One sampled ensemble run through the micro solver and through the moment ODE
/// with the empirical initial measure and N_real := N.
[[nodiscard]] ConsistencyResult consistency_experiment(const Scenario& scenario, std::uint64_t seed);

struct EnergyExperiment {
    EnergyReport micro;
    EnergyReport moment;
    EnergyReport pde;
    GridDensity final_density;
    std::vector<double> pde_variance;  // second central moment of the grid density
    /// Part of the PDE U_q carried by the spread about the mean:
    /// N_real/2 tr(gamma_q (m2 - m1 m1^T / mass)).
    std::vector<double> pde_spread_energy;
    std::vector<std::string> warnings;
};

/// Micro, moment-ODE and upwind PDE runs from the same initial data.
[[nodiscard]] EnergyExperiment energy_experiment(const Scenario& scenario, const GridSpec& grid,
                                                 std::uint64_t seed);

/// Initial grid density for the PDE path (Gaussian mu_in sampled on the grid).
[[nodiscard]] GridDensity initial_grid(const Measure1D& mu_in, const GridSpec& grid);

}  // namespace pks

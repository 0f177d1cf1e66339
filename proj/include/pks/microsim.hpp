#pragma once

#include "pks/core_model.hpp"
#include "pks/ode.hpp"

#include <functional>
#include <limits>
#include <optional>
#include <vector>

namespace pks {

/// Time-integration settings shared by the micro and kinetic solvers.
struct SolverOptions {
    double tol = 1e-8;  // used as both rtol and atol
    double max_step = std::numeric_limits<double>::infinity();
    std::size_t n_out = 601;
    /// Explicit sample times; overrides n_out when non-empty.
    std::vector<double> times;

    [[nodiscard]] OdeOptions ode() const;
    [[nodiscard]] std::vector<double> sample_times(double t_end) const;
};

struct MicroOptions {
    bool store_ensemble = true;
    bool store_multipliers = false;
};

/// Time derivative of the index-reduced system.
struct MicroDerivative {
    Vector r_dot;
    Vector s_dot;
    Matrix Q_dot;
};

struct MicroTrajectory {
    std::vector<double> times;
    std::vector<MacroState> macro;
    std::vector<Vector> accel;       // s_dot at each sample
    std::vector<Vector> q_mean;      // ensemble mean
    std::vector<Matrix> q_second;    // (1/N) sum_j Q_j Q_j^T
    std::vector<double> res_ind3;    // max_j |Q_j + G_r r - q_j^in - G_r r^in|
    std::vector<double> res_ind2;    // max_j |Q_j' + G_r s|
    std::vector<ParticleEnsemble> ensemble;  // empty unless stored
    std::vector<Matrix> multipliers;         // empty unless stored
    Vector r_in;
    Vector s_in;
    ParticleEnsemble q_in;
    OdeStats stats;
};

struct EnergyReport {
    std::vector<double> times;
    std::vector<double> T_r;
    std::vector<double> T_q;
    std::vector<double> U_r;
    std::vector<double> U_q;
    std::vector<double> E_total;

    /// max_t |E(t) - E(0)| / |E(0)|
    [[nodiscard]] double relative_drift() const;
};

/// r' = s, s' = m_eff^{-1}(-gamma_r r + (N_real/N) sum_i G_r^T gamma_q Q_i), Q_j' = -G_r s.
[[nodiscard]] MicroDerivative ode_rhs(const ModelParams& p, const MacroState& state,
                                      const ParticleEnsemble& ensemble);

/// Adaptive Dormand-Prince solution of ode_rhs on [0, t_end] started from the
/// compatible state (Q_j'(0) = -G_r s_in is implied by the formulation).
[[nodiscard]] MicroTrajectory integrate_micro(const ModelParams& p, const MacroState& init,
                                              const ParticleEnsemble& q_in, double t_end,
                                              const SolverOptions& solver = {},
                                              const MicroOptions& options = {});

/// Closed-form macro trajectory t -> (r, s) for n_r = n_q = 1 with gamma_eff > 0.
class ExplicitSolution {
public:
    ExplicitSolution(const ModelParams& p, double r_in, double s_in, double mu_in_mean);

    [[nodiscard]] MacroState operator()(double t) const;
    [[nodiscard]] double omega() const { return omega_; }
    [[nodiscard]] double rest_point() const { return r0_; }

private:
    double r0_;
    double r_in_;
    double s_in_;
    double omega_;
};

[[nodiscard]] ExplicitSolution explicit_solution(const ModelParams& p, double r_in, double s_in,
                                                 double mu_in_mean);

/// lambda_j = -gamma_q Q_j + M_q G_r s_dot, one column per particle.
[[nodiscard]] Matrix recover_multipliers(const ModelParams& p, const MacroState& state,
                                         const ParticleEnsemble& ensemble, const Vector& s_dot);

/// M_r s_dot + gamma_r r + (N_real/N) sum_j G_r^T lambda_j; zero when the multipliers
/// are consistent with the macroscopic balance law.
[[nodiscard]] Vector macro_balance_residual(const ModelParams& p, const MacroState& state,
                                            const Matrix& multipliers, const Vector& s_dot);

struct ConstraintResiduals {
    std::vector<double> index3;
    std::vector<double> index2;
};

/// Recomputes the residuals from stored ensembles; requires store_ensemble.
[[nodiscard]] ConstraintResiduals constraint_residuals(const ModelParams& p,
                                                       const MicroTrajectory& traj);

[[nodiscard]] EnergyReport energy_micro(const ModelParams& p, const MicroTrajectory& traj);

}  // namespace pks

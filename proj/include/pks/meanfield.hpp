#pragma once

#include "pks/core_model.hpp"
#include "pks/microsim.hpp"

#include <string>
#include <vector>

namespace pks {

struct KineticState {
    MacroState macro;
    Measure1D measure;
    Vector r_in_ref;
};

/// Sampled solution of the partially kinetic system (macro ODE + particle measure).
struct KineticTrajectory {
    std::vector<double> times;
    std::vector<MacroState> macro;
    std::vector<Vector> accel;          // s_dot
    std::vector<Vector> first_moment;   // \int q dmu_t
    std::vector<Matrix> second_moment;  // \int q q^T dmu_t
    std::vector<double> mass;           // \int dmu_t (1 except for truncated grids)
    std::vector<GridDensity> snapshots; // PDE runs only

    // Reference data of the initial measure, used to rebuild mu_t by pushforward.
    Vector r_in;
    Vector m1_in;
    double mass_in = 1.0;

    double min_density = 0.0;  // most negative grid value seen (PDE runs)
    std::vector<std::string> warnings;
    OdeStats stats;
};

/// -G_r (r - r_in) + q_in
[[nodiscard]] Vector characteristic_flow(const ModelParams& p, const Vector& r, const Vector& r_in,
                                         const Vector& q_in);

/// mu_in transported by the characteristic flow, i.e. shifted by -G_r (r - r_in).
[[nodiscard]] Measure1D pushforward(const ModelParams& p, const Measure1D& mu_in, const Vector& r,
                                    const Vector& r_in);

/// Closed macro ODE m_eff r'' = -gamma_r r + N_real G_r^T gamma_q m1(t) with
/// m1(t) = m1_in - mass * G_r (r - r_in). Exact kinetic solution for linear constraints.
[[nodiscard]] KineticTrajectory integrate_moment_ode(const ModelParams& p, const Vector& r_in,
                                                     const Vector& s_in, const Measure1D& mu_in,
                                                     double t_end, const SolverOptions& solver = {});

/// Semi-discrete upwind derivative of u_t + v_eff u_q = 0 (zero ghost values).
[[nodiscard]] Vector upwind_rhs(const ModelParams& p, const GridDensity& u, double v_eff);

struct PdeOptions {
    bool store_snapshots = true;
    double mass_loss_warning = 1e-6;
};

/// Method of lines: macro ODE coupled to the upwind-discretised transport equation,
/// integrated by the shared adaptive Runge-Kutta pair.
[[nodiscard]] KineticTrajectory integrate_pde_coupled(const ModelParams& p, const Vector& r_in,
                                                      const Vector& s_in, const GridDensity& u_in,
                                                      double t_end, const SolverOptions& solver = {},
                                                      const PdeOptions& options = {});

/// -gamma_q q + M_q G_r s_dot
[[nodiscard]] Vector mean_field_multiplier(const ModelParams& p, const Vector& q, const Vector& s_dot);

/// max over samples of |M_r r'' + gamma_r r + N_real \int G_r^T lambda_mf dmu_t|, with
/// mu_t the exact pushforward of the initial measure.
[[nodiscard]] double commutation_check(const ModelParams& p, const KineticTrajectory& traj);

[[nodiscard]] EnergyReport energy_kinetic(const ModelParams& p, const KineticTrajectory& traj);

/// Second central moment of a 1-D trajectory sample, (m2 - m1^2 / mass) / mass.
[[nodiscard]] double central_variance(const KineticTrajectory& traj, std::size_t k);

}  // namespace pks

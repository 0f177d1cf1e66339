#include "pks/meanfield.hpp"

#include "pks/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

namespace pks {

Vector characteristic_flow(const ModelParams& p, const Vector& r, const Vector& r_in,
                           const Vector& q_in) {
    if (r.size() != p.n_r() || r_in.size() != p.n_r() || q_in.size() != p.n_q()) {
        throw std::invalid_argument("characteristic_flow: dimension mismatch");
    }
    return -p.G_r * (r - r_in) + q_in;
}

Measure1D pushforward(const ModelParams& p, const Measure1D& mu_in, const Vector& r,
                      const Vector& r_in) {
    return shift(mu_in, -p.G_r * (r - r_in));
}

KineticTrajectory integrate_moment_ode(const ModelParams& p, const Vector& r_in, const Vector& s_in,
                                       const Measure1D& mu_in, double t_end,
                                       const SolverOptions& solver) {
    p.validate();
    validate(mu_in);
    if (r_in.size() != p.n_r() || s_in.size() != p.n_r() || dimension(mu_in) != p.n_q()) {
        throw std::invalid_argument("integrate_moment_ode: dimension mismatch");
    }
    if (!(t_end >= 0.0)) {
        throw std::invalid_argument("t_end must be non-negative");
    }

    const Eigen::Index nr = p.n_r();
    const Eigen::LLT<Matrix> m_eff(effective_mass(p));
    const Matrix force_map = p.N_real * p.G_r.transpose() * p.gamma_q;
    const Vector m1_in = first_moment(mu_in);
    const Matrix m2_in = second_moment(mu_in);
    const double mass = total_mass(mu_in);

    auto moment_at = [&](const Eigen::Ref<const Vector>& r) -> Vector {
        return m1_in - mass * (p.G_r * (r - r_in));
    };
    auto accel = [&](const Eigen::Ref<const Vector>& r) -> Vector {
        return m_eff.solve(-p.gamma_r * r + force_map * moment_at(r));
    };

    KineticTrajectory traj;
    traj.r_in = r_in;
    traj.m1_in = m1_in;
    traj.mass_in = mass;

    Vector y0(2 * nr);
    y0 << r_in, s_in;
    const OdeRhs rhs = [&](double, const Vector& y, Vector& dy) {
        dy.head(nr) = y.segment(nr, nr);
        dy.segment(nr, nr) = accel(y.head(nr));
    };
    const OdeObserver observe = [&](double t, const Vector& y) {
        MacroState m{y.head(nr), y.segment(nr, nr)};
        const Vector w = -p.G_r * (m.r - r_in);
        traj.times.push_back(t);
        traj.accel.push_back(accel(m.r));
        traj.first_moment.push_back(moment_at(m.r));
        traj.second_moment.push_back(m2_in + w * m1_in.transpose() + m1_in * w.transpose() +
                                     mass * w * w.transpose());
        traj.mass.push_back(mass);
        traj.macro.push_back(std::move(m));
    };
    traj.stats = integrate_dopri5(rhs, y0, 0.0, solver.sample_times(t_end), solver.ode(), observe);
    return traj;
}

Vector upwind_rhs(const ModelParams& p, const GridDensity& u, double v_eff) {
    if (p.n_q() != 1) {
        throw std::invalid_argument("upwind_rhs requires n_q = 1");
    }
    if (u.n_pts() < 3) {
        throw std::invalid_argument("upwind_rhs requires at least three grid points");
    }
    Vector du(u.values.size());
    kernels::upwind(std::span<const double>(u.values.data(), u.n_pts()), v_eff, u.dx(),
                    std::span<double>(du.data(), u.n_pts()));
    return du;
}

namespace {

// Trapezoid moments of grid values laid out as in GridDensity.
struct GridMoments {
    double mass = 0.0;
    double m1 = 0.0;
    double m2 = 0.0;
};

GridMoments grid_moments(const Eigen::Ref<const Vector>& u, double lo, double dx) {
    GridMoments g;
    const Eigen::Index n = u.size();
    for (Eigen::Index i = 0; i < n; ++i) {
        const double w = (i == 0 || i + 1 == n) ? 0.5 * dx : dx;
        const double y = lo + static_cast<double>(i) * dx;
        g.mass += w * u[i];
        g.m1 += w * y * u[i];
        g.m2 += w * y * y * u[i];
    }
    return g;
}

}  // namespace

KineticTrajectory integrate_pde_coupled(const ModelParams& p, const Vector& r_in, const Vector& s_in,
                                        const GridDensity& u_in, double t_end,
                                        const SolverOptions& solver, const PdeOptions& options) {
    p.validate();
    u_in.validate();
    if (p.n_q() != 1) {
        throw std::invalid_argument("integrate_pde_coupled requires n_q = 1");
    }
    if (r_in.size() != p.n_r() || s_in.size() != p.n_r()) {
        throw std::invalid_argument("integrate_pde_coupled: dimension mismatch");
    }
    if (u_in.n_pts() < 3) {
        throw std::invalid_argument("integrate_pde_coupled requires at least three grid points");
    }
    if ((u_in.values.array() < 0.0).any()) {
        throw std::invalid_argument("initial density must be non-negative");
    }
    if (!(t_end >= 0.0)) {
        throw std::invalid_argument("t_end must be non-negative");
    }

    const Eigen::Index nr = p.n_r();
    const auto n_pts = static_cast<Eigen::Index>(u_in.n_pts());
    const double dx = u_in.dx();
    const double lo = u_in.lo;
    const Eigen::LLT<Matrix> m_eff(effective_mass(p));
    const Matrix force_map = p.N_real * p.G_r.transpose() * p.gamma_q;  // n_r x 1

    KineticTrajectory traj;
    traj.r_in = r_in;
    traj.m1_in = first_moment(u_in);
    traj.mass_in = total_mass(u_in);

    auto accel = [&](const Eigen::Ref<const Vector>& r, double m1) -> Vector {
        return m_eff.solve(-p.gamma_r * r + force_map.col(0) * m1);
    };

    Vector y0(2 * nr + n_pts);
    y0 << r_in, s_in, u_in.values;
    const OdeRhs rhs = [&](double, const Vector& y, Vector& dy) {
        const auto r = y.head(nr);
        const auto s = y.segment(nr, nr);
        const auto u = y.tail(n_pts);
        const double v_eff = -(p.G_r.row(0).dot(s));
        const GridMoments g = grid_moments(u, lo, dx);
        dy.head(nr) = s;
        dy.segment(nr, nr) = accel(r, g.m1);
        kernels::upwind(std::span<const double>(u.data(), static_cast<std::size_t>(n_pts)), v_eff, dx,
                        std::span<double>(dy.data() + 2 * nr, static_cast<std::size_t>(n_pts)));
    };
    const OdeObserver observe = [&](double t, const Vector& y) {
        MacroState m{y.head(nr), y.segment(nr, nr)};
        const auto u = y.tail(n_pts);
        const GridMoments g = grid_moments(u, lo, dx);
        traj.times.push_back(t);
        traj.accel.push_back(accel(m.r, g.m1));
        traj.first_moment.push_back(Vector::Constant(1, g.m1));
        traj.second_moment.push_back(Matrix::Constant(1, 1, g.m2));
        traj.mass.push_back(g.mass);
        traj.min_density = std::min(traj.min_density, u.minCoeff());
        if (options.store_snapshots) {
            traj.snapshots.push_back(GridDensity{u_in.lo, u_in.hi, u});
        }
        traj.macro.push_back(std::move(m));
    };
    traj.stats = integrate_dopri5(rhs, y0, 0.0, solver.sample_times(t_end), solver.ode(), observe);

    double worst_loss = 0.0;
    for (double m : traj.mass) {
        worst_loss = std::max(worst_loss, std::abs(m - traj.mass_in));
    }
    if (worst_loss > options.mass_loss_warning) {
        std::ostringstream msg;
        msg << "density mass changed by " << worst_loss << " (support reached the grid boundary)";
        traj.warnings.push_back(msg.str());
    }
    if (traj.min_density < -solver.tol) {
        std::ostringstream msg;
        msg << "negative density values down to " << traj.min_density;
        traj.warnings.push_back(msg.str());
    }
    return traj;
}

Vector mean_field_multiplier(const ModelParams& p, const Vector& q, const Vector& s_dot) {
    return -p.gamma_q * q + p.M_q * p.G_r * s_dot;
}

double commutation_check(const ModelParams& p, const KineticTrajectory& traj) {
    double worst = 0.0;
    for (std::size_t k = 0; k < traj.times.size(); ++k) {
        const MacroState& m = traj.macro[k];
        const Vector& s_dot = traj.accel[k];
        // \int lambda_mf dmu_t = -gamma_q m1(t) + mass * M_q G_r s_dot by linearity.
        const Vector m1 = traj.m1_in - traj.mass_in * (p.G_r * (m.r - traj.r_in));
        const Vector lambda_mean =
            -p.gamma_q * m1 + traj.mass_in * (p.M_q * p.G_r * s_dot);
        const Vector residual =
            p.M_r * s_dot + p.gamma_r * m.r + p.N_real * p.G_r.transpose() * lambda_mean;
        worst = std::max(worst, residual.cwiseAbs().maxCoeff());
    }
    return worst;
}

EnergyReport energy_kinetic(const ModelParams& p, const KineticTrajectory& traj) {
    EnergyReport e;
    e.times = traj.times;
    for (std::size_t k = 0; k < traj.times.size(); ++k) {
        const MacroState& m = traj.macro[k];
        const Vector q_vel = p.G_r * m.s;
        const double t_r = 0.5 * m.s.dot(p.M_r * m.s);
        const double t_q = 0.5 * p.N_real * q_vel.dot(p.M_q * q_vel);
        const double u_r = 0.5 * m.r.dot(p.gamma_r * m.r);
        const double u_q = 0.5 * p.N_real * (p.gamma_q * traj.second_moment[k]).trace();
        e.T_r.push_back(t_r);
        e.T_q.push_back(t_q);
        e.U_r.push_back(u_r);
        e.U_q.push_back(u_q);
        e.E_total.push_back(t_r + t_q + u_r + u_q);
    }
    return e;
}

double central_variance(const KineticTrajectory& traj, std::size_t k) {
    const double mass = traj.mass.at(k);
    const double m1 = traj.first_moment.at(k)[0];
    const double m2 = traj.second_moment.at(k)(0, 0);
    return (m2 - m1 * m1 / mass) / mass;
}

}  // namespace pks

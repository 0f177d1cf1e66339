#include "pks/microsim.hpp"

#include "pks/errors.hpp"
#include "pks/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace pks {

OdeOptions SolverOptions::ode() const {
    OdeOptions o;
    o.rtol = tol;
    o.atol = tol;
    o.max_step = max_step;
    return o;
}

std::vector<double> SolverOptions::sample_times(double t_end) const {
    if (!times.empty()) {
        return times;
    }
    return uniform_times(t_end, n_out);
}

double EnergyReport::relative_drift() const {
    if (E_total.empty()) {
        return 0.0;
    }
    const double e0 = E_total.front();
    double worst = 0.0;
    for (double e : E_total) {
        worst = std::max(worst, std::abs(e - e0));
    }
    return e0 != 0.0 ? worst / std::abs(e0) : worst;
}

namespace {

void check_shapes(const ModelParams& p, const MacroState& state, const ParticleEnsemble& ensemble) {
    if (state.r.size() != p.n_r() || state.s.size() != p.n_r()) {
        throw std::invalid_argument("macro state does not match n_r");
    }
    if (ensemble.Q.rows() != p.n_q() || ensemble.size() != p.N) {
        throw std::invalid_argument("particle ensemble must be n_q x N");
    }
}

// Precomputed pieces of the index-reduced right-hand side.
struct MicroSystem {
    Eigen::LLT<Matrix> m_eff;
    Matrix force_map;  // (N_real/N) G_r^T gamma_q
    Matrix gamma_r;
    Matrix G_r;
    Eigen::Index n_r;
    Eigen::Index n_q;
    Eigen::Index n_particles;

    explicit MicroSystem(const ModelParams& p)
        : m_eff(effective_mass(p)),
          force_map(p.particle_scale() * p.G_r.transpose() * p.gamma_q),
          gamma_r(p.gamma_r),
          G_r(p.G_r),
          n_r(p.n_r()),
          n_q(p.n_q()),
          n_particles(static_cast<Eigen::Index>(p.N)) {}

    [[nodiscard]] Vector accel(const Eigen::Ref<const Vector>& r,
                               const Eigen::Ref<const Matrix>& Q) const {
        return m_eff.solve(-gamma_r * r + force_map * kernels::column_sum(Q));
    }

    void rhs(const Vector& y, Vector& dy) const {
        const auto r = y.segment(0, n_r);
        const auto s = y.segment(n_r, n_r);
        const Eigen::Map<const Matrix> Q(y.data() + 2 * n_r, n_q, n_particles);
        dy.segment(0, n_r) = s;
        dy.segment(n_r, n_r) = accel(r, Q);
        Eigen::Map<Matrix> dQ(dy.data() + 2 * n_r, n_q, n_particles);
        kernels::broadcast_velocity(-G_r * s, dQ);
    }
};

}  // namespace

MicroDerivative ode_rhs(const ModelParams& p, const MacroState& state,
                        const ParticleEnsemble& ensemble) {
    check_shapes(p, state, ensemble);
    const MicroSystem sys(p);
    MicroDerivative d;
    d.r_dot = state.s;
    d.s_dot = sys.accel(state.r, ensemble.Q);
    d.Q_dot.resize(p.n_q(), ensemble.Q.cols());
    kernels::broadcast_velocity(-p.G_r * state.s, d.Q_dot);
    return d;
}

MicroTrajectory integrate_micro(const ModelParams& p, const MacroState& init,
                                const ParticleEnsemble& q_in, double t_end,
                                const SolverOptions& solver, const MicroOptions& options) {
    p.validate();
    check_shapes(p, init, q_in);
    if (!(t_end >= 0.0)) {
        throw std::invalid_argument("t_end must be non-negative");
    }
    if (!(solver.tol > 0.0)) {
        throw std::invalid_argument("tol must be positive");
    }

    const MicroSystem sys(p);
    const Eigen::Index nr = p.n_r();
    const Eigen::Index nq = p.n_q();
    const auto np = static_cast<Eigen::Index>(p.N);
    const double inv_n = 1.0 / static_cast<double>(p.N);

    Vector y0(2 * nr + nq * np);
    y0.segment(0, nr) = init.r;
    y0.segment(nr, nr) = init.s;
    y0.segment(2 * nr, nq * np) = Eigen::Map<const Vector>(q_in.Q.data(), nq * np);

    MicroTrajectory traj;
    traj.r_in = init.r;
    traj.s_in = init.s;
    traj.q_in = q_in;
    const auto times = solver.sample_times(t_end);
    traj.times.reserve(times.size());

    const OdeRhs rhs = [&sys](double, const Vector& y, Vector& dy) { sys.rhs(y, dy); };
    Vector dy(y0.size());
    const OdeObserver observe = [&](double t, const Vector& y) {
        MacroState m{y.segment(0, nr), y.segment(nr, nr)};
        const Eigen::Map<const Matrix> Q(y.data() + 2 * nr, nq, np);
        const Vector s_dot = sys.accel(m.r, Q);
        const Vector offset = -p.G_r * (m.r - init.r);
        traj.times.push_back(t);
        traj.q_mean.push_back(kernels::column_sum(Q) * inv_n);
        traj.q_second.push_back(Q * Q.transpose() * inv_n);
        traj.res_ind3.push_back(kernels::max_offset_deviation(Q, q_in.Q, offset));
        sys.rhs(y, dy);
        const Eigen::Map<const Matrix> dQ(dy.data() + 2 * nr, nq, np);
        traj.res_ind2.push_back(
            kernels::max_offset_deviation(dQ, Matrix::Zero(nq, np), -p.G_r * m.s));
        if (options.store_ensemble) {
            traj.ensemble.push_back(ParticleEnsemble{Q});
        }
        if (options.store_multipliers) {
            traj.multipliers.push_back(recover_multipliers(p, m, ParticleEnsemble{Q}, s_dot));
        }
        traj.accel.push_back(s_dot);
        traj.macro.push_back(std::move(m));
    };

    traj.stats = integrate_dopri5(rhs, y0, 0.0, times, solver.ode(), observe);
    return traj;
}

ExplicitSolution::ExplicitSolution(const ModelParams& p, double r_in, double s_in,
                                   double mu_in_mean)
    : r_in_(r_in), s_in_(s_in) {
    if (p.n_r() != 1 || p.n_q() != 1) {
        throw Unsupported("explicit_solution requires n_r = n_q = 1");
    }
    const double m_eff = effective_mass(p)(0, 0);
    const double gamma_eff = effective_stiffness(p)(0, 0);
    if (!(gamma_eff > 0.0)) {
        throw Unsupported("explicit_solution requires a positive effective stiffness");
    }
    omega_ = std::sqrt(gamma_eff / m_eff);
    r0_ = equilibrium(p, Vector::Constant(1, r_in), Gaussian{mu_in_mean, 1.0})(0);
}

MacroState ExplicitSolution::operator()(double t) const {
    const double c = std::cos(omega_ * t);
    const double s = std::sin(omega_ * t);
    MacroState out;
    out.r = Vector::Constant(1, r0_ + (r_in_ - r0_) * c + (s_in_ / omega_) * s);
    out.s = Vector::Constant(1, -(r_in_ - r0_) * omega_ * s + s_in_ * c);
    return out;
}

ExplicitSolution explicit_solution(const ModelParams& p, double r_in, double s_in,
                                   double mu_in_mean) {
    return ExplicitSolution(p, r_in, s_in, mu_in_mean);
}

Matrix recover_multipliers(const ModelParams& p, const MacroState&, const ParticleEnsemble& ensemble,
                           const Vector& s_dot) {
    Matrix lambda = -p.gamma_q * ensemble.Q;
    lambda.colwise() += p.M_q * p.G_r * s_dot;
    return lambda;
}

Vector macro_balance_residual(const ModelParams& p, const MacroState& state,
                              const Matrix& multipliers, const Vector& s_dot) {
    return p.M_r * s_dot + p.gamma_r * state.r +
           p.particle_scale() * p.G_r.transpose() * kernels::column_sum(multipliers);
}

ConstraintResiduals constraint_residuals(const ModelParams& p, const MicroTrajectory& traj) {
    if (traj.ensemble.size() != traj.times.size()) {
        throw std::invalid_argument("constraint_residuals needs a trajectory with stored ensembles");
    }
    ConstraintResiduals out;
    out.index3.reserve(traj.times.size());
    out.index2.reserve(traj.times.size());
    for (std::size_t k = 0; k < traj.times.size(); ++k) {
        const MacroState& m = traj.macro[k];
        const Matrix& Q = traj.ensemble[k].Q;
        const Vector offset = -p.G_r * (m.r - traj.r_in);
        out.index3.push_back(kernels::max_offset_deviation_serial(Q, traj.q_in.Q, offset));
        const MicroDerivative d = ode_rhs(p, m, traj.ensemble[k]);
        Matrix velocity_defect = d.Q_dot;
        velocity_defect.colwise() += p.G_r * m.s;
        double worst = 0.0;
        for (Eigen::Index j = 0; j < velocity_defect.cols(); ++j) {
            worst = std::max(worst, velocity_defect.col(j).norm());
        }
        out.index2.push_back(worst);
    }
    return out;
}

EnergyReport energy_micro(const ModelParams& p, const MicroTrajectory& traj) {
    EnergyReport e;
    e.times = traj.times;
    for (std::size_t k = 0; k < traj.times.size(); ++k) {
        const MacroState& m = traj.macro[k];
        const Vector q_vel = p.G_r * m.s;
        const double t_r = 0.5 * m.s.dot(p.M_r * m.s);
        // (N_real / N) * N identical particle velocities.
        const double t_q = 0.5 * p.N_real * q_vel.dot(p.M_q * q_vel);
        const double u_r = 0.5 * m.r.dot(p.gamma_r * m.r);
        const double u_q = 0.5 * p.N_real * (p.gamma_q * traj.q_second[k]).trace();
        e.T_r.push_back(t_r);
        e.T_q.push_back(t_q);
        e.U_r.push_back(u_r);
        e.U_q.push_back(u_q);
        e.E_total.push_back(t_r + t_q + u_r + u_q);
    }
    return e;
}

}  // namespace pks

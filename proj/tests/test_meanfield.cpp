#include "pks/harness.hpp"
#include "pks/kernels.hpp"
#include "pks/meanfield.hpp"
#include "pks/metrics.hpp"

#include <catch_amalgamated.hpp>

#include <cmath>
#include <random>

using namespace pks;
using Catch::Matchers::WithinAbs;

namespace {

Vector vec1(double x) { return Vector::Constant(1, x); }

const Vector kRin = vec1(1.0);
const Vector kSin = vec1(0.0);
const Measure1D kMuIn = Gaussian{-2.0, 1.0};

double macro_gap(const KineticTrajectory& a, const KineticTrajectory& b) {
    double gap = 0.0;
    for (std::size_t k = 0; k < a.times.size(); ++k) {
        gap = std::max(gap, std::abs(a.macro[k].r[0] - b.macro[k].r[0]));
    }
    return gap;
}

KineticTrajectory pde_run(double lo, double hi, std::size_t n) {
    const GridDensity u = initial_grid(kMuIn, GridSpec{lo, hi, n});
    return integrate_pde_coupled(reference_params(), kRin, kSin, u, 60.0);
}

const KineticTrajectory& moment_reference() {
    static const KineticTrajectory traj = integrate_moment_ode(reference_params(), kRin, kSin, kMuIn, 60.0);
    return traj;
}

}  // namespace

TEST_CASE("characteristic flow", "[meanfield]") {
    const ModelParams p = reference_params();
    CHECK(characteristic_flow(p, vec1(1.3), vec1(1.3), vec1(-2.0))[0] == -2.0);
    CHECK_THAT(characteristic_flow(p, vec1(1.5), vec1(1.0), vec1(-2.0))[0], WithinAbs(-1.5, 1e-15));
    ModelParams decoupled = p;
    decoupled.G_r.setZero();
    CHECK(characteristic_flow(decoupled, vec1(9.0), vec1(1.0), vec1(-2.0))[0] == -2.0);
}

TEST_CASE("pushforward", "[meanfield]") {
    const ModelParams p = reference_params();
    const auto same = std::get<Gaussian>(pushforward(p, kMuIn, kRin, kRin));
    CHECK(same.mean == -2.0);
    const auto moved = std::get<Gaussian>(pushforward(p, kMuIn, vec1(1.5), kRin));
    CHECK_THAT(moved.mean, WithinAbs(-1.5, 1e-15));

    // G_r = -1: r - r_in = 2 shifts by +2.
    const Measure1D dirac = EmpiricalMeasure::dirac(0.0);
    const Measure1D pushed = pushforward(p, dirac, vec1(3.0), kRin);
    CHECK(std::get<EmpiricalMeasure>(pushed).atoms(0, 0) == 2.0);
    CHECK_THAT(w1(dirac, pushed), WithinAbs(2.0, 1e-15));
}

TEST_CASE("pushforward composes additively", "[meanfield][property]") {
    const ModelParams p = reference_params();
    std::mt19937_64 gen(5);
    std::uniform_real_distribution<double> unif(-1.0, 1.0);
    for (int trial = 0; trial < 200; ++trial) {
        const Vector r1 = vec1(1.0 + unif(gen));
        const Vector r2 = vec1(1.0 + unif(gen));
        Matrix atoms = Matrix::NullaryExpr(1, 15, [&] { return 3.0 * unif(gen); });
        const Measure1D e = EmpiricalMeasure::uniform(atoms);
        const Measure1D two_step = pushforward(p, pushforward(p, e, r1, kRin), r2, r1);
        const Measure1D direct = pushforward(p, e, r2, kRin);
        CHECK(w1(two_step, direct) <= 1e-12);

        const Measure1D g2 = pushforward(p, pushforward(p, kMuIn, r1, kRin), r2, r1);
        CHECK(w1(g2, pushforward(p, kMuIn, r2, kRin)) <= 1e-12);
    }
    // Grid: two linear resamplings against one; interpolation error only.
    const Measure1D grid = GridDensity::from_gaussian(-2.0, 1.0, -9.0, 11.0, 401);
    const Measure1D g_two = pushforward(p, pushforward(p, grid, vec1(1.37), kRin), vec1(1.81), vec1(1.37));
    const Measure1D g_one = pushforward(p, grid, vec1(1.81), kRin);
    CHECK(w1(g_two, g_one) <= 1e-3);
}

TEST_CASE("moment ODE is the closed-form kinetic solution", "[meanfield]") {
    const ModelParams p = reference_params();
    const KineticTrajectory& traj = moment_reference();
    const ExplicitSolution exact = explicit_solution(p, 1.0, 0.0, -2.0);
    double dev = 0.0;
    double transport = 0.0;
    for (std::size_t k = 0; k < traj.times.size(); ++k) {
        dev = std::max(dev, std::abs(traj.macro[k].r[0] - exact(traj.times[k]).r[0]));
        const double m1 = traj.first_moment[k][0];
        transport = std::max(transport, std::abs(m1 + p.G_r(0, 0) * (traj.macro[k].r[0] - 1.0) + 2.0));
    }
    CHECK(dev <= 1e-6);
    CHECK(transport <= 1e-12);

    const KineticTrajectory rest = integrate_moment_ode(p, vec1(1.5), kSin, Gaussian{-1.5, 1.0}, 60.0);
    for (const auto& m : rest.macro) {
        CHECK_THAT(m.r[0], WithinAbs(1.5, 1e-12));
    }
}

TEST_CASE("upwind stencil", "[meanfield]") {
    const ModelParams p = reference_params();
    GridDensity u;
    u.lo = -5.0;
    u.hi = 7.0;
    u.values = Vector::Zero(101);

    CHECK((upwind_rhs(p, GridDensity::from_gaussian(0, 1, -5, 7, 101), 0.0).array() == 0.0).all());

    u.values.setConstant(3.0);
    const Vector flat = upwind_rhs(p, u, 0.8);
    CHECK((flat.segment(1, 99).array() == 0.0).all());

    u.values.setZero();
    u.values[40] = 1.0;
    const Vector du = upwind_rhs(p, u, 1.0);
    const double dx = 0.12;
    CHECK_THAT(du[40], WithinAbs(-1.0 / dx, 1e-12));
    CHECK_THAT(du[41], WithinAbs(1.0 / dx, 1e-12));
    CHECK(du.cwiseAbs().sum() - 2.0 / dx <= 1e-9);

    const Vector back = upwind_rhs(p, u, -1.0);
    CHECK_THAT(back[40], WithinAbs(-1.0 / dx, 1e-12));
    CHECK_THAT(back[39], WithinAbs(1.0 / dx, 1e-12));

    GridDensity tiny;
    tiny.lo = 0.0;
    tiny.hi = 1.0;
    tiny.values = Vector::Ones(2);
    CHECK_THROWS_AS(upwind_rhs(p, tiny, 1.0), std::invalid_argument);
}

TEST_CASE("upwind transports toward positive q for positive velocity", "[meanfield]") {
    GridDensity u = GridDensity::from_gaussian(0.0, 0.25, -4.0, 8.0, 601);
    const double dx = u.dx();
    const double v = 0.5;
    const double dt = 0.5 * dx / v;
    std::vector<double> cur(u.values.data(), u.values.data() + u.values.size());
    std::vector<double> du(cur.size());
    for (int step = 0; step < 200; ++step) {
        kernels::upwind_serial(cur, v, dx, du);
        for (std::size_t i = 0; i < cur.size(); ++i) {
            cur[i] += dt * du[i];
        }
    }
    u.values = Eigen::Map<Vector>(cur.data(), static_cast<Eigen::Index>(cur.size()));
    CHECK_THAT(first_moment(u)[0], WithinAbs(v * 200 * dt, 1e-6));
}

TEST_CASE("upwind with explicit Euler keeps densities non-negative", "[meanfield][property]") {
    std::mt19937_64 gen(17);
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    for (int trial = 0; trial < 200; ++trial) {
        const std::size_t n = 20 + static_cast<std::size_t>(80 * unif(gen));
        std::vector<double> u(n);
        for (auto& x : u) {
            x = unif(gen) < 0.3 ? 0.0 : unif(gen);
        }
        std::vector<double> du(n);
        const double dx = 0.05 + unif(gen);
        for (int step = 0; step < 50; ++step) {
            const double v = 4.0 * (unif(gen) - 0.5);
            const double cfl = unif(gen);
            const double dt = v == 0.0 ? 0.1 : cfl * dx / std::abs(v);
            kernels::upwind_serial(u, v, dx, du);
            for (std::size_t i = 0; i < n; ++i) {
                u[i] += dt * du[i];
            }
        }
        CHECK(*std::min_element(u.begin(), u.end()) >= -1e-12);
    }
}

TEST_CASE("decoupled PDE keeps the density frozen", "[meanfield]") {
    ModelParams p = reference_params();
    p.G_r.setZero();
    const GridDensity u = initial_grid(kMuIn, GridSpec{});
    const KineticTrajectory traj = integrate_pde_coupled(p, kRin, kSin, u, 60.0);
    for (std::size_t k = 0; k < traj.times.size(); k += 50) {
        CHECK((traj.snapshots[k].values - u.values).cwiseAbs().maxCoeff() == 0.0);
        const double w = std::sqrt(1.0 / 20.0);
        CHECK_THAT(traj.macro[k].r[0], WithinAbs(std::cos(w * traj.times[k]), 1e-6));
    }
}

TEST_CASE("PDE and moment ODE agree when the grid holds the support", "[meanfield]") {
    const KineticTrajectory wide = pde_run(-9.0, 11.0, 167);
    CHECK(macro_gap(wide, moment_reference()) <= 1e-5);
    CHECK(wide.warnings.empty());
    double mass_drift = 0.0;
    for (double m : wide.mass) {
        mass_drift = std::max(mass_drift, std::abs(m - wide.mass.front()));
    }
    CHECK(mass_drift <= 1e-6);
    CHECK(commutation_check(reference_params(), wide) <= 5e-3);
}

TEST_CASE("default grid: PDE within 0.02 of the moment ODE", "[meanfield][!mayfail]") {
    CHECK(macro_gap(pde_run(-5.0, 7.0, 101), moment_reference()) <= 0.02);
}

TEST_CASE("default grid: mass drift below 1e-3", "[meanfield][!mayfail]") {
    const KineticTrajectory traj = pde_run(-5.0, 7.0, 101);
    double drift = 0.0;
    for (double m : traj.mass) {
        drift = std::max(drift, std::abs(m - traj.mass.front()));
    }
    CHECK(drift <= 1e-3);
}

TEST_CASE("default grid: PDE commutation residual below 5e-3", "[meanfield][!mayfail]") {
    CHECK(commutation_check(reference_params(), pde_run(-5.0, 7.0, 101)) <= 5e-3);
}

TEST_CASE("default grid: refinement shrinks the PDE gap", "[meanfield]") {
    const double coarse = macro_gap(pde_run(-5.0, 7.0, 101), moment_reference());
    const double fine = macro_gap(pde_run(-5.0, 7.0, 201), moment_reference());
    CHECK(coarse / fine >= 1.5);
}

TEST_CASE("boundary outflow is reported", "[meanfield]") {
    const KineticTrajectory traj = pde_run(-5.0, 7.0, 101);
    REQUIRE_FALSE(traj.warnings.empty());
    CHECK(traj.mass_in < 1.0);
    CHECK(traj.mass_in > 0.998);

    GridDensity bad = initial_grid(kMuIn, GridSpec{});
    bad.values[50] = -1.0;
    CHECK_THROWS_AS(integrate_pde_coupled(reference_params(), kRin, kSin, bad, 1.0), std::invalid_argument);
}

TEST_CASE("variance never decreases under upwind transport", "[meanfield][property]") {
    const KineticTrajectory traj = pde_run(-9.0, 11.0, 167);
    for (std::size_t k = 1; k < traj.times.size(); ++k) {
        CHECK(central_variance(traj, k) >= central_variance(traj, k - 1) - 1e-10);
    }
    CHECK(central_variance(traj, traj.times.size() - 1) > 1.0);
}

TEST_CASE("mean-field multiplier", "[meanfield]") {
    const ModelParams p = reference_params();
    CHECK(mean_field_multiplier(p, vec1(0.0), vec1(0.0))[0] == 0.0);
    CHECK_THAT(mean_field_multiplier(p, vec1(-2.0), vec1(1.0 / 30.0))[0],
               WithinAbs(0.008 - 0.04 * (1.0 / 30.0), 1e-15));
}

TEST_CASE("kinetic multipliers satisfy the reduced balance law", "[meanfield]") {
    const ModelParams p = reference_params();
    CHECK(commutation_check(p, moment_reference()) <= 1e-8);
    CHECK(commutation_check(p, integrate_moment_ode(p, vec1(1.5), kSin, Gaussian{-1.5, 1.0}, 60.0)) <= 1e-12);
}

TEST_CASE("kinetic energy bookkeeping", "[meanfield]") {
    const ModelParams p = reference_params();
    const EnergyReport exact = energy_kinetic(p, moment_reference());
    CHECK_THAT(exact.U_q[0], WithinAbs(0.5 * 250 * 0.004 * 5.0, 1e-12));
    CHECK_THAT(exact.E_total[0], WithinAbs(3.0, 1e-12));
    CHECK(exact.T_r[0] == 0.0);
    CHECK(exact.relative_drift() <= 1e-6);

    const EnergyReport pde = energy_kinetic(p, pde_run(-5.0, 7.0, 101));
    CHECK(pde.E_total.back() > pde.E_total.front());
}

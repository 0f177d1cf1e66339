#include "pks/core_model.hpp"

#include <catch_amalgamated.hpp>

#include <cmath>
#include <numbers>
#include <random>

using namespace pks;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

namespace {

double normal_pdf(double x, double mean, double var) {
    return std::exp(-0.5 * (x - mean) * (x - mean) / var) / std::sqrt(2.0 * std::numbers::pi * var);
}

Vector vec1(double x) { return Vector::Constant(1, x); }

}  // namespace

TEST_CASE("table parameters carry per-particle mass and stiffness", "[core_model]") {
    const ModelParams p = reference_params();
    REQUIRE_NOTHROW(p.validate());
    CHECK_THAT(p.particle_mass()(0, 0), WithinRel(0.04, 1e-14));
    CHECK_THAT(p.particle_stiffness()(0, 0), WithinRel(0.004, 1e-14));
}

TEST_CASE("scale_particles redistributes mass over N simulated particles", "[core_model]") {
    const ModelParams base = reference_params();

    SECTION("N = 500 halves the per-particle values and keeps m_eff") {
        const ModelParams p = scale_particles(base, 500);
        CHECK(p.N == 500);
        CHECK(p.N_real == 250.0);
        CHECK_THAT(p.particle_mass()(0, 0), WithinRel(250.0 / 500.0 * 0.04, 1e-14));
        CHECK_THAT(p.particle_stiffness()(0, 0), WithinRel(250.0 / 500.0 * 0.004, 1e-14));
        CHECK_THAT(effective_mass(p)(0, 0), WithinRel(30.0, 1e-14));
    }
    SECTION("N = N_real is the identity") {
        const ModelParams p = scale_particles(base, 250);
        CHECK(p.M_r == base.M_r);
        CHECK(p.M_q == base.M_q);
        CHECK(p.gamma_q == base.gamma_q);
        CHECK(p.N == base.N);
    }
    SECTION("N = 0 is rejected") {
        CHECK_THROWS_AS(scale_particles(base, 0), std::invalid_argument);
    }
}

TEST_CASE("effective mass and stiffness", "[core_model]") {
    ModelParams p = reference_params();
    CHECK_THAT(effective_mass(p)(0, 0), WithinRel(20.0 + 250.0 * (-1.0) * 0.04 * (-1.0), 1e-14));
    CHECK_THAT(effective_stiffness(p)(0, 0), WithinRel(1.0 + 250.0 * (-1.0) * 0.004 * (-1.0), 1e-14));

    ModelParams empty = p;
    empty.N_real = 0.0;
    CHECK(effective_mass(empty)(0, 0) == 20.0);
    CHECK(effective_stiffness(empty)(0, 0) == 1.0);

    ModelParams decoupled = p;
    decoupled.G_r.setZero();
    CHECK(effective_mass(decoupled)(0, 0) == 20.0);
    CHECK(effective_stiffness(decoupled)(0, 0) == 1.0);
}

TEST_CASE("equilibrium of the benchmark configuration", "[core_model]") {
    const ModelParams p = reference_params();
    CHECK_THAT(equilibrium(p, vec1(1.0), Gaussian{-2.0, 1.0})[0], WithinAbs(1.5, 1e-12));

    ModelParams no_force = p;
    no_force.gamma_q.setZero();
    CHECK(equilibrium(no_force, vec1(1.0), Gaussian{-2.0, 1.0})[0] == 0.0);

    CHECK(equilibrium(p, vec1(0.0), Gaussian{0.0, 1.0})[0] == 0.0);

    EmpiricalMeasure bad = EmpiricalMeasure::dirac(std::numeric_limits<double>::infinity());
    CHECK_THROWS_AS(equilibrium(p, vec1(1.0), bad), std::invalid_argument);
}

TEST_CASE("mean-field force", "[core_model]") {
    const ModelParams p = reference_params();
    CHECK_THAT(mean_field_force(p, Gaussian{-2.0, 1.0})[0], WithinAbs(250 * -1.0 * 0.004 * -2.0, 1e-12));
    CHECK(mean_field_force(p, EmpiricalMeasure::dirac(0.0))[0] == 0.0);
    Matrix atoms(1, 2);
    atoms << 1.0, 3.0;
    CHECK_THAT(mean_field_force(p, EmpiricalMeasure::uniform(atoms))[0],
               WithinAbs(250 * -1.0 * 0.004 * 2.0, 1e-12));
}

TEST_CASE("first moments", "[core_model]") {
    CHECK(first_moment(Gaussian{-2.0, 1.0})[0] == -2.0);
    Matrix atoms(1, 3);
    atoms << 0.0, 1.0, 2.0;
    CHECK_THAT(first_moment(EmpiricalMeasure::uniform(atoms))[0], WithinAbs(1.0, 1e-15));

    const GridDensity g = GridDensity::from_gaussian(-2.0, 1.0, -5.0, 7.0, 101);
    // Independent trapezoid oracle on the pointwise pdf samples.
    const double dx = 12.0 / 100.0;
    double oracle = 0.0;
    for (int i = 0; i <= 100; ++i) {
        const double y = -5.0 + i * dx;
        const double w = (i == 0 || i == 100) ? 0.5 : 1.0;
        oracle += w * dx * y * normal_pdf(y, -2.0, 1.0);
    }
    CHECK_THAT(first_moment(g)[0], WithinAbs(oracle, 1e-13));

    // Truncated Gaussian moment on [-5, 7]: m * mass - (pdf(hi) - pdf(lo)) * var.
    const auto Phi = [](double z) { return 0.5 * std::erfc(-z / std::numbers::sqrt2); };
    const double mass = Phi(9.0) - Phi(-3.0);
    const double truncated = -2.0 * mass - (normal_pdf(7.0, -2.0, 1.0) - normal_pdf(-5.0, -2.0, 1.0));
    CHECK_THAT(first_moment(g)[0], WithinAbs(truncated, 1e-4));

    const GridDensity wide = GridDensity::from_gaussian(-2.0, 1.0, -10.0, 6.0, 161);
    CHECK_THAT(first_moment(wide)[0], WithinAbs(-2.0, 1e-3));
}

TEST_CASE("grid first moment of the default Gaussian is -2 within 1e-3", "[core_model][!mayfail]") {
    const GridDensity g = GridDensity::from_gaussian(-2.0, 1.0, -5.0, 7.0, 101);
    CHECK_THAT(first_moment(g)[0], WithinAbs(-2.0, 1e-3));
}

TEST_CASE("second moment and total mass", "[core_model]") {
    CHECK_THAT(second_moment(Gaussian{-2.0, 1.0})(0, 0), WithinAbs(5.0, 1e-15));
    CHECK(total_mass(Gaussian{-2.0, 1.0}) == 1.0);
    const GridDensity g = GridDensity::from_gaussian(0.0, 1.0, -10.0, 10.0, 401);
    CHECK_THAT(total_mass(g), WithinAbs(1.0, 1e-12));
    CHECK_THAT(second_moment(g)(0, 0), WithinAbs(1.0, 1e-10));
}

TEST_CASE("shift moves every representation by w", "[core_model]") {
    const Vector w = vec1(0.5);
    const auto g = std::get<Gaussian>(shift(Gaussian{-2.0, 1.0}, w));
    CHECK(g.mean == -1.5);
    CHECK(g.var == 1.0);

    const auto e = std::get<EmpiricalMeasure>(shift(EmpiricalMeasure::dirac(0.0), vec1(2.0)));
    CHECK(e.atoms(0, 0) == 2.0);

    const GridDensity grid = GridDensity::from_gaussian(0.0, 1.0, -6.0, 6.0, 121);
    const auto moved = std::get<GridDensity>(shift(grid, vec1(0.3)));
    CHECK_THAT(first_moment(moved)[0], WithinAbs(0.3, 2e-3));
    CHECK_THAT(shifted_first_moment(grid, vec1(0.3))[0],
               WithinAbs(first_moment(grid)[0] + total_mass(grid) * 0.3, 1e-15));
}

TEST_CASE("effective quantities are symmetric for symmetric inputs", "[core_model][property]") {
    std::mt19937_64 gen(7);
    std::uniform_real_distribution<double> unif(-1.0, 1.0);
    auto spd = [&](Eigen::Index n) {
        Matrix a = Matrix::NullaryExpr(n, n, [&] { return unif(gen); });
        return Matrix(a * a.transpose() + Matrix::Identity(n, n));
    };
    for (int trial = 0; trial < 100; ++trial) {
        ModelParams p;
        p.M_r = spd(2);
        p.M_q = spd(3);
        p.gamma_r = spd(2);
        p.gamma_q = spd(3);
        p.G_r = Matrix::NullaryExpr(3, 2, [&] { return unif(gen); });
        p.N_real = 10.0 + 100.0 * std::abs(unif(gen));
        p.N = 7;
        REQUIRE_NOTHROW(p.validate());
        const Matrix me = effective_mass(p);
        const Matrix ge = effective_stiffness(p);
        CHECK((me - me.transpose()).cwiseAbs().maxCoeff() <= 1e-12 * me.cwiseAbs().maxCoeff());
        CHECK((ge - ge.transpose()).cwiseAbs().maxCoeff() <= 1e-12 * ge.cwiseAbs().maxCoeff());
    }
}

TEST_CASE("scaling leaves effective quantities stable", "[core_model][property]") {
    const ModelParams base = reference_params();
    for (std::size_t N : {1u, 2u, 3u, 17u, 250u, 1000u, 4096u, 100000u}) {
        const ModelParams p = scale_particles(base, N);
        CHECK_THAT(effective_mass(p)(0, 0), WithinRel(effective_mass(base)(0, 0), 1e-14));
        CHECK_THAT(effective_stiffness(p)(0, 0), WithinRel(effective_stiffness(base)(0, 0), 1e-14));
    }
}

TEST_CASE("mean-field force is linear in the first moment", "[core_model][property]") {
    const ModelParams p = reference_params();
    std::mt19937_64 gen(11);
    std::normal_distribution<double> normal;
    for (int trial = 0; trial < 200; ++trial) {
        Matrix atoms = Matrix::NullaryExpr(1, 20, [&] { return normal(gen); });
        const Measure1D mu = EmpiricalMeasure::uniform(atoms);
        const Vector w = vec1(3.0 * normal(gen));
        const Vector lhs = mean_field_force(p, shift(mu, w)) - mean_field_force(p, mu);
        const Vector rhs = p.N_real * p.G_r.transpose() * p.gamma_q * w;
        CHECK_THAT(lhs[0], WithinAbs(rhs[0], 1e-12));
    }
}

TEST_CASE("equilibrium is the fixed point of the pushed-forward force", "[core_model][property]") {
    const ModelParams p = reference_params();
    std::mt19937_64 gen(3);
    std::uniform_real_distribution<double> unif(-3.0, 3.0);
    for (int trial = 0; trial < 100; ++trial) {
        const Vector r_in = vec1(unif(gen));
        const Measure1D mu_in = Gaussian{unif(gen), 1.0 + std::abs(unif(gen))};
        const Vector r0 = equilibrium(p, r_in, mu_in);
        const Measure1D mu0 = shift(mu_in, -p.G_r * (r0 - r_in));
        const Vector balance = mean_field_force(p, mu0) - p.gamma_r * r0;
        CHECK(std::abs(balance[0]) <= 1e-10);
    }
}

TEST_CASE("validation rejects malformed parameters and measures", "[core_model]") {
    ModelParams p = reference_params();
    p.M_r(0, 0) = -1.0;
    CHECK_THROWS_AS(p.validate(), std::invalid_argument);

    p = reference_params();
    p.N_real = -1.0;
    CHECK_THROWS_AS(p.validate(), std::invalid_argument);

    p = reference_params();
    p.G_r = Matrix::Zero(2, 1);
    CHECK_THROWS_AS(p.validate(), std::invalid_argument);

    EmpiricalMeasure e = EmpiricalMeasure::dirac(0.0);
    e.weights[0] = 0.5;
    CHECK_THROWS_AS(e.validate(), std::invalid_argument);

    CHECK_THROWS_AS(validate(Gaussian{0.0, -1.0}), std::invalid_argument);
    CHECK_THROWS_AS(GridDensity::from_gaussian(0.0, 1.0, -1.0, 1.0, 1), std::invalid_argument);
    CHECK_THROWS_AS(GridDensity::from_gaussian(0.0, 1.0, 1.0, -1.0, 11), std::invalid_argument);
}

#include "pks/errors.hpp"
#include "pks/ode.hpp"

#include <catch_amalgamated.hpp>

#include <cmath>
#include <vector>

using namespace pks;
using Catch::Matchers::WithinAbs;

namespace {

// y'' = -y as a first-order system; exact solution (cos t, -sin t).
void oscillator(double, const Vector& y, Vector& dy) {
    dy.resize(2);
    dy[0] = y[1];
    dy[1] = -y[0];
}

double oscillator_error(double tol, std::size_t n_samples, OdeStats* stats = nullptr) {
    Vector y0(2);
    y0 << 1.0, 0.0;
    OdeOptions opt;
    opt.rtol = opt.atol = tol;
    const auto times = uniform_times(20.0, n_samples);
    double err = 0.0;
    const OdeStats s = integrate_dopri5(oscillator, y0, 0.0, times, opt,
                                        [&err](double t, const Vector& y) {
                                            err = std::max(err, std::abs(y[0] - std::cos(t)));
                                            err = std::max(err, std::abs(y[1] + std::sin(t)));
                                        });
    if (stats != nullptr) {
        *stats = s;
    }
    return err;
}

}  // namespace

TEST_CASE("uniform output grid", "[ode]") {
    const auto t = uniform_times(60.0, 601);
    REQUIRE(t.size() == 601);
    CHECK(t.front() == 0.0);
    CHECK(t.back() == 60.0);
    CHECK_THAT(t[10], WithinAbs(1.0, 1e-14));
    CHECK(uniform_times(0.0, 601) == std::vector<double>{0.0});
    CHECK(uniform_times(5.0, 1) == std::vector<double>{0.0});
}

TEST_CASE("harmonic oscillator at tight tolerance", "[ode]") {
    OdeStats stats;
    CHECK(oscillator_error(1e-10, 201, &stats) <= 1e-8);
    CHECK(stats.accepted > 0);
    CHECK(stats.rhs_evals >= 6 * stats.accepted);
}

TEST_CASE("dense output is accurate between steps", "[ode]") {
    // Many more samples than steps: most samples come from the interpolant.
    OdeStats stats;
    const double err = oscillator_error(1e-9, 20001, &stats);
    CHECK(stats.accepted < 2000);
    CHECK(err <= 1e-7);
}

TEST_CASE("error falls with the tolerance", "[ode]") {
    const double coarse = oscillator_error(1e-5, 101);
    const double fine = oscillator_error(1e-9, 101);
    CHECK(fine < coarse / 100.0);
}

TEST_CASE("observer sees the initial state and only requested times", "[ode]") {
    Vector y0(1);
    y0 << 2.0;
    std::vector<double> seen;
    const std::vector<double> times{0.0, 0.5, 0.5, 1.0};
    integrate_dopri5([](double, const Vector& y, Vector& dy) { dy = -y; }, y0, 0.0, times, {},
                     [&](double t, const Vector& y) {
                         seen.push_back(t);
                         if (t == 0.0) {
                             CHECK(y[0] == 2.0);
                         } else {
                             CHECK_THAT(y[0], WithinAbs(2.0 * std::exp(-t), 1e-8));
                         }
                     });
    CHECK(seen == times);
}

TEST_CASE("integration failures carry the failure time", "[ode]") {
    // y' = y^2, y(0) = 1 blows up at t = 1.
    Vector y0(1);
    y0 << 1.0;
    const std::vector<double> times{0.0, 2.0};
    try {
        integrate_dopri5([](double, const Vector& y, Vector& dy) { dy = y.array().square(); }, y0,
                         0.0, times, {}, [](double, const Vector&) {});
        FAIL("expected IntegrationFailure");
    } catch (const IntegrationFailure& e) {
        CHECK_THAT(e.time(), WithinAbs(1.0, 1e-3));
    }

    OdeOptions tiny_budget;
    tiny_budget.max_steps = 3;
    CHECK_THROWS_AS(integrate_dopri5(oscillator, Vector::Unit(2, 0), 0.0,
                                     std::vector<double>{0.0, 50.0}, tiny_budget,
                                     [](double, const Vector&) {}),
                    IntegrationFailure);
}

TEST_CASE("maximum step is honoured", "[ode]") {
    OdeOptions opt;
    opt.max_step = 0.01;
    const OdeStats s = integrate_dopri5(oscillator, Vector::Unit(2, 0), 0.0,
                                        std::vector<double>{0.0, 1.0}, opt,
                                        [](double, const Vector&) {});
    CHECK(s.accepted >= 100);
}

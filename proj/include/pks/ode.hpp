#pragma once

#include "pks/core_model.hpp"

#include <cstddef>
#include <functional>
#include <limits>
#include <span>
#include <vector>

namespace pks {

struct OdeOptions {
    double rtol = 1e-8;
    double atol = 1e-8;
    double max_step = std::numeric_limits<double>::infinity();
    double initial_step = 0.0;  // 0 selects the step automatically
    std::size_t max_steps = 10'000'000;
};

struct OdeStats {
    std::size_t accepted = 0;
    std::size_t rejected = 0;
    std::size_t rhs_evals = 0;
};

using OdeRhs = std::function<void(double t, const Vector& y, Vector& dydt)>;
using OdeObserver = std::function<void(double t, const Vector& y)>;

/// Dormand-Prince 5(4) with local error control in the max norm of
/// err_i / (atol + rtol max(|y0_i|, |y1_i|)) and its fourth-order continuous
/// extension. The observer is called once per entry of sample_times (which must
/// be non-decreasing and not precede t0) with the interpolated state.
///
/// Throws IntegrationFailure when the step size underflows, the state becomes
/// non-finite or max_steps is exhausted.
OdeStats integrate_dopri5(const OdeRhs& rhs, const Vector& y0, double t0,
                          std::span<const double> sample_times, const OdeOptions& options,
                          const OdeObserver& observer);

/// n equidistant times on [0, t_end]; a single time when t_end == 0 or n == 1.
[[nodiscard]] std::vector<double> uniform_times(double t_end, std::size_t n);

}  // namespace pks

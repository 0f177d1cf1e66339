#include "pks/ode.hpp"

#include "pks/errors.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace pks {

namespace {

// Dormand-Prince tableau.
constexpr double c2 = 1.0 / 5.0, c3 = 3.0 / 10.0, c4 = 4.0 / 5.0, c5 = 8.0 / 9.0;
constexpr double a21 = 1.0 / 5.0;
constexpr double a31 = 3.0 / 40.0, a32 = 9.0 / 40.0;
constexpr double a41 = 44.0 / 45.0, a42 = -56.0 / 15.0, a43 = 32.0 / 9.0;
constexpr double a51 = 19372.0 / 6561.0, a52 = -25360.0 / 2187.0, a53 = 64448.0 / 6561.0,
                 a54 = -212.0 / 729.0;
constexpr double a61 = 9017.0 / 3168.0, a62 = -355.0 / 33.0, a63 = 46732.0 / 5247.0,
                 a64 = 49.0 / 176.0, a65 = -5103.0 / 18656.0;
constexpr double a71 = 35.0 / 384.0, a73 = 500.0 / 1113.0, a74 = 125.0 / 192.0,
                 a75 = -2187.0 / 6784.0, a76 = 11.0 / 84.0;
constexpr double e1 = 71.0 / 57600.0, e3 = -71.0 / 16695.0, e4 = 71.0 / 1920.0,
                 e5 = -17253.0 / 339200.0, e6 = 22.0 / 525.0, e7 = -1.0 / 40.0;
// Continuous extension (Hairer & Wanner, dopri5 contd5).
constexpr double d1 = -12715105075.0 / 11282082432.0, d3 = 87487479700.0 / 32700410799.0,
                 d4 = -10690763975.0 / 1880347072.0, d5 = 701980252875.0 / 199316789632.0,
                 d6 = -1453857185.0 / 822651844.0, d7 = 69997945.0 / 29380423.0;

double scaled_max(const Vector& v, const Vector& y0, const Vector& y1, const OdeOptions& o) {
    if (v.size() == 0) {
        return 0.0;
    }
    const Vector sc = (o.atol + o.rtol * y0.cwiseAbs().cwiseMax(y1.cwiseAbs()).array()).matrix();
    return (v.array() / sc.array()).abs().maxCoeff();
}

double initial_step(const OdeRhs& rhs, double t0, const Vector& y0, const Vector& f0,
                    const OdeOptions& o, OdeStats& stats) {
    const double d0 = scaled_max(y0, y0, y0, o);
    const double d1n = scaled_max(f0, y0, y0, o);
    double h0 = (d0 < 1e-5 || d1n < 1e-5) ? 1e-6 : 0.01 * d0 / d1n;
    h0 = std::min(h0, o.max_step);
    const Vector y1 = y0 + h0 * f0;
    Vector f1(y0.size());
    rhs(t0 + h0, y1, f1);
    ++stats.rhs_evals;
    const double d2 = scaled_max(f1 - f0, y0, y0, o) / h0;
    const double dmax = std::max(d1n, d2);
    const double h1 = dmax <= 1e-15 ? std::max(1e-6, h0 * 1e-3) : std::pow(0.01 / dmax, 0.2);
    return std::min({100.0 * h0, h1, o.max_step});
}

}  // namespace

std::vector<double> uniform_times(double t_end, std::size_t n) {
    if (!(t_end >= 0.0)) {
        throw std::invalid_argument("t_end must be non-negative");
    }
    if (t_end == 0.0 || n <= 1) {
        return {0.0};
    }
    std::vector<double> times(n);
    for (std::size_t k = 0; k < n; ++k) {
        times[k] = t_end * static_cast<double>(k) / static_cast<double>(n - 1);
    }
    times.back() = t_end;
    return times;
}

OdeStats integrate_dopri5(const OdeRhs& rhs, const Vector& y0, double t0,
                          std::span<const double> sample_times, const OdeOptions& options,
                          const OdeObserver& observer) {
    if (!(options.rtol > 0.0) || !(options.atol > 0.0)) {
        throw std::invalid_argument("integrator tolerances must be positive");
    }
    if (!(options.max_step > 0.0)) {
        throw std::invalid_argument("max_step must be positive");
    }
    for (std::size_t k = 0; k < sample_times.size(); ++k) {
        if (sample_times[k] < t0 || (k > 0 && sample_times[k] < sample_times[k - 1])) {
            throw std::invalid_argument("sample times must be non-decreasing and >= t0");
        }
    }

    OdeStats stats;
    std::size_t next = 0;
    while (next < sample_times.size() && sample_times[next] == t0) {
        observer(t0, y0);
        ++next;
    }
    if (next == sample_times.size()) {
        return stats;
    }
    const double t_final = sample_times.back();

    const Eigen::Index n = y0.size();
    Vector y = y0;
    Vector k1(n), k2(n), k3(n), k4(n), k5(n), k6(n), k7(n);
    Vector ytmp(n), ynew(n), err(n);
    Vector cont1(n), cont2(n), cont3(n), cont4(n), cont5(n);

    rhs(t0, y, k1);
    ++stats.rhs_evals;
    double t = t0;
    double h = options.initial_step > 0.0 ? std::min(options.initial_step, options.max_step)
                                          : initial_step(rhs, t0, y, k1, options, stats);
    bool last_rejected = false;

    while (next < sample_times.size()) {
        if (stats.accepted + stats.rejected >= options.max_steps) {
            throw IntegrationFailure("step budget exhausted", t);
        }
        const double remaining = t_final - t;
        bool final_step = false;
        if (h >= remaining) {
            h = remaining;
            final_step = true;
        }
        if (h <= 16.0 * std::numeric_limits<double>::epsilon() * std::max(1.0, std::abs(t))) {
            throw IntegrationFailure("step size underflow", t);
        }

        ytmp = y + h * a21 * k1;
        rhs(t + c2 * h, ytmp, k2);
        ytmp = y + h * (a31 * k1 + a32 * k2);
        rhs(t + c3 * h, ytmp, k3);
        ytmp = y + h * (a41 * k1 + a42 * k2 + a43 * k3);
        rhs(t + c4 * h, ytmp, k4);
        ytmp = y + h * (a51 * k1 + a52 * k2 + a53 * k3 + a54 * k4);
        rhs(t + c5 * h, ytmp, k5);
        ytmp = y + h * (a61 * k1 + a62 * k2 + a63 * k3 + a64 * k4 + a65 * k5);
        const double t_new = final_step ? t_final : t + h;
        rhs(t_new, ytmp, k6);
        ynew = y + h * (a71 * k1 + a73 * k3 + a74 * k4 + a75 * k5 + a76 * k6);
        rhs(t_new, ynew, k7);
        stats.rhs_evals += 6;

        err = h * (e1 * k1 + e3 * k3 + e4 * k4 + e5 * k5 + e6 * k6 + e7 * k7);
        const double err_norm = scaled_max(err, y, ynew, options);
        if (!std::isfinite(err_norm)) {
            throw IntegrationFailure("non-finite state", t);
        }

        if (err_norm <= 1.0) {
            cont1 = y;
            cont2 = ynew - y;
            cont3 = h * k1 - cont2;
            cont4 = cont2 - h * k7 - cont3;
            cont5 = h * (d1 * k1 + d3 * k3 + d4 * k4 + d5 * k5 + d6 * k6 + d7 * k7);
            while (next < sample_times.size() && sample_times[next] <= t_new) {
                const double ts = sample_times[next];
                if (ts == t_new) {
                    observer(ts, ynew);
                } else {
                    const double theta = (ts - t) / h;
                    const double theta1 = 1.0 - theta;
                    ytmp = cont1 + theta * (cont2 + theta1 * (cont3 + theta * (cont4 + theta1 * cont5)));
                    observer(ts, ytmp);
                }
                ++next;
            }
            ++stats.accepted;
            t = t_new;
            y.swap(ynew);
            k1.swap(k7);
            double fac = err_norm == 0.0 ? 10.0 : 0.9 * std::pow(err_norm, -0.2);
            fac = std::clamp(fac, 0.2, 10.0);
            if (last_rejected) {
                fac = std::min(fac, 1.0);
            }
            last_rejected = false;
            h = std::min(h * fac, options.max_step);
        } else {
            ++stats.rejected;
            last_rejected = true;
            h *= std::max(0.2, 0.9 * std::pow(err_norm, -0.2));
        }
    }
    return stats;
}

}  // namespace pks

#include "pks/metrics.hpp"

#include "pks/errors.hpp"
#include "pks/meanfield.hpp"

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/special_functions/erf.hpp>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <stdexcept>

namespace pks {

namespace {

constexpr double kGaussianTail = 12.0;  // standard deviations kept by the quadrature

void require_one_dimensional(const Measure1D& mu) {
    if (dimension(mu) != 1) {
        throw Unsupported("W1 is implemented for one-dimensional measures only");
    }
}

// Cumulative distribution function of a 1-D measure, normalised to unit mass.
class Cdf {
public:
    explicit Cdf(const Measure1D& mu) {
        validate(mu);
        require_one_dimensional(mu);
        if (const auto* e = std::get_if<EmpiricalMeasure>(&mu)) {
            const auto k = static_cast<std::size_t>(e->atoms.cols());
            std::vector<std::size_t> order(k);
            std::iota(order.begin(), order.end(), 0);
            std::sort(order.begin(), order.end(), [e](std::size_t i, std::size_t j) {
                return e->atoms(0, static_cast<Eigen::Index>(i)) <
                       e->atoms(0, static_cast<Eigen::Index>(j));
            });
            positions_.reserve(k);
            prefix_.reserve(k);
            double acc = 0.0;
            for (std::size_t i : order) {
                acc += e->weights[static_cast<Eigen::Index>(i)];
                positions_.push_back(e->atoms(0, static_cast<Eigen::Index>(i)));
                prefix_.push_back(acc);
            }
            for (double& v : prefix_) {
                v /= acc;
            }
            kind_ = Kind::empirical;
            lo_ = positions_.front();
            hi_ = positions_.back();
            breaks_ = positions_;
        } else if (const auto* g = std::get_if<GridDensity>(&mu)) {
            grid_ = *g;
            const std::size_t n = g->n_pts();
            prefix_.assign(n, 0.0);
            const double dx = g->dx();
            for (std::size_t i = 1; i < n; ++i) {
                const auto k = static_cast<Eigen::Index>(i);
                prefix_[i] = prefix_[i - 1] + 0.5 * dx * (g->values[k - 1] + g->values[k]);
            }
            mass_ = prefix_.back();
            if (!(mass_ > 0.0)) {
                throw std::invalid_argument("grid density has no mass");
            }
            kind_ = Kind::grid;
            lo_ = g->lo;
            hi_ = g->hi;
            for (std::size_t i = 0; i < n; ++i) {
                breaks_.push_back(g->node(i));
            }
        } else {
            const auto& gauss = std::get<Gaussian>(mu);
            mean_ = gauss.mean;
            sd_ = std::sqrt(gauss.var);
            kind_ = Kind::gaussian;
            lo_ = mean_ - kGaussianTail * sd_;
            hi_ = mean_ + kGaussianTail * sd_;
            breaks_ = {lo_, mean_, hi_};
        }
    }

    [[nodiscard]] double operator()(double x) const {
        switch (kind_) {
        case Kind::empirical: {
            const auto it = std::upper_bound(positions_.begin(), positions_.end(), x);
            if (it == positions_.begin()) {
                return 0.0;
            }
            return prefix_[static_cast<std::size_t>(it - positions_.begin()) - 1];
        }
        case Kind::grid: {
            if (x <= grid_.lo) {
                return 0.0;
            }
            if (x >= grid_.hi) {
                return 1.0;
            }
            const double dx = grid_.dx();
            const auto i = std::min(static_cast<std::size_t>((x - grid_.lo) / dx), grid_.n_pts() - 2);
            const double t = (x - grid_.node(i)) / dx;
            const double u0 = grid_.values[static_cast<Eigen::Index>(i)];
            const double u1 = grid_.values[static_cast<Eigen::Index>(i + 1)];
            return (prefix_[i] + dx * (u0 * t + 0.5 * (u1 - u0) * t * t)) / mass_;
        }
        case Kind::gaussian:
            return 0.5 * std::erfc(-(x - mean_) / (sd_ * std::numbers::sqrt2));
        }
        return 0.0;
    }

    [[nodiscard]] bool piecewise_polynomial() const { return kind_ != Kind::gaussian; }
    [[nodiscard]] double lo() const { return lo_; }
    [[nodiscard]] double hi() const { return hi_; }
    [[nodiscard]] const std::vector<double>& breaks() const { return breaks_; }

private:
    enum class Kind { empirical, grid, gaussian };
    Kind kind_ = Kind::gaussian;
    std::vector<double> positions_;
    std::vector<double> prefix_;
    std::vector<double> breaks_;
    GridDensity grid_;
    double mass_ = 1.0;
    double mean_ = 0.0;
    double sd_ = 1.0;
    double lo_ = 0.0;
    double hi_ = 0.0;
};

// \int_{x0}^{x1} |q| for the quadratic q interpolating (x0 + h/4, fa), (mid, fb), (x0 + 3h/4, fc).
double abs_quadratic_integral(double x0, double x1, double fa, double fb, double fc) {
    const double h = x1 - x0;
    // q(s) = fb + B s + A s^2 on s in [-1/2, 1/2].
    const double A = 8.0 * (fa + fc - 2.0 * fb);
    const double B = 2.0 * (fc - fa);
    const double scale = std::max({std::abs(fa), std::abs(fb), std::abs(fc), 1e-300});
    std::vector<double> cuts{-0.5};
    auto add_root = [&cuts](double s) {
        if (s > -0.5 && s < 0.5) {
            cuts.push_back(s);
        }
    };
    if (std::abs(A) <= 1e-13 * scale) {
        if (std::abs(B) > 1e-13 * scale) {
            add_root(-fb / B);
        }
    } else {
        const double disc = B * B - 4.0 * A * fb;
        if (disc > 0.0) {
            const double q = -0.5 * (B + std::copysign(std::sqrt(disc), B));
            add_root(q / A);
            if (q != 0.0) {
                add_root(fb / q);
            }
        }
    }
    cuts.push_back(0.5);
    std::sort(cuts.begin(), cuts.end());
    auto antiderivative = [&](double s) { return fb * s + 0.5 * B * s * s + A * s * s * s / 3.0; };
    double total = 0.0;
    for (std::size_t k = 0; k + 1 < cuts.size(); ++k) {
        total += std::abs(antiderivative(cuts[k + 1]) - antiderivative(cuts[k]));
    }
    return h * total;
}

std::vector<double> merged_breaks(const Cdf& a, const Cdf& b) {
    std::vector<double> pts;
    pts.reserve(a.breaks().size() + b.breaks().size());
    pts.insert(pts.end(), a.breaks().begin(), a.breaks().end());
    pts.insert(pts.end(), b.breaks().begin(), b.breaks().end());
    std::sort(pts.begin(), pts.end());
    pts.erase(std::unique(pts.begin(), pts.end()), pts.end());
    return pts;
}

}  // namespace

double w1_sorted(const EmpiricalMeasure& a, const EmpiricalMeasure& b) {
    a.validate();
    b.validate();
    if (a.atoms.rows() != 1 || b.atoms.rows() != 1) {
        throw Unsupported("W1 is implemented for one-dimensional measures only");
    }
    if (a.atoms.cols() != b.atoms.cols()) {
        throw std::invalid_argument("w1_sorted needs equal atom counts");
    }
    const double uniform = 1.0 / static_cast<double>(a.atoms.cols());
    if ((a.weights.array() - uniform).abs().maxCoeff() > 1e-15 ||
        (b.weights.array() - uniform).abs().maxCoeff() > 1e-15) {
        throw std::invalid_argument("w1_sorted needs uniform weights");
    }
    std::vector<double> xa(a.atoms.data(), a.atoms.data() + a.atoms.size());
    std::vector<double> xb(b.atoms.data(), b.atoms.data() + b.atoms.size());
    std::sort(xa.begin(), xa.end());
    std::sort(xb.begin(), xb.end());
    double acc = 0.0;
    for (std::size_t k = 0; k < xa.size(); ++k) {
        acc += std::abs(xa[k] - xb[k]);
    }
    return acc / static_cast<double>(xa.size());
}

double w1_cdf(const Measure1D& a, const Measure1D& b) {
    const Cdf fa(a);
    const Cdf fb(b);
    const std::vector<double> pts = merged_breaks(fa, fb);
    const bool exact = fa.piecewise_polynomial() && fb.piecewise_polynomial();
    auto diff = [&](double x) { return std::abs(fa(x) - fb(x)); };
    double total = 0.0;
    for (std::size_t k = 0; k + 1 < pts.size(); ++k) {
        const double x0 = pts[k];
        const double x1 = pts[k + 1];
        const double h = x1 - x0;
        if (exact) {
            total += abs_quadratic_integral(x0, x1, fa(x0 + 0.25 * h) - fb(x0 + 0.25 * h),
                                            fa(x0 + 0.5 * h) - fb(x0 + 0.5 * h),
                                            fa(x0 + 0.75 * h) - fb(x0 + 0.75 * h));
        } else {
            total += boost::math::quadrature::gauss_kronrod<double, 15>::integrate(diff, x0, x1, 12,
                                                                                   1e-12);
        }
    }
    return total;
}

double w1(const Measure1D& a, const Measure1D& b) {
    validate(a);
    validate(b);
    require_one_dimensional(a);
    require_one_dimensional(b);
    if (!first_moment(a).allFinite() || !first_moment(b).allFinite()) {
        throw std::invalid_argument("W1 needs measures with finite first moments");
    }
    const auto* ea = std::get_if<EmpiricalMeasure>(&a);
    const auto* eb = std::get_if<EmpiricalMeasure>(&b);
    if (ea != nullptr && eb != nullptr && ea->atoms.cols() == eb->atoms.cols()) {
        const double uniform = 1.0 / static_cast<double>(ea->atoms.cols());
        if ((ea->weights.array() - uniform).abs().maxCoeff() <= 1e-15 &&
            (eb->weights.array() - uniform).abs().maxCoeff() <= 1e-15) {
            return w1_sorted(*ea, *eb);
        }
    }
    const auto* ga = std::get_if<Gaussian>(&a);
    const auto* gb = std::get_if<Gaussian>(&b);
    if (ga != nullptr && gb != nullptr) {
        return w1_gaussian(*ga, *gb);
    }
    if (ea != nullptr && gb != nullptr) {
        return w1_empirical_gaussian(*ea, *gb);
    }
    if (ga != nullptr && eb != nullptr) {
        return w1_empirical_gaussian(*eb, *ga);
    }
    return w1_cdf(a, b);
}

double w1_gaussian(const Gaussian& a, const Gaussian& b) {
    // E|dm + ds Z| for Z standard normal.
    const double dm = b.mean - a.mean;
    const double ds = std::abs(std::sqrt(b.var) - std::sqrt(a.var));
    if (ds == 0.0) {
        return std::abs(dm);
    }
    const double z = dm / ds;
    return ds * std::sqrt(2.0 / std::numbers::pi) * std::exp(-0.5 * z * z) +
           dm * std::erf(z / std::numbers::sqrt2);
}

double w1_empirical_gaussian(const EmpiricalMeasure& a, const Gaussian& g) {
    a.validate();
    if (a.atoms.rows() != 1) {
        throw Unsupported("W1 is implemented for one-dimensional measures only");
    }
    const double sd = std::sqrt(g.var);
    auto z = [&](double x) { return (x - g.mean) / sd; };
    auto phi = [](double t) { return std::exp(-0.5 * t * t) / std::sqrt(2.0 * std::numbers::pi); };
    auto Phi = [](double t) { return 0.5 * std::erfc(-t / std::numbers::sqrt2); };
    // Antiderivatives of the Gaussian CDF and of its complement, in x.
    auto lower = [&](double x) { return sd * (z(x) * Phi(z(x)) + phi(z(x))); };
    auto upper = [&](double x) { return sd * (phi(z(x)) - z(x) * Phi(-z(x))); };
    // \int_x0^x1 |c - F(x)| dx on a segment where the empirical CDF equals c.
    auto segment = [&](double x0, double x1, double c) {
        auto signed_part = [&](double l, double r) { return c * (r - l) - (lower(r) - lower(l)); };
        const double cross = g.mean - sd * std::numbers::sqrt2 * boost::math::erfc_inv(2.0 * c);
        if (cross > x0 && cross < x1) {
            return std::abs(signed_part(x0, cross)) + std::abs(signed_part(cross, x1));
        }
        return std::abs(signed_part(x0, x1));
    };

    std::vector<std::size_t> order(static_cast<std::size_t>(a.atoms.cols()));
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&a](std::size_t i, std::size_t j) {
        return a.atoms(0, static_cast<Eigen::Index>(i)) < a.atoms(0, static_cast<Eigen::Index>(j));
    });
    auto atom = [&](std::size_t k) { return a.atoms(0, static_cast<Eigen::Index>(order[k])); };
    auto weight = [&](std::size_t k) { return a.weights[static_cast<Eigen::Index>(order[k])]; };

    double total = lower(atom(0));
    double level = 0.0;
    for (std::size_t k = 0; k + 1 < order.size(); ++k) {
        level += weight(k);
        if (atom(k + 1) > atom(k)) {
            total += segment(atom(k), atom(k + 1), std::clamp(level, 0.0, 1.0));
        }
    }
    return total + upper(atom(order.size() - 1));
}

double PiecewiseLinear::operator()(double x) const {
    const std::size_t n = knots.size();
    if (n == 0) {
        return 0.0;
    }
    if (n == 1) {
        return values[0];
    }
    std::size_t i = 0;
    if (x >= knots[n - 1]) {
        i = n - 2;
    } else if (x > knots[0]) {
        i = static_cast<std::size_t>(std::upper_bound(knots.begin(), knots.end(), x) - knots.begin()) - 1;
    }
    const double slope = (values[i + 1] - values[i]) / (knots[i + 1] - knots[i]);
    return values[i] + slope * (x - knots[i]);
}

bool PiecewiseLinear::is_lipschitz(double constant, double slack) const {
    if (knots.size() != values.size()) {
        return false;
    }
    for (std::size_t i = 0; i + 1 < knots.size(); ++i) {
        const double h = knots[i + 1] - knots[i];
        if (!(h > 0.0)) {
            return false;
        }
        if (std::abs(values[i + 1] - values[i]) > (constant + slack) * h) {
            return false;
        }
    }
    return true;
}

double integrate(const PiecewiseLinear& phi, const Measure1D& mu) {
    validate(mu);
    require_one_dimensional(mu);
    if (const auto* e = std::get_if<EmpiricalMeasure>(&mu)) {
        double acc = 0.0;
        for (Eigen::Index k = 0; k < e->atoms.cols(); ++k) {
            acc += e->weights[k] * phi(e->atoms(0, k));
        }
        return acc;
    }
    if (const auto* g = std::get_if<GridDensity>(&mu)) {
        // phi * (linear interpolant of u) is quadratic between merged breakpoints,
        // so Simpson's rule is exact there.
        std::vector<double> pts;
        for (std::size_t i = 0; i < g->n_pts(); ++i) {
            pts.push_back(g->node(i));
        }
        for (double k : phi.knots) {
            if (k > g->lo && k < g->hi) {
                pts.push_back(k);
            }
        }
        std::sort(pts.begin(), pts.end());
        pts.erase(std::unique(pts.begin(), pts.end()), pts.end());
        const double dx = g->dx();
        auto density = [g, dx](double x) {
            const auto i = std::min(static_cast<std::size_t>(std::max(0.0, (x - g->lo) / dx)),
                                    g->n_pts() - 2);
            const double t = (x - g->node(i)) / dx;
            return (1.0 - t) * g->values[static_cast<Eigen::Index>(i)] +
                   t * g->values[static_cast<Eigen::Index>(i + 1)];
        };
        double acc = 0.0;
        for (std::size_t k = 0; k + 1 < pts.size(); ++k) {
            const double x0 = pts[k];
            const double x1 = pts[k + 1];
            const double xm = 0.5 * (x0 + x1);
            // Evaluate the density just inside the segment so cell lookups are unambiguous.
            const double eps = 1e-12 * (x1 - x0);
            const double f0 = phi(x0) * density(x0 + eps);
            const double fm = phi(xm) * density(xm);
            const double f1 = phi(x1) * density(x1 - eps);
            acc += (x1 - x0) / 6.0 * (f0 + 4.0 * fm + f1);
        }
        return acc / total_mass(mu);
    }
    const auto& gauss = std::get<Gaussian>(mu);
    const double sd = std::sqrt(gauss.var);
    const double lo = gauss.mean - kGaussianTail * sd;
    const double hi = gauss.mean + kGaussianTail * sd;
    std::vector<double> pts{lo, gauss.mean, hi};
    for (double k : phi.knots) {
        if (k > lo && k < hi) {
            pts.push_back(k);
        }
    }
    std::sort(pts.begin(), pts.end());
    pts.erase(std::unique(pts.begin(), pts.end()), pts.end());
    const double norm = 1.0 / (sd * std::sqrt(2.0 * std::numbers::pi));
    auto integrand = [&](double x) {
        const double z = (x - gauss.mean) / sd;
        return phi(x) * norm * std::exp(-0.5 * z * z);
    };
    double acc = 0.0;
    for (std::size_t k = 0; k + 1 < pts.size(); ++k) {
        acc += boost::math::quadrature::gauss_kronrod<double, 15>::integrate(integrand, pts[k],
                                                                             pts[k + 1], 20, 1e-13);
    }
    return acc;
}

double w1_dual_lower_bound(const Measure1D& a, const Measure1D& b,
                           const std::vector<PiecewiseLinear>& test_fns) {
    double best = 0.0;
    for (const auto& phi : test_fns) {
        if (!phi.is_lipschitz()) {
            throw std::invalid_argument("dual test function is not 1-Lipschitz");
        }
        best = std::max(best, std::abs(integrate(phi, a) - integrate(phi, b)));
    }
    return best;
}

ShiftBound w1_shift_property(const Measure1D& a, const Measure1D& b, const Vector& w1_vec,
                             const Vector& w2_vec) {
    return ShiftBound{w1(shift(a, w1_vec), shift(b, w2_vec)), w1(a, b) + (w2_vec - w1_vec).norm()};
}

double spectral_norm(const Matrix& m) {
    if (m.size() == 0) {
        return 0.0;
    }
    Eigen::JacobiSVD<Matrix> svd(m);
    return svd.singularValues()(0);
}

DobrushinConstants dobrushin_constants(const ModelParams& p) {
    const Matrix m_eff = effective_mass(p);
    Eigen::FullPivLU<Matrix> lu(m_eff);
    if (!lu.isInvertible()) {
        throw std::invalid_argument("dobrushin_constants: effective mass is singular");
    }
    const Matrix m_eff_inv = lu.inverse();
    const double g_norm = spectral_norm(p.G_r);
    DobrushinConstants c;
    c.L = spectral_norm(m_eff_inv) *
              (spectral_norm(p.gamma_r) +
               p.N_real * spectral_norm(p.G_r.transpose() * p.gamma_q * p.G_r)) +
          1.0;
    c.C1 = spectral_norm(m_eff_inv * p.N_real * p.G_r.transpose() * p.gamma_q) *
           (g_norm + static_cast<double>(p.n_q()));
    c.C2 = 2.0 * (1.0 + c.C1 / c.L);
    c.C = c.C2 * (2.0 + g_norm);
    return c;
}

std::vector<DobrushinRow> dobrushin_check(const ModelParams& p, const KineticInit& a,
                                          const KineticInit& b, const std::vector<double>& t_grid,
                                          double tol) {
    if (t_grid.empty()) {
        return {};
    }
    const DobrushinConstants c = dobrushin_constants(p);
    SolverOptions solver;
    solver.tol = tol;
    solver.times = t_grid;
    const double t_end = t_grid.back();
    const KineticTrajectory ta = integrate_moment_ode(p, a.r_in, a.s_in, a.mu_in, t_end, solver);
    const KineticTrajectory tb = integrate_moment_ode(p, b.r_in, b.s_in, b.mu_in, t_end, solver);
    const double initial_gap =
        (a.r_in - b.r_in).norm() + (a.s_in - b.s_in).norm() + w1(a.mu_in, b.mu_in);

    std::vector<DobrushinRow> rows;
    rows.reserve(t_grid.size());
    for (std::size_t k = 0; k < t_grid.size(); ++k) {
        const MacroState& ma = ta.macro[k];
        const MacroState& mb = tb.macro[k];
        const Measure1D mu_a = pushforward(p, a.mu_in, ma.r, a.r_in);
        const Measure1D mu_b = pushforward(p, b.mu_in, mb.r, b.r_in);
        DobrushinRow row;
        row.t = t_grid[k];
        row.lhs = (ma.r - mb.r).norm() + (ma.s - mb.s).norm() + w1(mu_a, mu_b);
        row.rhs = c.C * std::exp(c.L * row.t) * initial_gap;
        row.satisfied = row.lhs <= row.rhs;
        rows.push_back(row);
    }
    return rows;
}

}  // namespace pks

#include "pks/core_model.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

namespace pks {

namespace {

void require(bool condition, const std::string& message) {
    if (!condition) {
        throw std::invalid_argument(message);
    }
}

void require_square(const Matrix& m, Eigen::Index n, const char* name) {
    require(m.rows() == n && m.cols() == n,
            std::string(name) + " must be " + std::to_string(n) + "x" + std::to_string(n));
}

bool is_spd(const Matrix& m) {
    const double scale = std::max(1.0, m.cwiseAbs().maxCoeff());
    if ((m - m.transpose()).cwiseAbs().maxCoeff() > 1e-12 * scale) {
        return false;
    }
    Eigen::LLT<Matrix> llt(m);
    return llt.info() == Eigen::Success;
}

bool all_finite(const Matrix& m) { return m.allFinite(); }

// Trapezoid weights dx * (1/2, 1, ..., 1, 1/2).
double trapezoid_weight(const GridDensity& g, std::size_t i) {
    const double w = g.dx();
    return (i == 0 || i + 1 == g.n_pts()) ? 0.5 * w : w;
}

double interpolate(const GridDensity& g, double x) {
    if (x < g.lo || x > g.hi) {
        return 0.0;
    }
    const double pos = (x - g.lo) / g.dx();
    auto i = static_cast<std::size_t>(std::floor(pos));
    if (i + 1 >= g.n_pts()) {
        return g.values[static_cast<Eigen::Index>(g.n_pts() - 1)];
    }
    const double frac = pos - static_cast<double>(i);
    const auto k = static_cast<Eigen::Index>(i);
    return (1.0 - frac) * g.values[k] + frac * g.values[k + 1];
}

}  // namespace

void ModelParams::validate() const {
    const Eigen::Index nr = n_r();
    const Eigen::Index nq = n_q();
    require(nr >= 1, "n_r must be positive");
    require(nq >= 1, "n_q must be positive");
    require_square(M_r, nr, "M_r");
    require_square(gamma_r, nr, "gamma_r");
    require_square(M_q, nq, "M_q");
    require_square(gamma_q, nq, "gamma_q");
    require(G_r.rows() == nq && G_r.cols() == nr, "G_r must be n_q x n_r");
    require(all_finite(M_r) && all_finite(M_q) && all_finite(gamma_r) && all_finite(gamma_q) &&
                all_finite(G_r),
            "model matrices must be finite");
    require(is_spd(M_r), "M_r must be symmetric positive definite");
    require(is_spd(M_q), "M_q must be symmetric positive definite");
    require(std::isfinite(N_real) && N_real >= 0.0, "N_real must be a finite non-negative number");
    require(N >= 1, "N must be at least 1");
    const Matrix m_eff = effective_mass(*this);
    Eigen::FullPivLU<Matrix> lu(m_eff);
    require(lu.isInvertible(), "effective mass is singular");
}

ModelParams scalar_params(double M_r, double M_q, double gamma_r, double gamma_q, double G_r,
                          double N_real, std::size_t N) {
    ModelParams p;
    p.M_r = Matrix::Constant(1, 1, M_r);
    p.M_q = Matrix::Constant(1, 1, M_q);
    p.gamma_r = Matrix::Constant(1, 1, gamma_r);
    p.gamma_q = Matrix::Constant(1, 1, gamma_q);
    p.G_r = Matrix::Constant(1, 1, G_r);
    p.N_real = N_real;
    p.N = N;
    return p;
}

ModelParams reference_params() {
    constexpr double n_real = 250.0;
    return scalar_params(20.0, 10.0 / n_real, 1.0, 1.0 / n_real, -1.0, n_real, 250);
}

EmpiricalMeasure EmpiricalMeasure::uniform(Matrix atoms) {
    EmpiricalMeasure m;
    const auto k = atoms.cols();
    if (k == 0) {
        throw std::invalid_argument("empirical measure needs at least one atom");
    }
    m.weights = Vector::Constant(k, 1.0 / static_cast<double>(k));
    m.atoms = std::move(atoms);
    return m;
}

EmpiricalMeasure EmpiricalMeasure::dirac(double x) {
    return uniform(Matrix::Constant(1, 1, x));
}

void EmpiricalMeasure::validate() const {
    require(atoms.cols() >= 1, "empirical measure needs at least one atom");
    require(weights.size() == atoms.cols(), "one weight per atom required");
    require(atoms.allFinite(), "empirical atoms must be finite");
    require((weights.array() >= 0.0).all(), "empirical weights must be non-negative");
    require(std::abs(weights.sum() - 1.0) <= 1e-12, "empirical weights must sum to 1");
}

GridDensity GridDensity::from_gaussian(double mean, double var, double lo, double hi,
                                       std::size_t n_pts) {
    require(var > 0.0, "Gaussian variance must be positive");
    GridDensity g;
    g.lo = lo;
    g.hi = hi;
    g.values.resize(static_cast<Eigen::Index>(n_pts));
    require(n_pts >= 2 && hi > lo, "grid needs lo < hi and at least two points");
    const double norm = 1.0 / std::sqrt(2.0 * std::numbers::pi * var);
    for (std::size_t i = 0; i < n_pts; ++i) {
        const double d = g.node(i) - mean;
        g.values[static_cast<Eigen::Index>(i)] = norm * std::exp(-0.5 * d * d / var);
    }
    return g;
}

void GridDensity::validate() const {
    require(std::isfinite(lo) && std::isfinite(hi) && lo < hi, "grid bounds must satisfy lo < hi");
    require(values.size() >= 2, "grid needs at least two points");
    require(values.allFinite(), "grid values must be finite");
}

void validate(const Measure1D& mu) {
    std::visit(
        [](const auto& m) {
            using T = std::decay_t<decltype(m)>;
            if constexpr (std::is_same_v<T, Gaussian>) {
                require(std::isfinite(m.mean), "Gaussian mean must be finite");
                require(std::isfinite(m.var) && m.var > 0.0, "Gaussian variance must be positive");
            } else {
                m.validate();
            }
        },
        mu);
}

Eigen::Index dimension(const Measure1D& mu) {
    if (const auto* e = std::get_if<EmpiricalMeasure>(&mu)) {
        return e->atoms.rows();
    }
    return 1;
}

double total_mass(const Measure1D& mu) {
    if (const auto* g = std::get_if<GridDensity>(&mu)) {
        double mass = 0.0;
        for (std::size_t i = 0; i < g->n_pts(); ++i) {
            mass += trapezoid_weight(*g, i) * g->values[static_cast<Eigen::Index>(i)];
        }
        return mass;
    }
    return 1.0;
}

Vector first_moment(const Measure1D& mu) {
    validate(mu);
    return std::visit(
        [](const auto& m) -> Vector {
            using T = std::decay_t<decltype(m)>;
            if constexpr (std::is_same_v<T, EmpiricalMeasure>) {
                return m.atoms * m.weights;
            } else if constexpr (std::is_same_v<T, GridDensity>) {
                double acc = 0.0;
                for (std::size_t i = 0; i < m.n_pts(); ++i) {
                    acc += trapezoid_weight(m, i) * m.node(i) * m.values[static_cast<Eigen::Index>(i)];
                }
                return Vector::Constant(1, acc);
            } else {
                return Vector::Constant(1, m.mean);
            }
        },
        mu);
}

Matrix second_moment(const Measure1D& mu) {
    validate(mu);
    return std::visit(
        [](const auto& m) -> Matrix {
            using T = std::decay_t<decltype(m)>;
            if constexpr (std::is_same_v<T, EmpiricalMeasure>) {
                return m.atoms * m.weights.asDiagonal() * m.atoms.transpose();
            } else if constexpr (std::is_same_v<T, GridDensity>) {
                double acc = 0.0;
                for (std::size_t i = 0; i < m.n_pts(); ++i) {
                    const double y = m.node(i);
                    acc += trapezoid_weight(m, i) * y * y * m.values[static_cast<Eigen::Index>(i)];
                }
                return Matrix::Constant(1, 1, acc);
            } else {
                return Matrix::Constant(1, 1, m.var + m.mean * m.mean);
            }
        },
        mu);
}

Measure1D shift(const Measure1D& mu, const Vector& w) {
    require(w.size() == dimension(mu), "shift dimension mismatch");
    return std::visit(
        [&w](const auto& m) -> Measure1D {
            using T = std::decay_t<decltype(m)>;
            if constexpr (std::is_same_v<T, EmpiricalMeasure>) {
                EmpiricalMeasure out = m;
                out.atoms.colwise() += w;
                return out;
            } else if constexpr (std::is_same_v<T, GridDensity>) {
                GridDensity out = m;
                for (std::size_t i = 0; i < m.n_pts(); ++i) {
                    out.values[static_cast<Eigen::Index>(i)] = interpolate(m, m.node(i) - w[0]);
                }
                return out;
            } else {
                return Gaussian{m.mean + w[0], m.var};
            }
        },
        mu);
}

Vector shifted_first_moment(const Measure1D& mu, const Vector& w) {
    return first_moment(mu) + total_mass(mu) * w;
}

ModelParams scale_particles(const ModelParams& base, std::size_t N) {
    if (N == 0) {
        throw std::invalid_argument("scale_particles: N must be at least 1");
    }
    ModelParams out = base;
    out.N = N;
    return out;
}

Matrix effective_mass(const ModelParams& p) {
    return p.M_r + p.N_real * p.G_r.transpose() * p.M_q * p.G_r;
}

Matrix effective_stiffness(const ModelParams& p) {
    return p.gamma_r + p.N_real * p.G_r.transpose() * p.gamma_q * p.G_r;
}

Vector equilibrium(const ModelParams& p, const Vector& r_in, const Measure1D& mu_in) {
    const Vector m1 = first_moment(mu_in);
    require(m1.allFinite(), "equilibrium: initial measure has no finite first moment");
    require(r_in.size() == p.n_r() && m1.size() == p.n_q(), "equilibrium: dimension mismatch");
    const Matrix gamma_eff = effective_stiffness(p);
    Eigen::FullPivLU<Matrix> lu(gamma_eff);
    require(lu.isInvertible(), "equilibrium: effective stiffness is singular");
    const Vector rhs = p.N_real * p.G_r.transpose() * p.gamma_q * (p.G_r * r_in + m1);
    return lu.solve(rhs);
}

Vector mean_field_force(const ModelParams& p, const Measure1D& mu) {
    const Vector m1 = first_moment(mu);
    require(m1.allFinite(), "mean_field_force: non-finite first moment");
    require(m1.size() == p.n_q(), "mean_field_force: dimension mismatch");
    return p.N_real * p.G_r.transpose() * p.gamma_q * m1;
}

}  // namespace pks

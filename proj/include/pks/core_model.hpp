#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <variant>

namespace pks {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

/// Physical constants of a macroscopic oscillator coupled to N particles through
/// the linear constraints Q_j + G_r r = q_j^in + G_r r^in.
///
/// M_q and gamma_q are the single-particle values of the realistic system
/// (N_real particles). When fewer or more particles N are simulated, each one
/// carries (N_real / N) of that mass and stiffness; see particle_mass().
struct ModelParams {
    Matrix M_r;      // n_r x n_r
    Matrix M_q;      // n_q x n_q
    Matrix gamma_r;  // n_r x n_r
    Matrix gamma_q;  // n_q x n_q
    Matrix G_r;      // n_q x n_r
    double N_real = 0.0;
    std::size_t N = 1;

    [[nodiscard]] Eigen::Index n_r() const { return M_r.rows(); }
    [[nodiscard]] Eigen::Index n_q() const { return M_q.rows(); }

    /// N_real / N, the factor applied to every per-particle sum.
    [[nodiscard]] double particle_scale() const { return N_real / static_cast<double>(N); }
    [[nodiscard]] Matrix particle_mass() const { return particle_scale() * M_q; }
    [[nodiscard]] Matrix particle_stiffness() const { return particle_scale() * gamma_q; }

    /// Throws std::invalid_argument on shape mismatch, non-SPD masses,
    /// N == 0, negative N_real or a singular effective mass.
    void validate() const;
};

/// Scalar (n_r = n_q = 1) parameter set.
ModelParams scalar_params(double M_r, double M_q, double gamma_r, double gamma_q, double G_r,
                          double N_real, std::size_t N);

/// The benchmark parameters: M_r = 20, M_q = 10/N_real, gamma_r = 1,
/// gamma_q = 1/N_real, G_r = -1, N_real = N = 250.
ModelParams reference_params();

struct MacroState {
    Vector r;
    Vector s;
};

/// N particle extensions stored column-wise (n_q x N).
struct ParticleEnsemble {
    Matrix Q;

    [[nodiscard]] std::size_t size() const { return static_cast<std::size_t>(Q.cols()); }
};

struct EmpiricalMeasure {
    Matrix atoms;   // n_q x K
    Vector weights; // K, sums to one

    /// Uniform weights 1/K.
    static EmpiricalMeasure uniform(Matrix atoms);
    static EmpiricalMeasure dirac(double x);

    void validate() const;
};

/// Density samples u(y_i) on the equidistant grid y_i = lo + i * dx. Between nodes
/// the density is the linear interpolant; outside [lo, hi] it is zero.
struct GridDensity {
    double lo = 0.0;
    double hi = 1.0;
    Vector values;

    [[nodiscard]] std::size_t n_pts() const { return static_cast<std::size_t>(values.size()); }
    [[nodiscard]] double dx() const { return (hi - lo) / static_cast<double>(n_pts() - 1); }
    [[nodiscard]] double node(std::size_t i) const { return lo + static_cast<double>(i) * dx(); }

    /// Pointwise pdf samples of N(mean, var); no renormalization.
    static GridDensity from_gaussian(double mean, double var, double lo, double hi,
                                     std::size_t n_pts);

    void validate() const;
};

struct Gaussian {
    double mean = 0.0;
    double var = 1.0;
};

using Measure1D = std::variant<EmpiricalMeasure, GridDensity, Gaussian>;

void validate(const Measure1D& mu);

/// Dimension of the space the measure lives on (1 for grid and Gaussian).
[[nodiscard]] Eigen::Index dimension(const Measure1D& mu);

/// Total mass. Exactly 1 for empirical and Gaussian measures; the trapezoid sum
/// for a GridDensity.
[[nodiscard]] double total_mass(const Measure1D& mu);

/// \int q dmu. Weighted atom mean, trapezoid rule on the grid, or the Gaussian mean.
[[nodiscard]] Vector first_moment(const Measure1D& mu);

/// \int q q^T dmu under the same quadrature conventions as first_moment.
[[nodiscard]] Matrix second_moment(const Measure1D& mu);

/// Image of mu under q -> q + w. GridDensity values are resampled onto the fixed
/// grid by linear interpolation with zero fill.
[[nodiscard]] Measure1D shift(const Measure1D& mu, const Vector& w);

/// First moment of shift(mu, w) computed without resampling: m1 + mass * w.
[[nodiscard]] Vector shifted_first_moment(const Measure1D& mu, const Vector& w);

[[nodiscard]] ModelParams scale_particles(const ModelParams& base, std::size_t N);

/// M_r + N_real G_r^T M_q G_r
[[nodiscard]] Matrix effective_mass(const ModelParams& p);

/// gamma_r + N_real G_r^T gamma_q G_r
[[nodiscard]] Matrix effective_stiffness(const ModelParams& p);

/// Rest point gamma_eff^{-1} N_real G_r^T gamma_q (G_r r_in + \int q dmu_in).
[[nodiscard]] Vector equilibrium(const ModelParams& p, const Vector& r_in, const Measure1D& mu_in);

/// N_real G_r^T gamma_q \int q dmu
[[nodiscard]] Vector mean_field_force(const ModelParams& p, const Measure1D& mu);

}  // namespace pks

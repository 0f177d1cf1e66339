#pragma once

#include "pks/core_model.hpp"
#include "pks/microsim.hpp"

#include <vector>

namespace pks {

/// Monge-Kantorovich distance with exponent 1 between 1-D probability measures.
/// Equal-size uniform empirical pairs use the sorted-atom formula; everything else
/// Gaussian pairs and empirical-Gaussian pairs use closed forms, everything else goes through the CDF integral. Grid densities are normalised to unit mass.
/// Throws Unsupported for n_q > 1.
[[nodiscard]] double w1(const Measure1D& a, const Measure1D& b);

/// mean_k |a_(k) - b_(k)| over sorted atoms; both measures uniform with equal counts.
[[nodiscard]] double w1_sorted(const EmpiricalMeasure& a, const EmpiricalMeasure& b);

/// Closed form for two Gaussians under the quantile coupling.
[[nodiscard]] double w1_gaussian(const Gaussian& a, const Gaussian& b);

/// Exact CDF integral between an empirical measure and a Gaussian.
[[nodiscard]] double w1_empirical_gaussian(const EmpiricalMeasure& a, const Gaussian& g);

/// \int |F_a(x) - F_b(x)| dx. Exact on segments where both CDFs are piecewise
/// polynomial (empirical, grid); adaptive Gauss-Kronrod where a Gaussian is involved.
[[nodiscard]] double w1_cdf(const Measure1D& a, const Measure1D& b);

/// Piecewise-linear test function through (knots[i], values[i]), extended linearly
/// with the end slopes.
struct PiecewiseLinear {
    std::vector<double> knots;
    std::vector<double> values;

    [[nodiscard]] double operator()(double x) const;
    [[nodiscard]] bool is_lipschitz(double constant = 1.0, double slack = 1e-12) const;
};

/// \int phi dmu (grid densities normalised to unit mass).
[[nodiscard]] double integrate(const PiecewiseLinear& phi, const Measure1D& mu);

/// max over test functions of |\int phi da - \int phi db|; 0 for an empty family.
/// Throws std::invalid_argument if a test function is not 1-Lipschitz.
[[nodiscard]] double w1_dual_lower_bound(const Measure1D& a, const Measure1D& b,
                                         const std::vector<PiecewiseLinear>& test_fns);

struct ShiftBound {
    double lhs;  // W1(T_{w1} a, T_{w2} b)
    double rhs;  // W1(a, b) + |w2 - w1|
};

[[nodiscard]] ShiftBound w1_shift_property(const Measure1D& a, const Measure1D& b,
                                           const Vector& w1_vec, const Vector& w2_vec);

struct DobrushinConstants {
    double L = 0.0;
    double C = 0.0;
    double C1 = 0.0;
    double C2 = 0.0;
};

/// Constants of the stability estimate, with spectral operator norms:
///   L  = |m_eff^{-1}| (|gamma_r| + N_real |G_r^T gamma_q G_r|) + 1
///   C1 = |m_eff^{-1} N_real G_r^T gamma_q| (|G_r| + n_q)
///   C2 = 2 (1 + C1 / L),  C = C2 (2 + |G_r|)
[[nodiscard]] DobrushinConstants dobrushin_constants(const ModelParams& p);

/// Initial data (r_in, s_in, mu_in) of the partially kinetic system.
struct KineticInit {
    Vector r_in;
    Vector s_in;
    Measure1D mu_in;
};

struct DobrushinRow {
    double t;
    double lhs;
    double rhs;
    bool satisfied;

    [[nodiscard]] double margin() const { return rhs - lhs; }
};

/// Integrates both initial data with the moment ODE and compares
///   |r1 - r2| + |s1 - s2| + W1(mu1(t), mu2(t))
/// against C e^{Lt} (|dr_in| + |ds_in| + W1(mu1_in, mu2_in)) at every time of t_grid.
[[nodiscard]] std::vector<DobrushinRow> dobrushin_check(const ModelParams& p, const KineticInit& a,
                                                        const KineticInit& b,
                                                        const std::vector<double>& t_grid,
                                                        double tol = 1e-8);

[[nodiscard]] double spectral_norm(const Matrix& m);

}  // namespace pks

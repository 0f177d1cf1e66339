#pragma once

// Data-parallel inner loops. Each OpenMP kernel has a *_serial twin kept as the
// reference implementation for tests and benchmarks. All parallel kernels are
// bit-identical for any thread count: elementwise loops write disjoint entries
// and reductions combine fixed-size blocks in a fixed order.

#include <Eigen/Dense>

#include <cstddef>
#include <span>

namespace pks::kernels {

/// Column block size used by the deterministic reductions.
inline constexpr Eigen::Index kReductionBlock = 512;

/// Semi-discrete upwind derivative of u_t + v u_q = 0 with zero ghost values:
/// du_i = -v (u_i - u_{i-1}) / dx for v >= 0, -v (u_{i+1} - u_i) / dx otherwise.
void upwind_serial(std::span<const double> u, double v, double dx, std::span<double> du);
void upwind(std::span<const double> u, double v, double dx, std::span<double> du);

/// Sum of the columns of Q (n_q x N).
[[nodiscard]] Eigen::VectorXd column_sum_serial(const Eigen::Ref<const Eigen::MatrixXd>& Q);
[[nodiscard]] Eigen::VectorXd column_sum(const Eigen::Ref<const Eigen::MatrixXd>& Q);

/// Writes the same velocity into every column of dQ.
void broadcast_velocity_serial(const Eigen::Ref<const Eigen::VectorXd>& v,
                               Eigen::Ref<Eigen::MatrixXd> dQ);
void broadcast_velocity(const Eigen::Ref<const Eigen::VectorXd>& v, Eigen::Ref<Eigen::MatrixXd> dQ);

/// max_j || Q_j - Q0_j - offset ||_2, the index-3 constraint residual when
/// offset = -G_r (r - r_in).
[[nodiscard]] double max_offset_deviation_serial(const Eigen::Ref<const Eigen::MatrixXd>& Q,
                                                 const Eigen::Ref<const Eigen::MatrixXd>& Q0,
                                                 const Eigen::Ref<const Eigen::VectorXd>& offset);
[[nodiscard]] double max_offset_deviation(const Eigen::Ref<const Eigen::MatrixXd>& Q,
                                          const Eigen::Ref<const Eigen::MatrixXd>& Q0,
                                          const Eigen::Ref<const Eigen::VectorXd>& offset);

}  // namespace pks::kernels

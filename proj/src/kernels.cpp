#include "pks/kernels.hpp"

#include <algorithm>
#include <cassert>
#include <vector>

namespace pks::kernels {

namespace {

inline double upwind_at(std::span<const double> u, std::ptrdiff_t i, double v, double inv_dx) {
    const auto n = static_cast<std::ptrdiff_t>(u.size());
    const double ui = u[static_cast<std::size_t>(i)];
    if (v >= 0.0) {
        const double left = i > 0 ? u[static_cast<std::size_t>(i - 1)] : 0.0;
        return -v * (ui - left) * inv_dx;
    }
    const double right = i + 1 < n ? u[static_cast<std::size_t>(i + 1)] : 0.0;
    return -v * (right - ui) * inv_dx;
}

}  // namespace

void upwind_serial(std::span<const double> u, double v, double dx, std::span<double> du) {
    assert(u.size() == du.size());
    const double inv_dx = 1.0 / dx;
    const auto n = static_cast<std::ptrdiff_t>(u.size());
    for (std::ptrdiff_t i = 0; i < n; ++i) {
        du[static_cast<std::size_t>(i)] = upwind_at(u, i, v, inv_dx);
    }
}

void upwind(std::span<const double> u, double v, double dx, std::span<double> du) {
    assert(u.size() == du.size());
    const double inv_dx = 1.0 / dx;
    const auto n = static_cast<std::ptrdiff_t>(u.size());
#pragma omp parallel for schedule(static) if (n > 4096)
    for (std::ptrdiff_t i = 0; i < n; ++i) {
        du[static_cast<std::size_t>(i)] = upwind_at(u, i, v, inv_dx);
    }
}

Eigen::VectorXd column_sum_serial(const Eigen::Ref<const Eigen::MatrixXd>& Q) {
    Eigen::VectorXd acc = Eigen::VectorXd::Zero(Q.rows());
    for (Eigen::Index begin = 0; begin < Q.cols(); begin += kReductionBlock) {
        Eigen::VectorXd block = Eigen::VectorXd::Zero(Q.rows());
        const Eigen::Index end = std::min(Q.cols(), begin + kReductionBlock);
        for (Eigen::Index j = begin; j < end; ++j) {
            block += Q.col(j);
        }
        acc += block;
    }
    return acc;
}

Eigen::VectorXd column_sum(const Eigen::Ref<const Eigen::MatrixXd>& Q) {
    const Eigen::Index cols = Q.cols();
    const Eigen::Index blocks = (cols + kReductionBlock - 1) / kReductionBlock;
    if (blocks <= 1) {
        return column_sum_serial(Q);
    }
    Eigen::MatrixXd partial = Eigen::MatrixXd::Zero(Q.rows(), blocks);
#pragma omp parallel for schedule(static) if (cols > 16 * kReductionBlock)
    for (Eigen::Index b = 0; b < blocks; ++b) {
        const Eigen::Index begin = b * kReductionBlock;
        const Eigen::Index end = std::min(cols, begin + kReductionBlock);
        for (Eigen::Index j = begin; j < end; ++j) {
            partial.col(b) += Q.col(j);
        }
    }
    Eigen::VectorXd acc = Eigen::VectorXd::Zero(Q.rows());
    for (Eigen::Index b = 0; b < blocks; ++b) {
        acc += partial.col(b);
    }
    return acc;
}

void broadcast_velocity_serial(const Eigen::Ref<const Eigen::VectorXd>& v,
                               Eigen::Ref<Eigen::MatrixXd> dQ) {
    for (Eigen::Index j = 0; j < dQ.cols(); ++j) {
        dQ.col(j) = v;
    }
}

void broadcast_velocity(const Eigen::Ref<const Eigen::VectorXd>& v, Eigen::Ref<Eigen::MatrixXd> dQ) {
    const Eigen::Index cols = dQ.cols();
#pragma omp parallel for schedule(static) if (cols > 16 * kReductionBlock)
    for (Eigen::Index j = 0; j < cols; ++j) {
        dQ.col(j) = v;
    }
}

double max_offset_deviation_serial(const Eigen::Ref<const Eigen::MatrixXd>& Q,
                                   const Eigen::Ref<const Eigen::MatrixXd>& Q0,
                                   const Eigen::Ref<const Eigen::VectorXd>& offset) {
    double worst = 0.0;
    for (Eigen::Index j = 0; j < Q.cols(); ++j) {
        worst = std::max(worst, (Q.col(j) - Q0.col(j) - offset).norm());
    }
    return worst;
}

double max_offset_deviation(const Eigen::Ref<const Eigen::MatrixXd>& Q,
                            const Eigen::Ref<const Eigen::MatrixXd>& Q0,
                            const Eigen::Ref<const Eigen::VectorXd>& offset) {
    const Eigen::Index cols = Q.cols();
    double worst = 0.0;
#pragma omp parallel for schedule(static) reduction(max : worst) if (cols > 16 * kReductionBlock)
    for (Eigen::Index j = 0; j < cols; ++j) {
        worst = std::max(worst, (Q.col(j) - Q0.col(j) - offset).norm());
    }
    return worst;
}

}  // namespace pks::kernels

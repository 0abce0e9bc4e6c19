#pragma once

#include <functional>
#include <vector>

#include "splitlqr/split_iteration.hpp"

namespace splitlqr {

/// Linearization of one full sweep at the optimal feedback, for discrete-time
/// problems. Jacobians act on column-major vectorized feedback perturbations.
struct RateReport {
    std::vector<Matrix> subsystem_jacobians; ///< indexed by subsystem
    Matrix cycle_jacobian;
    double spectral_radius = 0.0;
    double operator_norm = 0.0; ///< 2-norm of the cycle Jacobian
    std::vector<int> order;
};

/// The r-by-r matrix K of the subsystem-i update linearization at the
/// optimum, acting on feedback perturbations as D -> K D:
///   K = -Pi_i (R_i + B_i' P B_i)^{-1} B_i' P B (I - Pi_i Pi_i').
/// Discrete time only; the continuous-time linearization vanishes.
Matrix subsystem_rate_gain(const LqrProblem& problem,
                           const BlockPartition& partition,
                           const ValueMatrix& p_opt, Eigen::Index i,
                           const Tolerances& tol = {});

/// Materialization of the subsystem-i linearization on vec(D): the
/// (r*m)-by-(r*m) matrix I_m (x) K.
Matrix rate_matrix_subsystem(const LqrProblem& problem,
                             const BlockPartition& partition,
                             const ValueMatrix& p_opt, Eigen::Index i,
                             const Tolerances& tol = {});

/// Product of the per-subsystem linearizations in reverse application order,
/// with its spectral radius and operator norm. Empty order means ascending.
RateReport rate_matrix_cycle(const LqrProblem& problem,
                             const BlockPartition& partition,
                             const ValueMatrix& p_opt,
                             const std::vector<int>& order = {},
                             const Tolerances& tol = {});

/// Distributed actuation block form of the subsystem-i linearization: with B
/// block diagonal (and a matching state partition to slice P), block (i, j)
/// of the nonzero block row is
///   (R_ii + B_ii' P_ii B_ii)^{-1} B_ii' P_ij B_jj     for j != i,
/// and the zero matrix for j == i.
Matrix distributed_block(const LqrProblem& problem,
                         const BlockPartition& input_partition,
                         const BlockPartition& state_partition,
                         const ValueMatrix& p_opt, Eigen::Index i,
                         Eigen::Index j);

/// Central-difference Jacobian of a matrix map at a point, with one column
/// per (column-major) coordinate of the argument.
Matrix finite_difference_jacobian(
    const std::function<Matrix(const Matrix&)>& map, const Matrix& at,
    double step);

/// Step size h = 1e-5 * (1 + |at|_F) balancing truncation against the
/// Riccati solver noise underneath the map.
double default_fd_step(const Matrix& at);

/// Residuals of the two block-projection identities behind the discrete-time
/// fixed-point argument, plus the gap of the aggregate mixing matrix from
/// (R+S)^{-1}. All three sit at machine-precision scale whenever R is block
/// diagonal SPD and S is SPD.
struct TechIdentityResiduals {
    double quadratic_identity = 0.0;
    double decomposition_identity = 0.0;
    double aggregate_gap = 0.0;
};

TechIdentityResiduals verify_tech_identities(const Matrix& r, const Matrix& s,
                                             const BlockPartition& partition,
                                             Eigen::Index i);

/// Least-squares fit of log e_{k+1} = p log e_k + log c over consecutive
/// error pairs inside the fitting window.
struct OrderFit {
    double order = 0.0; ///< p
    double rate = 0.0;  ///< c
    int pairs = 0;      ///< number of qualifying pairs used
};

OrderFit empirical_order(const std::vector<double>& sweep_errors,
                         double window_lo = 1e-10, double window_hi = 1e-2);

OrderFit empirical_order(const IterationTrace& trace, const Matrix& f_opt,
                         double window_lo = 1e-10, double window_hi = 1e-2);

/// Feedback error after each full sweep: |F^{kn} - F_opt|_F, starting with
/// the initial feedback.
std::vector<double> sweep_errors(const IterationTrace& trace,
                                 const Matrix& f_opt);

} // namespace splitlqr

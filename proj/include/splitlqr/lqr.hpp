#pragma once

#include <optional>

#include <Eigen/Dense>

#include "splitlqr/errors.hpp"

namespace splitlqr {

using Matrix = Eigen::MatrixXd;

/// Whether a problem evolves in continuous time (dx/dt = Ax + Bu) or in
/// discrete time (x[k+1] = Ax[k] + Bu[k]).
enum class TimeDomain { Continuous, Discrete };

/// Numerical tolerances shared by the solvers and predicates. Defaults sit
/// one to two orders of magnitude above double-precision noise at the dense
/// desk scale this library targets; every value can be overridden.
struct Tolerances {
    double riccati = 1e-10;   ///< relative Riccati residual target
    double symmetry = 1e-12;  ///< relative asymmetry allowed in a value matrix
    double stability = 1e-9;  ///< strict margin for the stability predicates
    double rank = 0.0;        ///< controllability rank threshold; 0 picks m*eps
    double psd = 1e-8;        ///< slack for comparisons in the PSD order
    int max_newton = 60;      ///< Newton step cap per Riccati solve
    int max_bootstrap = 50000;///< value-iteration cap for the stabilizing bootstrap
};

/// A linear state-feedback gain u = Fx, stored as an inputs-by-states matrix.
class Feedback {
public:
    explicit Feedback(Matrix gain);

    static Feedback zero(Eigen::Index inputs, Eigen::Index states);

    const Matrix& gain() const { return gain_; }
    Eigen::Index inputs() const { return gain_.rows(); }
    Eigen::Index states() const { return gain_.cols(); }

private:
    Matrix gain_;
};

/// Symmetric matrix P of a quadratic value function V(x) = x'Px. The stored
/// matrix is symmetrized on construction; inputs whose asymmetry exceeds the
/// given relative tolerance are rejected.
class ValueMatrix {
public:
    explicit ValueMatrix(Matrix p, double tol_sym = Tolerances{}.symmetry);

    const Matrix& matrix() const { return p_; }
    Eigen::Index dim() const { return p_.rows(); }

    /// Smallest eigenvalue; positive for the output of a Riccati solve on a
    /// controllable problem.
    double min_eigenvalue() const;

private:
    Matrix p_;
};

/// An infinite-horizon LQR problem: minimise the accumulated quadratic cost
/// x'Qx + u'Ru subject to the linear dynamics given by (A, B) in the stated
/// time domain. Q and R must be symmetric positive definite.
class LqrProblem {
public:
    LqrProblem(Matrix a, Matrix b, Matrix q, Matrix r, TimeDomain domain);

    const Matrix& A() const { return a_; }
    const Matrix& B() const { return b_; }
    const Matrix& Q() const { return q_; }
    const Matrix& R() const { return r_; }
    TimeDomain domain() const { return domain_; }

    Eigen::Index state_dim() const { return a_.rows(); }
    Eigen::Index input_dim() const { return b_.cols(); }

    /// Closed-loop system matrix A + BF.
    Matrix closed_loop(const Feedback& f) const;

private:
    Matrix a_, b_, q_, r_;
    TimeDomain domain_;
};

// --- Riccati solvers -------------------------------------------------------

/// Solves A'P + PA - PBR^{-1}B'P + Q = 0 for its unique stabilizing SPD
/// solution by Newton iteration on the feedback gain, each step a dense
/// Lyapunov solve. A stabilizing warm start (when supplied) seeds the
/// iteration directly; otherwise a stabilizing gain is bootstrapped first.
ValueMatrix solve_care(const LqrProblem& problem,
                       const std::optional<Feedback>& warm_start = {},
                       const Tolerances& tol = {});

/// Discrete-time counterpart: solves P = A'PA - A'PB(R + B'PB)^{-1}B'PA + Q
/// by the analogous Newton iteration on the gain, each step a Stein solve.
ValueMatrix solve_dare(const LqrProblem& problem,
                       const std::optional<Feedback>& warm_start = {},
                       const Tolerances& tol = {});

/// Dispatches to solve_care or solve_dare according to the problem's domain.
ValueMatrix solve_riccati(const LqrProblem& problem,
                          const std::optional<Feedback>& warm_start = {},
                          const Tolerances& tol = {});

/// F = -R^{-1}B'P (continuous) or F = -(R + B'PB)^{-1}B'PA (discrete).
Feedback optimal_feedback(const ValueMatrix& p, const LqrProblem& problem);

/// Value matrix of a fixed stabilizing feedback: the solution of the
/// Lyapunov equation (A+BF)'P + P(A+BF) + Q + F'RF = 0 in continuous time,
/// or of the Stein equation P = (A+BF)'P(A+BF) + Q + F'RF in discrete time.
/// Throws NotStabilizing when the closed loop is unstable.
ValueMatrix evaluate_policy(const LqrProblem& problem, const Feedback& f,
                            const Tolerances& tol = {});

/// Strict stability of the closed loop A + BF: all eigenvalue real parts
/// below -tol_stab (continuous) or spectral radius below 1 - tol_stab
/// (discrete). Marginally stable loops are rejected.
bool is_stabilizing(const LqrProblem& problem, const Feedback& f,
                    double tol_stab = Tolerances{}.stability);

/// Kalman rank test: true iff [B, AB, ..., A^{m-1}B] has numerical rank m,
/// counting singular values above tol_rank times the largest one.
/// tol_rank <= 0 selects m times machine epsilon.
bool is_controllable(const Matrix& a, const Matrix& b, double tol_rank = 0.0);

/// Frobenius norm of the algebraic Riccati equation defect of P for the
/// problem's domain; zero exactly when P solves the equation.
double riccati_residual(const ValueMatrix& p, const LqrProblem& problem);

// --- dense matrix-equation kernels -----------------------------------------
// Kronecker-vectorized direct solves; exposed so tests can exercise them on
// their own.

/// Solves M X + X M' = C. Unique solution whenever no two eigenvalues of M
/// sum to zero.
Matrix solve_continuous_lyapunov(const Matrix& m, const Matrix& c);

/// Solves X - M' X M = C. Unique solution whenever the spectral radius of M
/// is below one.
Matrix solve_stein(const Matrix& m, const Matrix& c);

double spectral_abscissa(const Matrix& m); ///< max real part of the spectrum
double spectral_radius(const Matrix& m);   ///< max modulus of the spectrum

/// Smallest eigenvalue of the symmetric part of m.
double min_symmetric_eigenvalue(const Matrix& m);

} // namespace splitlqr

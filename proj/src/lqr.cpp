#include "splitlqr/lqr.hpp"

#include <cmath>
#include <limits>

#include <Eigen/Eigenvalues>
#include <unsupported/Eigen/KroneckerProduct>

namespace splitlqr {

namespace {

void require_finite(const Matrix& m, const char* name) {
    if (!m.allFinite()) {
        throw Error(std::string(name) + " contains NaN or Inf entries");
    }
}

void require_spd(const Matrix& m, const char* name) {
    require_finite(m, name);
    if (m.rows() != m.cols()) {
        throw DimensionMismatch(std::string(name) + " must be square");
    }
    const double scale = 1.0 + m.norm();
    if ((m - m.transpose()).norm() > 1e-10 * scale) {
        throw NotSpd(std::string(name) + " is not symmetric");
    }
    Eigen::SelfAdjointEigenSolver<Matrix> es(0.5 * (m + m.transpose()),
                                             Eigen::EigenvaluesOnly);
    if (es.eigenvalues().minCoeff() <= 0.0) {
        throw NotSpd(std::string(name) + " is not positive definite");
    }
}

Matrix symmetrize(const Matrix& m) { return 0.5 * (m + m.transpose()); }

// Kronecker-vectorized solve of op * vec(X) = vec(C) with a pivot-ratio
// singularity guard and a backward-error sanity check.
Matrix kron_solve(const Matrix& op, const Matrix& c, const char* what) {
    Eigen::PartialPivLU<Matrix> lu(op);
    const Eigen::VectorXd pivots = lu.matrixLU().diagonal().cwiseAbs();
    if (pivots.minCoeff() <= 1e-13 * pivots.maxCoeff()) {
        throw SingularMatrix(std::string(what) +
                             " operator is numerically singular");
    }
    const Eigen::VectorXd rhs = c.reshaped();
    Eigen::VectorXd x = lu.solve(rhs);
    const double backward_scale = op.norm() * x.norm() + c.norm() + 1.0;
    if (!x.allFinite() || (op * x - rhs).norm() > 1e-9 * backward_scale) {
        throw SingularMatrix(std::string(what) +
                             " operator is numerically singular");
    }
    return x.reshaped(c.rows(), c.cols());
}

double controllability_threshold(double tol_rank, Eigen::Index m) {
    if (tol_rank > 0.0) return tol_rank;
    return static_cast<double>(m) * std::numeric_limits<double>::epsilon();
}

// Solves R x = y through Cholesky; SPD by construction of the callers.
Matrix spd_solve(const Matrix& r, const Matrix& rhs) {
    Eigen::LLT<Matrix> llt(symmetrize(r));
    if (llt.info() != Eigen::Success) {
        throw SingularMatrix("cost matrix is numerically singular");
    }
    return llt.solve(rhs);
}

Matrix care_defect(const Matrix& p, const LqrProblem& pb) {
    const Matrix bt_p = pb.B().transpose() * p;
    return pb.A().transpose() * p + p * pb.A() -
           bt_p.transpose() * spd_solve(pb.R(), bt_p) + pb.Q();
}

Matrix dare_defect(const Matrix& p, const LqrProblem& pb) {
    const Matrix bt_p_a = pb.B().transpose() * p * pb.A();
    const Matrix gram = pb.R() + pb.B().transpose() * p * pb.B();
    return pb.A().transpose() * p * pb.A() -
           bt_p_a.transpose() * spd_solve(gram, bt_p_a) + pb.Q() - p;
}

bool stable_in_domain(const Matrix& m, TimeDomain domain, double tol_stab) {
    if (domain == TimeDomain::Continuous) {
        return spectral_abscissa(m) < -tol_stab;
    }
    return spectral_radius(m) < 1.0 - tol_stab;
}

// Newton iteration on the gain (Kleinman in continuous time, Hewer in
// discrete time) from a seed gain that stabilizes the closed loop. Returns
// the value matrix; the accompanying optimal gain lands in *gain_out.
//
// The full Newton step preserves closed-loop stability in exact arithmetic;
// on nearly uncontrollable problems with huge intermediate values it can
// cross into the unstable branch numerically, so the step retreats toward
// the previous gain until the loop is stable again.
Matrix newton_solve(const LqrProblem& pb, Matrix f, const Tolerances& tol,
                    Matrix* gain_out) {
    const bool continuous = pb.domain() == TimeDomain::Continuous;
    Matrix p;
    bool close = false;
    for (int it = 0; it < tol.max_newton; ++it) {
        const Matrix loop = pb.A() + pb.B() * f;
        const Matrix cost = pb.Q() + f.transpose() * pb.R() * f;
        try {
            p = continuous
                    ? solve_continuous_lyapunov(loop.transpose(), Matrix(-cost))
                    : solve_stein(loop, cost);
        } catch (const SingularMatrix&) {
            throw NoConvergence("Riccati Newton step lost stability of the "
                                "closed loop");
        }
        p = symmetrize(p);
        Matrix candidate;
        if (continuous) {
            candidate = -spd_solve(pb.R(), Matrix(pb.B().transpose() * p));
        } else {
            const Matrix gram = pb.R() + pb.B().transpose() * p * pb.B();
            candidate = -spd_solve(gram, Matrix(pb.B().transpose() * p * pb.A()));
        }
        double step = 1.0;
        Matrix trial = candidate;
        while (!stable_in_domain(pb.A() + pb.B() * trial, pb.domain(), 0.0) &&
               step > 1e-8) {
            step *= 0.5;
            trial = f + step * (candidate - f);
        }
        if (step <= 1e-8) {
            throw NoConvergence("Riccati Newton step lost stability of the "
                                "closed loop");
        }
        f = std::move(trial);

        const Matrix defect = continuous ? care_defect(p, pb) : dare_defect(p, pb);
        if (defect.norm() <= tol.riccati * (1.0 + p.norm())) {
            // One more step past the tolerance: Newton squares the error, so
            // the extra solve lands at the numerical floor.
            if (close) {
                if (gain_out) *gain_out = f;
                return p;
            }
            close = true;
        }
    }
    throw NoConvergence("Riccati Newton iteration exceeded its step budget");
}

// Eigenvalue-shifted bootstrap for unstable continuous plants: the plant
// A - sigma*I is stable for a large enough shift, so its Riccati equation is
// solvable from the zero gain; the optimal gain of each shifted plant keeps a
// positive stability margin, which lets the shift walk down to zero.
Feedback shifted_bootstrap_gain(const LqrProblem& pb, const Tolerances& tol) {
    const Eigen::Index m = pb.state_dim();
    const Matrix id = Matrix::Identity(m, m);
    double sigma = spectral_abscissa(pb.A()) + 0.5;
    Matrix gain = Matrix::Zero(pb.input_dim(), m);

    const int max_stages = 400;
    for (int stage = 0; stage < max_stages; ++stage) {
        const LqrProblem shifted(pb.A() - sigma * id, pb.B(), pb.Q(), pb.R(),
                                 TimeDomain::Continuous);
        Tolerances stage_tol = tol;
        stage_tol.riccati = std::max(tol.riccati, 1e-10);
        try {
            newton_solve(shifted, gain, stage_tol, &gain);
        } catch (const Error&) {
            throw NotStabilizable("no stabilizing initial gain found: the "
                                  "shifted Riccati stage failed (pair close "
                                  "to uncontrollable)");
        }
        const double margin =
            -spectral_abscissa(pb.A() - sigma * id + pb.B() * gain);
        if (margin <= 0.0) {
            throw NotStabilizable("no stabilizing initial gain found: a "
                                  "shifted stage lost its stability margin");
        }
        if (sigma <= 0.0) return Feedback(gain);
        sigma = std::max(0.0, sigma - 0.9 * margin);
    }
    throw NotStabilizable("no stabilizing initial gain found within the "
                          "shift-continuation budget");
}

// Riccati value iteration from P = Q, run only until the implied gain is
// strictly stabilizing; Newton takes over from there.
Feedback value_iteration_gain(const LqrProblem& pb, const Tolerances& tol) {
    Matrix p = pb.Q();
    for (int it = 0; it < tol.max_bootstrap; ++it) {
        const Matrix gram = pb.R() + pb.B().transpose() * p * pb.B();
        const Matrix gain = -spd_solve(gram, pb.B().transpose() * p * pb.A());
        Feedback f{gain};
        if (is_stabilizing(pb, f, tol.stability)) return f;
        p = symmetrize(pb.Q() + pb.A().transpose() * p * (pb.A() + pb.B() * gain));
    }
    throw NotStabilizable("no stabilizing initial gain found within the "
                          "value-iteration budget");
}

Feedback initial_gain(const LqrProblem& pb,
                      const std::optional<Feedback>& warm_start,
                      const Tolerances& tol) {
    if (warm_start) {
        if (warm_start->inputs() != pb.input_dim() ||
            warm_start->states() != pb.state_dim()) {
            throw DimensionMismatch("warm-start gain has inconsistent size");
        }
        if (is_stabilizing(pb, *warm_start, tol.stability)) return *warm_start;
    }
    Feedback zero = Feedback::zero(pb.input_dim(), pb.state_dim());
    if (stable_in_domain(pb.A(), pb.domain(), tol.stability)) return zero;
    if (pb.domain() == TimeDomain::Continuous) {
        return shifted_bootstrap_gain(pb, tol);
    }
    return value_iteration_gain(pb, tol);
}

ValueMatrix newton_riccati(const LqrProblem& pb,
                           const std::optional<Feedback>& warm_start,
                           const Tolerances& tol) {
    const Matrix f = initial_gain(pb, warm_start, tol).gain();
    Matrix gain;
    const Matrix p = newton_solve(pb, f, tol, &gain);
    ValueMatrix value(p, tol.symmetry);
    if (value.min_eigenvalue() <= 0.0) {
        throw NoConvergence("Riccati solution is not positive definite; "
                            "subproblem is ill-posed");
    }
    if (!stable_in_domain(pb.A() + pb.B() * gain, pb.domain(), 0.0)) {
        throw NoConvergence("Riccati iteration settled on a non-stabilizing "
                            "solution branch");
    }
    return value;
}

} // namespace

Feedback::Feedback(Matrix gain) : gain_(std::move(gain)) {
    require_finite(gain_, "feedback gain");
}

Feedback Feedback::zero(Eigen::Index inputs, Eigen::Index states) {
    return Feedback(Matrix::Zero(inputs, states));
}

ValueMatrix::ValueMatrix(Matrix p, double tol_sym) : p_(std::move(p)) {
    require_finite(p_, "value matrix");
    if (p_.rows() != p_.cols()) {
        throw DimensionMismatch("value matrix must be square");
    }
    if ((p_ - p_.transpose()).norm() > tol_sym * std::max(1.0, p_.norm())) {
        throw NotSpd("value matrix is not symmetric within tolerance");
    }
    p_ = symmetrize(p_);
}

double ValueMatrix::min_eigenvalue() const {
    Eigen::SelfAdjointEigenSolver<Matrix> es(p_, Eigen::EigenvaluesOnly);
    return es.eigenvalues().minCoeff();
}

LqrProblem::LqrProblem(Matrix a, Matrix b, Matrix q, Matrix r, TimeDomain domain)
    : a_(std::move(a)), b_(std::move(b)), q_(std::move(q)), r_(std::move(r)),
      domain_(domain) {
    require_finite(a_, "A");
    require_finite(b_, "B");
    if (a_.rows() != a_.cols()) throw DimensionMismatch("A must be square");
    if (b_.rows() != a_.rows()) {
        throw DimensionMismatch("B must have as many rows as A");
    }
    if (q_.rows() != a_.rows() || q_.cols() != a_.cols()) {
        throw DimensionMismatch("Q must match the state dimension");
    }
    if (r_.rows() != b_.cols() || r_.cols() != b_.cols()) {
        throw DimensionMismatch("R must match the input dimension");
    }
    require_spd(q_, "Q");
    require_spd(r_, "R");
    q_ = symmetrize(q_);
    r_ = symmetrize(r_);
}

Matrix LqrProblem::closed_loop(const Feedback& f) const {
    if (f.inputs() != input_dim() || f.states() != state_dim()) {
        throw DimensionMismatch("feedback gain has inconsistent size");
    }
    return a_ + b_ * f.gain();
}

ValueMatrix solve_care(const LqrProblem& problem,
                       const std::optional<Feedback>& warm_start,
                       const Tolerances& tol) {
    if (problem.domain() != TimeDomain::Continuous) {
        throw DomainMismatch("solve_care expects a continuous-time problem");
    }
    return newton_riccati(problem, warm_start, tol);
}

ValueMatrix solve_dare(const LqrProblem& problem,
                       const std::optional<Feedback>& warm_start,
                       const Tolerances& tol) {
    if (problem.domain() != TimeDomain::Discrete) {
        throw DomainMismatch("solve_dare expects a discrete-time problem");
    }
    return newton_riccati(problem, warm_start, tol);
}

ValueMatrix solve_riccati(const LqrProblem& problem,
                          const std::optional<Feedback>& warm_start,
                          const Tolerances& tol) {
    return newton_riccati(problem, warm_start, tol);
}

Feedback optimal_feedback(const ValueMatrix& p, const LqrProblem& problem) {
    if (p.dim() != problem.state_dim()) {
        throw DimensionMismatch("value matrix must match the state dimension");
    }
    if (problem.domain() == TimeDomain::Continuous) {
        return Feedback(
            Matrix(-spd_solve(problem.R(),
                              Matrix(problem.B().transpose() * p.matrix()))));
    }
    const Matrix gram =
        problem.R() + problem.B().transpose() * p.matrix() * problem.B();
    return Feedback(Matrix(-spd_solve(
        gram, Matrix(problem.B().transpose() * p.matrix() * problem.A()))));
}

ValueMatrix evaluate_policy(const LqrProblem& problem, const Feedback& f,
                            const Tolerances& tol) {
    if (!is_stabilizing(problem, f, tol.stability)) {
        throw NotStabilizing("feedback does not stabilize the closed loop; "
                             "its accumulated cost is infinite");
    }
    const Matrix loop = problem.closed_loop(f);
    const Matrix cost = problem.Q() + f.gain().transpose() * problem.R() * f.gain();
    Matrix p = problem.domain() == TimeDomain::Continuous
                   ? solve_continuous_lyapunov(loop.transpose(), Matrix(-cost))
                   : solve_stein(loop, cost);
    return ValueMatrix(symmetrize(p), tol.symmetry);
}

bool is_stabilizing(const LqrProblem& problem, const Feedback& f,
                    double tol_stab) {
    return stable_in_domain(problem.closed_loop(f), problem.domain(), tol_stab);
}

bool is_controllable(const Matrix& a, const Matrix& b, double tol_rank) {
    if (a.rows() != a.cols()) throw DimensionMismatch("A must be square");
    if (b.rows() != a.rows()) {
        throw DimensionMismatch("B must have as many rows as A");
    }
    const Eigen::Index m = a.rows();
    const Eigen::Index r = b.cols();
    Matrix kalman(m, m * r);
    Matrix block = b;
    for (Eigen::Index k = 0; k < m; ++k) {
        kalman.middleCols(k * r, r) = block;
        block = a * block;
    }
    Eigen::JacobiSVD<Matrix> svd(kalman);
    const double cutoff =
        controllability_threshold(tol_rank, m) * svd.singularValues()(0);
    Eigen::Index rank = 0;
    for (Eigen::Index i = 0; i < svd.singularValues().size(); ++i) {
        if (svd.singularValues()(i) > cutoff) ++rank;
    }
    return rank == m;
}

double riccati_residual(const ValueMatrix& p, const LqrProblem& problem) {
    if (p.dim() != problem.state_dim()) {
        throw DimensionMismatch("value matrix must match the state dimension");
    }
    return problem.domain() == TimeDomain::Continuous
               ? care_defect(p.matrix(), problem).norm()
               : dare_defect(p.matrix(), problem).norm();
}

Matrix solve_continuous_lyapunov(const Matrix& m, const Matrix& c) {
    if (m.rows() != m.cols() || c.rows() != c.cols() || m.rows() != c.rows()) {
        throw DimensionMismatch("Lyapunov solve needs square same-size inputs");
    }
    const Eigen::Index n = m.rows();
    const Matrix id = Matrix::Identity(n, n);
    Matrix op = Eigen::kroneckerProduct(id, m).eval() +
                Eigen::kroneckerProduct(m, id).eval();
    return kron_solve(op, c, "Lyapunov");
}

Matrix solve_stein(const Matrix& m, const Matrix& c) {
    if (m.rows() != m.cols() || c.rows() != c.cols() || m.rows() != c.rows()) {
        throw DimensionMismatch("Stein solve needs square same-size inputs");
    }
    const Eigen::Index n = m.rows();
    const Matrix mt = m.transpose();
    Matrix op = Matrix::Identity(n * n, n * n) -
                Eigen::kroneckerProduct(mt, mt).eval();
    return kron_solve(op, c, "Stein");
}

double spectral_abscissa(const Matrix& m) {
    Eigen::EigenSolver<Matrix> es(m, false);
    return es.eigenvalues().real().maxCoeff();
}

double spectral_radius(const Matrix& m) {
    Eigen::EigenSolver<Matrix> es(m, false);
    return es.eigenvalues().cwiseAbs().maxCoeff();
}

double min_symmetric_eigenvalue(const Matrix& m) {
    Eigen::SelfAdjointEigenSolver<Matrix> es(symmetrize(m),
                                             Eigen::EigenvaluesOnly);
    return es.eigenvalues().minCoeff();
}

} // namespace splitlqr

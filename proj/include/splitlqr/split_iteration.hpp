#pragma once

#include <limits>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "splitlqr/partition.hpp"

namespace splitlqr {

/// The reduced LQR problem seen by one subsystem while the feedback rows of
/// all the others stay frozen and are folded into the dynamics and the state
/// cost.
struct SubproblemMatrices {
    Matrix A; ///< A + B (I - Pi_i Pi_i') F
    Matrix B; ///< B Pi_i
    Matrix Q; ///< Q + F' (I - Pi_i Pi_i') R (I - Pi_i Pi_i') F, symmetrized
    Matrix R; ///< Pi_i' R Pi_i
};

/// One performed subsystem update inside a run.
struct UpdateRecord {
    int sweep = 0;
    int subsystem = 0; ///< 0-based
    Matrix feedback_after;
    Matrix value_matrix; ///< Riccati solution of the updated subproblem
    double full_riccati_residual = 0.0;
    double feedback_change = 0.0; ///< Frobenius norm of the row update
    /// min eigenvalue of (previous P - this P); NaN on the first record.
    double value_decrement_min_eig =
        std::numeric_limits<double>::quiet_NaN();
    bool stabilizing = false; ///< full-problem stability of feedback_after
};

struct IterationTrace {
    Matrix initial_feedback;
    std::vector<UpdateRecord> records;
};

enum class TerminationReason { Converged, MaxSweeps, SubproblemFailure };

struct SolveReport {
    Feedback final_feedback;
    std::optional<ValueMatrix> final_value;
    int sweeps = 0;
    TerminationReason status = TerminationReason::Converged;
    IterationTrace trace;
    std::string message;
};

struct RunOptions {
    int max_sweeps = 500;
    /// Relative Frobenius change of F over a full sweep below which the
    /// feedback is considered stationary.
    double tol_feedback = 1e-10;
    /// Full-problem Riccati residual bound, relative to 1 + |P|_F.
    double tol_residual = 1e-9;
    /// Sweep order as a permutation of 0..n-1; empty means ascending.
    std::vector<int> order;
    Tolerances tolerances;
};

struct SweepResult {
    Feedback feedback;
    std::vector<UpdateRecord> updates;
    std::vector<int> skipped; ///< subsystems left untouched this sweep
};

/// Starting feedback: the zero gain by default, or a caller-supplied one
/// (checked for size). No stability is required of it.
Feedback initial_feedback(const LqrProblem& problem,
                          const BlockPartition& partition,
                          const std::optional<Feedback>& given = {});

/// Folds every feedback row except block i into the problem matrices.
SubproblemMatrices build_subproblem(const LqrProblem& problem,
                                    const BlockPartition& partition,
                                    const Feedback& f, Eigen::Index i);

/// True when subsystem i may be updated from the current feedback: either
/// the reduced pair is controllable or the feedback already stabilizes the
/// closed loop (so the subproblem solve can be warm-started).
bool subsystem_updatable(const LqrProblem& problem,
                         const BlockPartition& partition, const Feedback& f,
                         Eigen::Index i, const Tolerances& tol = {});

/// Solves subsystem i's reduced Riccati equation and rewrites feedback block
/// row i with the resulting optimal gain; all other rows are copied verbatim.
/// Returns the new feedback and the subproblem value matrix (which is the
/// value matrix of the new feedback on the full problem).
std::pair<Feedback, ValueMatrix> update_subsystem(const LqrProblem& problem,
                                                  const BlockPartition& partition,
                                                  const Feedback& f,
                                                  Eigen::Index i,
                                                  const Tolerances& tol = {});

/// Applies update_subsystem once per subsystem in the given order, threading
/// the feedback through. Subsystems that are not updatable are skipped
/// without touching the feedback; a sweep that skips everything throws
/// AllSubsystemsUncontrollable.
SweepResult sweep(const LqrProblem& problem, const BlockPartition& partition,
                  const Feedback& f, const std::vector<int>& order,
                  const Tolerances& tol = {});

/// Runs cyclic sweeps until the feedback is stationary across a sweep and
/// the last subproblem's value matrix solves the full Riccati equation, or
/// until the certificate check (full residual and implied gain both at the
/// numerical floor) fires. Failures are reported through the returned
/// status, with the trace up to that point attached.
SolveReport run_split_iteration(const LqrProblem& problem,
                                const BlockPartition& partition,
                                const Feedback& f0,
                                const RunOptions& options = {});

} // namespace splitlqr

#include "splitlqr/split_iteration.hpp"

#include <algorithm>
#include <cmath>

namespace splitlqr {

namespace {

std::vector<int> ascending_order(Eigen::Index n) {
    std::vector<int> order(static_cast<std::size_t>(n));
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = static_cast<int>(i);
    return order;
}

void require_permutation(const std::vector<int>& order, Eigen::Index n) {
    if (static_cast<Eigen::Index>(order.size()) != n) {
        throw Error("sweep order must list every subsystem exactly once");
    }
    std::vector<bool> seen(static_cast<std::size_t>(n), false);
    for (const int i : order) {
        if (i < 0 || i >= n) {
            throw IndexOutOfRange("sweep order entry " + std::to_string(i) +
                                  " outside [0, " + std::to_string(n) + ")");
        }
        if (seen[static_cast<std::size_t>(i)]) {
            throw Error("sweep order repeats subsystem " + std::to_string(i));
        }
        seen[static_cast<std::size_t>(i)] = true;
    }
}

} // namespace

Feedback initial_feedback(const LqrProblem& problem,
                          const BlockPartition& partition,
                          const std::optional<Feedback>& given) {
    require_input_partition(partition, problem);
    if (!given) {
        return Feedback::zero(problem.input_dim(), problem.state_dim());
    }
    if (given->inputs() != problem.input_dim() ||
        given->states() != problem.state_dim()) {
        throw DimensionMismatch("initial feedback must be inputs-by-states");
    }
    return *given;
}

SubproblemMatrices build_subproblem(const LqrProblem& problem,
                                    const BlockPartition& partition,
                                    const Feedback& f, Eigen::Index i) {
    require_input_partition(partition, problem);
    if (f.inputs() != problem.input_dim() || f.states() != problem.state_dim()) {
        throw DimensionMismatch("feedback must be inputs-by-states");
    }
    if (i < 0 || i >= partition.subsystems()) {
        throw IndexOutOfRange("subsystem index " + std::to_string(i));
    }
    const Matrix other_rows = partition.complement(i) * f.gain();
    SubproblemMatrices sub;
    sub.A = problem.A() + problem.B() * other_rows;
    sub.B = problem.B() * partition.selector(i);
    Matrix q = problem.Q() + other_rows.transpose() * problem.R() * other_rows;
    sub.Q = 0.5 * (q + q.transpose());
    sub.R = problem.R().block(partition.offset(i), partition.offset(i),
                              partition.size(i), partition.size(i));
    return sub;
}

bool subsystem_updatable(const LqrProblem& problem,
                         const BlockPartition& partition, const Feedback& f,
                         Eigen::Index i, const Tolerances& tol) {
    const SubproblemMatrices sub = build_subproblem(problem, partition, f, i);
    return is_controllable(sub.A, sub.B, tol.rank) ||
           is_stabilizing(problem, f, tol.stability);
}

std::pair<Feedback, ValueMatrix> update_subsystem(const LqrProblem& problem,
                                                  const BlockPartition& partition,
                                                  const Feedback& f,
                                                  Eigen::Index i,
                                                  const Tolerances& tol) {
    const SubproblemMatrices sub = build_subproblem(problem, partition, f, i);
    const bool warm_ok = is_stabilizing(problem, f, tol.stability);
    if (!warm_ok && !is_controllable(sub.A, sub.B, tol.rank)) {
        throw SubproblemNotControllable(
            "subsystem " + std::to_string(i) +
            ": reduced pair is uncontrollable and the current feedback does "
            "not stabilize");
    }

    const LqrProblem reduced(sub.A, sub.B, sub.Q, sub.R, problem.domain());
    // The current block row closes the reduced loop at exactly A + BF, so it
    // is the natural warm start once the iterates stabilize.
    const Matrix row =
        f.gain().middleRows(partition.offset(i), partition.size(i));
    std::optional<Feedback> warm;
    if (warm_ok) warm = Feedback(row);

    ValueMatrix p = [&] {
        try {
            return solve_riccati(reduced, warm, tol);
        } catch (const NoConvergence& e) {
            throw RiccatiFailure(e.what());
        } catch (const NotStabilizable& e) {
            throw RiccatiFailure(e.what());
        }
    }();

    Matrix new_row;
    if (problem.domain() == TimeDomain::Continuous) {
        Eigen::LLT<Matrix> llt(sub.R);
        new_row = -llt.solve(sub.B.transpose() * p.matrix());
    } else {
        const Matrix gram = sub.R + sub.B.transpose() * p.matrix() * sub.B;
        Eigen::LLT<Matrix> llt(gram);
        new_row = -llt.solve(sub.B.transpose() * p.matrix() * sub.A);
    }

    Matrix gain = f.gain();
    gain.middleRows(partition.offset(i), partition.size(i)) = new_row;
    return {Feedback(std::move(gain)), std::move(p)};
}

SweepResult sweep(const LqrProblem& problem, const BlockPartition& partition,
                  const Feedback& f, const std::vector<int>& order,
                  const Tolerances& tol) {
    require_input_partition(partition, problem);
    require_permutation(order, partition.subsystems());

    SweepResult result{f, {}, {}};
    for (const int i : order) {
        try {
            auto [next, p] = update_subsystem(problem, partition,
                                              result.feedback, i, tol);
            UpdateRecord rec;
            rec.subsystem = i;
            rec.feedback_after = next.gain();
            rec.value_matrix = p.matrix();
            rec.full_riccati_residual = riccati_residual(p, problem);
            rec.feedback_change =
                (next.gain() - result.feedback.gain()).norm();
            rec.stabilizing = is_stabilizing(problem, next, tol.stability);
            result.updates.push_back(std::move(rec));
            result.feedback = std::move(next);
        } catch (const SubproblemNotControllable&) {
            result.skipped.push_back(i);
        }
    }
    if (result.updates.empty()) {
        throw AllSubsystemsUncontrollable(
            "every subsystem was skipped: no reduced pair is controllable and "
            "the current feedback does not stabilize");
    }
    return result;
}

SolveReport run_split_iteration(const LqrProblem& problem,
                                const BlockPartition& partition,
                                const Feedback& f0, const RunOptions& options) {
    require_input_partition(partition, problem);
    require_block_diagonal(problem.R(), partition);

    const std::vector<int> order = options.order.empty()
                                       ? ascending_order(partition.subsystems())
                                       : options.order;
    require_permutation(order, partition.subsystems());

    SolveReport report{f0, {}, 0, TerminationReason::MaxSweeps, {}, {}};
    report.trace.initial_feedback = f0.gain();

    std::optional<Matrix> previous_p;
    for (int s = 0; s < options.max_sweeps; ++s) {
        const Matrix before = report.final_feedback.gain();
        std::optional<SweepResult> res;
        try {
            res = sweep(problem, partition, report.final_feedback, order,
                        options.tolerances);
        } catch (const Error& e) {
            report.status = TerminationReason::SubproblemFailure;
            report.message = e.what();
            return report;
        }

        for (UpdateRecord& rec : res->updates) {
            rec.sweep = s;
            if (previous_p) {
                rec.value_decrement_min_eig =
                    min_symmetric_eigenvalue(*previous_p - rec.value_matrix);
            }
            previous_p = rec.value_matrix;
            report.trace.records.push_back(std::move(rec));
        }
        report.final_feedback = res->feedback;
        report.sweeps = s + 1;

        const UpdateRecord& last = report.trace.records.back();
        ValueMatrix p_last(last.value_matrix, options.tolerances.symmetry);
        const double residual_scale = 1.0 + last.value_matrix.norm();
        const double feedback_scale = 1.0 + report.final_feedback.gain().norm();
        const bool residual_ok =
            last.full_riccati_residual <= options.tol_residual * residual_scale;
        const bool stationary =
            (report.final_feedback.gain() - before).norm() <=
            options.tol_feedback * feedback_scale;

        // A sweep may land on the optimum in one shot (decoupled systems do).
        // Certify that directly: the last value matrix solves the full
        // equation to the numerical floor and the feedback is its own gain.
        bool certified = false;
        if (last.full_riccati_residual <=
            0.01 * options.tol_residual * residual_scale) {
            const Feedback implied = optimal_feedback(p_last, problem);
            certified = (report.final_feedback.gain() - implied.gain()).norm() <=
                        0.01 * options.tol_feedback * feedback_scale;
        }

        if ((stationary && residual_ok) || certified) {
            report.status = TerminationReason::Converged;
            report.final_value = std::move(p_last);
            report.message = "converged after " + std::to_string(s + 1) +
                             " sweep(s)";
            return report;
        }
        report.final_value = std::move(p_last);
    }

    report.status = TerminationReason::MaxSweeps;
    report.message = "no convergence within " +
                     std::to_string(options.max_sweeps) + " sweeps";
    return report;
}

} // namespace splitlqr

#include "splitlqr/rate_analysis.hpp"

#include <cmath>

#include <Eigen/Eigenvalues>
#include <unsupported/Eigen/KroneckerProduct>

namespace splitlqr {

namespace {

void require_discrete(const LqrProblem& problem) {
    if (problem.domain() != TimeDomain::Discrete) {
        throw DomainMismatch("the sweep linearization is nonzero only in "
                             "discrete time; the continuous-time one vanishes "
                             "at the optimum");
    }
}

void require_optimal(const ValueMatrix& p, const LqrProblem& problem) {
    const double residual = riccati_residual(p, problem);
    if (residual > 1e-8 * (1.0 + p.matrix().norm())) {
        throw NotOptimal("value matrix does not solve the full Riccati "
                         "equation (residual " + std::to_string(residual) + ")");
    }
}

struct IdentityWorkspace {
    Matrix z;          // (R+S)^{-1}
    Matrix z_i;        // Pi_i (Pi_i'(R+S)Pi_i)^{-1} Pi_i'
    Matrix complement; // I - Pi_i Pi_i'
    Matrix sum;        // R + S
};

IdentityWorkspace build_workspace(const Matrix& r, const Matrix& s,
                                  const BlockPartition& partition,
                                  Eigen::Index i) {
    if (r.rows() != s.rows() || r.cols() != s.cols()) {
        throw DimensionMismatch("R and S must have the same size");
    }
    require_block_diagonal(r, partition, 1e-12);
    const auto check_spd = [](const Matrix& m, const char* name) {
        if ((m - m.transpose()).norm() > 1e-10 * (1.0 + m.norm()) ||
            min_symmetric_eigenvalue(m) <= 0.0) {
            throw NotSpd(std::string(name) + " must be symmetric positive "
                                             "definite");
        }
    };
    check_spd(r, "R");
    check_spd(s, "S");

    IdentityWorkspace w;
    w.sum = r + s;
    w.z = w.sum.llt().solve(Matrix::Identity(r.rows(), r.cols()));
    const Matrix pi = partition.selector(i);
    const Matrix block = pi.transpose() * w.sum * pi;
    w.z_i = pi * block.llt().solve(Matrix::Identity(block.rows(), block.cols())) *
            pi.transpose();
    w.complement = partition.complement(i);
    return w;
}

} // namespace

Matrix subsystem_rate_gain(const LqrProblem& problem,
                           const BlockPartition& partition,
                           const ValueMatrix& p_opt, Eigen::Index i,
                           const Tolerances& tol) {
    (void)tol;
    require_discrete(problem);
    require_input_partition(partition, problem);
    require_optimal(p_opt, problem);

    const Matrix pi = partition.selector(i);
    const Matrix b_i = problem.B() * pi;
    const Matrix gram = pi.transpose() * problem.R() * pi +
                        b_i.transpose() * p_opt.matrix() * b_i;
    const Matrix row = gram.llt().solve(b_i.transpose() * p_opt.matrix() *
                                        problem.B() * partition.complement(i));
    return -pi * row;
}

Matrix rate_matrix_subsystem(const LqrProblem& problem,
                             const BlockPartition& partition,
                             const ValueMatrix& p_opt, Eigen::Index i,
                             const Tolerances& tol) {
    const Matrix k = subsystem_rate_gain(problem, partition, p_opt, i, tol);
    const Matrix id = Matrix::Identity(problem.state_dim(), problem.state_dim());
    return Eigen::kroneckerProduct(id, k);
}

RateReport rate_matrix_cycle(const LqrProblem& problem,
                             const BlockPartition& partition,
                             const ValueMatrix& p_opt,
                             const std::vector<int>& order,
                             const Tolerances& tol) {
    const Eigen::Index n = partition.subsystems();
    std::vector<int> cycle = order;
    if (cycle.empty()) {
        for (Eigen::Index i = 0; i < n; ++i) cycle.push_back(static_cast<int>(i));
    }

    RateReport report;
    report.order = cycle;
    report.subsystem_jacobians.reserve(static_cast<std::size_t>(n));
    for (Eigen::Index i = 0; i < n; ++i) {
        report.subsystem_jacobians.push_back(
            rate_matrix_subsystem(problem, partition, p_opt, i, tol));
    }

    const Eigen::Index dim = problem.input_dim() * problem.state_dim();
    Matrix product = Matrix::Identity(dim, dim);
    for (const int i : cycle) {
        // Later updates compose on the left.
        product = report.subsystem_jacobians[static_cast<std::size_t>(i)] *
                  product;
    }
    report.cycle_jacobian = product;
    report.spectral_radius = spectral_radius(product);
    Eigen::JacobiSVD<Matrix> svd(product);
    report.operator_norm = svd.singularValues().size() > 0
                               ? svd.singularValues()(0)
                               : 0.0;
    return report;
}

Matrix distributed_block(const LqrProblem& problem,
                         const BlockPartition& input_partition,
                         const BlockPartition& state_partition,
                         const ValueMatrix& p_opt, Eigen::Index i,
                         Eigen::Index j) {
    require_input_partition(input_partition, problem);
    if (state_partition.total() != problem.state_dim()) {
        throw DimensionMismatch("state partition does not span the state space");
    }
    if (state_partition.subsystems() != input_partition.subsystems()) {
        throw DimensionMismatch("state and input partitions must have the "
                                "same number of blocks");
    }
    // Distributed actuation: inputs of one subsystem act on its own states
    // only, so B must be block diagonal under the two partitions.
    Matrix off = problem.B();
    for (Eigen::Index k = 0; k < input_partition.subsystems(); ++k) {
        off.block(state_partition.offset(k), input_partition.offset(k),
                  state_partition.size(k), input_partition.size(k))
            .setZero();
    }
    if (off.norm() > 1e-12 * (1.0 + problem.B().norm())) {
        throw NotBlockDiagonal("B has off-diagonal blocks; distributed "
                               "actuation requires a block-diagonal input "
                               "matrix");
    }

    const Eigen::Index ri = input_partition.size(i);
    const Eigen::Index rj = input_partition.size(j);
    if (j == i) return Matrix::Zero(ri, rj);

    const auto b_block = [&](Eigen::Index k) {
        return problem.B().block(state_partition.offset(k),
                                 input_partition.offset(k),
                                 state_partition.size(k),
                                 input_partition.size(k));
    };
    const Matrix b_ii = b_block(i);
    const Matrix b_jj = b_block(j);
    const Matrix r_ii = problem.R().block(input_partition.offset(i),
                                          input_partition.offset(i), ri, ri);
    const Matrix p_ii = p_opt.matrix().block(
        state_partition.offset(i), state_partition.offset(i),
        state_partition.size(i), state_partition.size(i));
    const Matrix p_ij = p_opt.matrix().block(
        state_partition.offset(i), state_partition.offset(j),
        state_partition.size(i), state_partition.size(j));

    const Matrix gram = r_ii + b_ii.transpose() * p_ii * b_ii;
    return gram.llt().solve(b_ii.transpose() * p_ij * b_jj);
}

Matrix finite_difference_jacobian(
    const std::function<Matrix(const Matrix&)>& map, const Matrix& at,
    double step) {
    if (step <= 0.0) throw Error("finite-difference step must be positive");
    const Eigen::Index rows = at.rows();
    const Eigen::Index cols = at.cols();
    const Eigen::Index dim = rows * cols;
    Matrix jac(dim, dim);
    Matrix probe = at;
    for (Eigen::Index k = 0; k < dim; ++k) {
        const Eigen::Index r = k % rows;
        const Eigen::Index c = k / rows;
        probe(r, c) = at(r, c) + step;
        const Matrix plus = map(probe);
        probe(r, c) = at(r, c) - step;
        const Matrix minus = map(probe);
        probe(r, c) = at(r, c);
        if (plus.rows() != rows || plus.cols() != cols) {
            throw DimensionMismatch("map must preserve the matrix shape");
        }
        jac.col(k) = ((plus - minus) / (2.0 * step)).reshaped();
    }
    return jac;
}

double default_fd_step(const Matrix& at) { return 1e-5 * (1.0 + at.norm()); }

TechIdentityResiduals verify_tech_identities(const Matrix& r, const Matrix& s,
                                             const BlockPartition& partition,
                                             Eigen::Index i) {
    const IdentityWorkspace w = build_workspace(r, s, partition, i);
    const Matrix pi = partition.selector(i);
    const Matrix pi_proj = pi * pi.transpose();
    const Matrix z_inv = w.sum;

    const Matrix rhs = pi_proj * z_inv * pi_proj;
    const Matrix quadratic = z_inv * w.z_i * z_inv -
                             w.complement * s * w.z_i * z_inv -
                             z_inv * w.z_i * s * w.complement +
                             w.complement * s * w.z_i * s * w.complement;
    const Matrix decomposition = w.complement * z_inv + z_inv * w.complement -
                                 w.complement * z_inv * w.complement + rhs;

    // Aggregate mixing matrix from the discrete-time fixed-point argument;
    // the two identities above collapse it to (R+S)^{-1}.
    const Matrix aggregate =
        w.z * (w.complement * z_inv + z_inv * w.complement -
               w.complement * z_inv * w.complement + quadratic) *
        w.z;

    TechIdentityResiduals out;
    out.quadratic_identity = (quadratic - rhs).norm();
    out.decomposition_identity = (z_inv - decomposition).norm();
    out.aggregate_gap = (aggregate - w.z).norm();
    return out;
}

OrderFit empirical_order(const std::vector<double>& sweep_errors,
                         double window_lo, double window_hi) {
    std::vector<std::pair<double, double>> points;
    for (std::size_t k = 0; k + 1 < sweep_errors.size(); ++k) {
        const double e0 = sweep_errors[k];
        const double e1 = sweep_errors[k + 1];
        if (e0 >= window_lo && e0 <= window_hi && e1 >= window_lo &&
            e1 <= window_hi) {
            points.emplace_back(std::log(e0), std::log(e1));
        }
    }
    if (points.size() < 3) {
        throw InsufficientData(
            "need at least 3 consecutive error pairs inside the fitting "
            "window, got " + std::to_string(points.size()));
    }

    double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
    for (const auto& [x, y] : points) {
        sx += x;
        sy += y;
        sxx += x * x;
        sxy += x * y;
    }
    const double n = static_cast<double>(points.size());
    const double denom = n * sxx - sx * sx;
    if (std::abs(denom) < 1e-12 * (1.0 + n * sxx)) {
        throw InsufficientData("error values are too clustered to fit an "
                               "order");
    }
    OrderFit fit;
    fit.order = (n * sxy - sx * sy) / denom;
    fit.rate = std::exp((sy - fit.order * sx) / n);
    fit.pairs = static_cast<int>(points.size());
    return fit;
}

OrderFit empirical_order(const IterationTrace& trace, const Matrix& f_opt,
                         double window_lo, double window_hi) {
    return empirical_order(sweep_errors(trace, f_opt), window_lo, window_hi);
}

std::vector<double> sweep_errors(const IterationTrace& trace,
                                 const Matrix& f_opt) {
    std::vector<double> errors;
    if (trace.initial_feedback.size() > 0) {
        errors.push_back((trace.initial_feedback - f_opt).norm());
    }
    for (std::size_t k = 0; k < trace.records.size(); ++k) {
        const bool sweep_end =
            k + 1 == trace.records.size() ||
            trace.records[k + 1].sweep != trace.records[k].sweep;
        if (sweep_end) {
            errors.push_back((trace.records[k].feedback_after - f_opt).norm());
        }
    }
    return errors;
}

} // namespace splitlqr

#include "splitlqr/partition.hpp"

#include <numeric>
#include <string>

namespace splitlqr {

BlockPartition::BlockPartition(std::vector<Eigen::Index> block_sizes)
    : sizes_(std::move(block_sizes)) {
    if (sizes_.empty()) {
        throw DimensionMismatch("a partition needs at least one block");
    }
    offsets_.reserve(sizes_.size());
    for (const Eigen::Index s : sizes_) {
        if (s < 1) {
            throw DimensionMismatch("every partition block must have size >= 1");
        }
        offsets_.push_back(total_);
        total_ += s;
    }
}

Eigen::Index BlockPartition::size(Eigen::Index i) const {
    require_index(i);
    return sizes_[static_cast<std::size_t>(i)];
}

Eigen::Index BlockPartition::offset(Eigen::Index i) const {
    require_index(i);
    return offsets_[static_cast<std::size_t>(i)];
}

Matrix BlockPartition::selector(Eigen::Index i) const {
    require_index(i);
    Matrix pi = Matrix::Zero(total_, size(i));
    pi.middleRows(offset(i), size(i)).setIdentity();
    return pi;
}

Matrix BlockPartition::complement(Eigen::Index i) const {
    require_index(i);
    Matrix proj = Matrix::Identity(total_, total_);
    proj.block(offset(i), offset(i), size(i), size(i)).setZero();
    return proj;
}

void BlockPartition::require_index(Eigen::Index i) const {
    if (i < 0 || i >= subsystems()) {
        throw IndexOutOfRange("subsystem index " + std::to_string(i) +
                              " outside [0, " + std::to_string(subsystems()) +
                              ")");
    }
}

void require_input_partition(const BlockPartition& partition,
                             const LqrProblem& problem) {
    if (partition.total() != problem.input_dim()) {
        throw DimensionMismatch(
            "partition spans " + std::to_string(partition.total()) +
            " inputs but the problem has " +
            std::to_string(problem.input_dim()));
    }
}

void require_block_diagonal(const Matrix& m, const BlockPartition& partition,
                            double tol) {
    if (m.rows() != partition.total() || m.cols() != partition.total()) {
        throw DimensionMismatch("matrix does not match the partition size");
    }
    Matrix off = m;
    for (Eigen::Index i = 0; i < partition.subsystems(); ++i) {
        off.block(partition.offset(i), partition.offset(i), partition.size(i),
                  partition.size(i))
            .setZero();
    }
    if (off.norm() > tol * std::max(1.0, m.norm())) {
        throw NotBlockDiagonal("matrix has off-diagonal blocks beyond tolerance");
    }
}

} // namespace splitlqr

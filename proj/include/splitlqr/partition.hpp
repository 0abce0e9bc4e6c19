#pragma once

#include <vector>

#include "splitlqr/lqr.hpp"

namespace splitlqr {

/// A decomposition of a vector space of dimension sum(block_sizes) into
/// contiguous blocks, one per subsystem. Used for the control space (where it
/// fixes the selector of each subsystem's inputs) and, in the distributed
/// actuation analysis, for the state space.
class BlockPartition {
public:
    explicit BlockPartition(std::vector<Eigen::Index> block_sizes);

    Eigen::Index subsystems() const {
        return static_cast<Eigen::Index>(sizes_.size());
    }
    Eigen::Index total() const { return total_; }
    Eigen::Index size(Eigen::Index i) const;
    Eigen::Index offset(Eigen::Index i) const;
    const std::vector<Eigen::Index>& sizes() const { return sizes_; }

    /// Selector of block i: total-by-size(i), identity rows on the block.
    Matrix selector(Eigen::Index i) const;

    /// Complement projector I - selector(i) * selector(i)'.
    Matrix complement(Eigen::Index i) const;

    bool operator==(const BlockPartition&) const = default;

private:
    void require_index(Eigen::Index i) const;

    std::vector<Eigen::Index> sizes_;
    std::vector<Eigen::Index> offsets_;
    Eigen::Index total_ = 0;
};

/// Throws DimensionMismatch unless the partition spans the problem's inputs.
void require_input_partition(const BlockPartition& partition,
                             const LqrProblem& problem);

/// Throws NotBlockDiagonal when m has off-diagonal blocks (relative to the
/// partition) larger than tol times its norm.
void require_block_diagonal(const Matrix& m, const BlockPartition& partition,
                            double tol = 1e-12);

} // namespace splitlqr

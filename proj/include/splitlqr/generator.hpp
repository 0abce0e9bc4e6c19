#pragma once

#include <cstdint>

#include "splitlqr/partition.hpp"

namespace splitlqr {

/// Recipe for a seeded random coupled system: block-diagonal dynamics plus a
/// coupling term of magnitude `coupling`, block-diagonal full-column-rank
/// actuation, and block-diagonal SPD costs.
struct GeneratorSpec {
    std::vector<Eigen::Index> state_blocks;
    std::vector<Eigen::Index> input_blocks;
    double coupling = 0.1; ///< scale of the off-diagonal blocks of A
    TimeDomain domain = TimeDomain::Continuous;
    std::uint64_t seed = 0;
    /// SPD shift for the cost blocks; also the stability margin applied to
    /// the diagonal blocks of A in the fully decoupled case.
    double stability_margin = 0.2;
};

/// A problem together with the two partitions the harness operates on.
struct ProblemBundle {
    LqrProblem problem;
    BlockPartition input_partition;
    BlockPartition state_partition;
};

/// Draws a system from the spec, deterministically in the seed, retrying
/// within a fixed budget until the full pair is controllable and every
/// subsystem can perform its first update from the zero feedback. Throws
/// GenerationFailed when the spec is degenerate or the budget runs out.
ProblemBundle generate_coupled_system(const GeneratorSpec& spec);

} // namespace splitlqr

#pragma once

// Shared seeded fixtures for the rate and acceptance suites.

#include "oracles.hpp"
#include "splitlqr/partition.hpp"

namespace fixtures {

using splitlqr::BlockPartition;
using splitlqr::LqrProblem;
using splitlqr::Matrix;
using splitlqr::TimeDomain;

struct RingSystem {
    LqrProblem problem;
    BlockPartition partition;
};

// Four 2-state subsystems on a one-directional coupling ring (subsystem i is
// driven by subsystem i+1), stable diagonal blocks, strong actuation. On
// these the split iteration's per-sweep error follows a clean quadratic law
// long enough to be observed inside the order-fit window: the feedback
// magnitudes are scaled down by `actuation` (B up, R up quadratically), which
// scales the absolute quadratic constant up without changing the dynamics.
inline RingSystem ring_system(std::uint64_t seed, double coupling,
                              double actuation) {
    oracles::TestRng rng(seed * 313 + 11);
    const int blocks = 4;
    const Eigen::Index bs = 2;
    const Eigen::Index m = blocks * bs;

    Matrix a = Matrix::Zero(m, m);
    for (int i = 0; i < blocks; ++i) {
        Matrix blk = rng.matrix(bs, bs);
        blk -= (splitlqr::spectral_abscissa(blk) + 0.4) *
               Matrix::Identity(bs, bs);
        a.block(i * bs, i * bs, bs, bs) = blk;
    }
    for (int i = 0; i < blocks; ++i) {
        const int j = (i + 1) % blocks;
        a.block(i * bs, j * bs, bs, bs) = coupling * rng.matrix(bs, bs);
    }

    Matrix b = Matrix::Zero(m, blocks);
    for (int i = 0; i < blocks; ++i) {
        b.block(i * bs, i, bs, 1) = rng.matrix(bs, 1);
    }
    b *= actuation;

    Matrix q = Matrix::Zero(m, m);
    for (int i = 0; i < blocks; ++i) {
        q.block(i * bs, i * bs, bs, bs) = rng.spd(bs, 0.3);
    }
    Matrix r = Matrix::Zero(blocks, blocks);
    for (int i = 0; i < blocks; ++i) r(i, i) = 0.5 + std::abs(rng.draw());
    r *= actuation * actuation;

    return RingSystem{LqrProblem(a, b, q, r, TimeDomain::Continuous),
                      BlockPartition(std::vector<Eigen::Index>(blocks, 1))};
}

// Deterministic unit-norm perturbation direction for local-order runs.
inline Matrix perturbation(std::uint64_t seed, Eigen::Index rows,
                           Eigen::Index cols) {
    oracles::TestRng rng(seed * 53 + 2);
    Matrix d = rng.matrix(rows, cols);
    return d / d.norm();
}

} // namespace fixtures

#include "splitlqr/generator.hpp"

#include <random>
#include <string>

#include "splitlqr/split_iteration.hpp"

namespace splitlqr {

namespace {

// mt19937_64 output mapped to [-1, 1]; kept free of std::distribution types
// so that streams are identical across standard library implementations.
class UniformSource {
public:
    explicit UniformSource(std::uint64_t seed) : engine_(seed) {}

    double draw() {
        return 2.0 * (static_cast<double>(engine_() >> 11) * 0x1.0p-53) - 1.0;
    }

    Matrix matrix(Eigen::Index rows, Eigen::Index cols) {
        Matrix m(rows, cols);
        for (Eigen::Index i = 0; i < rows; ++i) {
            for (Eigen::Index j = 0; j < cols; ++j) m(i, j) = draw();
        }
        return m;
    }

private:
    std::mt19937_64 engine_;
};

void validate_spec(const GeneratorSpec& spec) {
    if (spec.state_blocks.empty() ||
        spec.state_blocks.size() != spec.input_blocks.size()) {
        throw GenerationFailed("state and input block lists must be nonempty "
                               "and of equal length");
    }
    for (std::size_t i = 0; i < spec.state_blocks.size(); ++i) {
        if (spec.state_blocks[i] < 1 || spec.input_blocks[i] < 1) {
            throw GenerationFailed("all block sizes must be >= 1");
        }
        if (spec.input_blocks[i] > spec.state_blocks[i]) {
            throw GenerationFailed(
                "input block " + std::to_string(i + 1) +
                " is wider than its state block; its actuation cannot have "
                "full column rank");
        }
    }
    if (spec.coupling < 0.0) {
        throw GenerationFailed("coupling must be nonnegative");
    }
    if (spec.stability_margin <= 0.0) {
        throw GenerationFailed("stability margin must be positive");
    }
}

Matrix stabilized_block(Matrix block, TimeDomain domain, double margin) {
    if (domain == TimeDomain::Continuous) {
        const double shift = spectral_abscissa(block) + margin;
        if (shift > 0.0) {
            block -= shift * Matrix::Identity(block.rows(), block.cols());
        }
        return block;
    }
    const double radius = spectral_radius(block);
    if (radius > 1.0 - margin) {
        block *= (1.0 - margin) / radius;
    }
    return block;
}

bool full_column_rank(const Matrix& b) {
    Eigen::JacobiSVD<Matrix> svd(b);
    const auto& sv = svd.singularValues();
    return sv.size() > 0 && sv(sv.size() - 1) > 1e-3 * sv(0);
}

} // namespace

ProblemBundle generate_coupled_system(const GeneratorSpec& spec) {
    validate_spec(spec);

    const BlockPartition states(spec.state_blocks);
    const BlockPartition inputs(spec.input_blocks);
    const Eigen::Index m = states.total();
    const Eigen::Index r = inputs.total();
    const Eigen::Index n = states.subsystems();

    UniformSource rng(spec.seed);
    const int max_attempts = 64;
    for (int attempt = 0; attempt < max_attempts; ++attempt) {
        Matrix a = Matrix::Zero(m, m);
        for (Eigen::Index i = 0; i < n; ++i) {
            Matrix block = rng.matrix(states.size(i), states.size(i));
            if (spec.coupling == 0.0) {
                block = stabilized_block(std::move(block), spec.domain,
                                         spec.stability_margin);
            }
            a.block(states.offset(i), states.offset(i), states.size(i),
                    states.size(i)) = block;
        }
        Matrix couple = rng.matrix(m, m);
        for (Eigen::Index i = 0; i < n; ++i) {
            couple.block(states.offset(i), states.offset(i), states.size(i),
                         states.size(i)).setZero();
        }
        a += spec.coupling * couple;

        Matrix b = Matrix::Zero(m, r);
        bool rank_ok = true;
        for (Eigen::Index i = 0; i < n; ++i) {
            const Matrix block = rng.matrix(states.size(i), inputs.size(i));
            rank_ok = rank_ok && full_column_rank(block);
            b.block(states.offset(i), inputs.offset(i), states.size(i),
                    inputs.size(i)) = block;
        }
        if (!rank_ok) continue;

        Matrix q = Matrix::Zero(m, m);
        for (Eigen::Index i = 0; i < n; ++i) {
            const Matrix g = rng.matrix(states.size(i), states.size(i));
            q.block(states.offset(i), states.offset(i), states.size(i),
                    states.size(i)) =
                g.transpose() * g +
                spec.stability_margin *
                    Matrix::Identity(states.size(i), states.size(i));
        }
        Matrix rr = Matrix::Zero(r, r);
        for (Eigen::Index i = 0; i < n; ++i) {
            const Matrix g = rng.matrix(inputs.size(i), inputs.size(i));
            rr.block(inputs.offset(i), inputs.offset(i), inputs.size(i),
                     inputs.size(i)) =
                g.transpose() * g +
                spec.stability_margin *
                    Matrix::Identity(inputs.size(i), inputs.size(i));
        }

        LqrProblem problem(a, b, q, rr, spec.domain);
        if (!is_controllable(problem.A(), problem.B())) continue;

        const Feedback zero = Feedback::zero(r, m);
        bool updatable = true;
        for (Eigen::Index i = 0; i < n && updatable; ++i) {
            updatable = subsystem_updatable(problem, inputs, zero, i);
        }
        if (!updatable) continue;

        return ProblemBundle{std::move(problem), inputs, states};
    }
    throw GenerationFailed("no admissible system found for this spec within " +
                           std::to_string(max_attempts) + " attempts");
}

} // namespace splitlqr

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>

#include "fixtures.hpp"
#include "oracles.hpp"
#include "splitlqr/experiment.hpp"

using namespace splitlqr;
namespace fs = std::filesystem;

// Regression value for the (seed 42, eps 0.1, discrete 2+2/1+1) fixture,
// recorded from the first computation.
constexpr double SPLITLQR_SEED42_RHO = 4.296105263047e-04;

namespace {

GeneratorSpec two_block_spec(TimeDomain domain, std::uint64_t seed,
                             double coupling) {
    GeneratorSpec spec;
    spec.state_blocks = {2, 2};
    spec.input_blocks = {1, 1};
    spec.coupling = coupling;
    spec.domain = domain;
    spec.seed = seed;
    return spec;
}

struct TempDir {
    fs::path path;
    explicit TempDir(const std::string& name)
        : path(fs::temp_directory_path() / name) {
        fs::remove_all(path);
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
};

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    REQUIRE(in.good());
    return std::string(std::istreambuf_iterator<char>(in), {});
}

void spit(const fs::path& p, const std::string& text) {
    std::ofstream out(p, std::ios::binary);
    out << text;
}

} // namespace

TEST_CASE("generator") {
    SUBCASE("zero coupling gives exactly block-diagonal dynamics") {
        const ProblemBundle bundle = generate_coupled_system(
            two_block_spec(TimeDomain::Discrete, 5, 0.0));
        Matrix off = bundle.problem.A();
        off.topLeftCorner(2, 2).setZero();
        off.bottomRightCorner(2, 2).setZero();
        CHECK(off.norm() == 0.0);

        // the full value matrix decouples too
        const ValueMatrix p = solve_riccati(bundle.problem);
        CHECK(p.matrix().topRightCorner(2, 2).norm() <=
              1e-9 * p.matrix().norm());
    }

    SUBCASE("the same seed reproduces the problem bit for bit") {
        const GeneratorSpec spec = two_block_spec(TimeDomain::Continuous, 42,
                                                  0.1);
        const ProblemBundle a = generate_coupled_system(spec);
        const ProblemBundle b = generate_coupled_system(spec);
        CHECK(a.problem.A() == b.problem.A());
        CHECK(a.problem.B() == b.problem.B());
        CHECK(a.problem.Q() == b.problem.Q());
        CHECK(a.problem.R() == b.problem.R());
        CHECK(problem_file_text(a) == problem_file_text(b));
    }

    SUBCASE("generated systems admit the split iteration") {
        const ProblemBundle bundle = generate_coupled_system(
            two_block_spec(TimeDomain::Discrete, 42, 0.1));
        const SolveReport report = run_split_iteration(
            bundle.problem, bundle.input_partition, Feedback::zero(2, 4), {});
        CHECK(report.status == TerminationReason::Converged);
        const ValueMatrix p = solve_riccati(bundle.problem);
        const RateReport rate =
            rate_matrix_cycle(bundle.problem, bundle.input_partition, p);
        CHECK(rate.spectral_radius < 1.0);
        // regression fixture, recorded from the first computation
        CHECK(rate.spectral_radius ==
              doctest::Approx(SPLITLQR_SEED42_RHO).epsilon(1e-6));
    }

    SUBCASE("degenerate specs fail loudly") {
        GeneratorSpec wide = two_block_spec(TimeDomain::Discrete, 1, 0.1);
        wide.input_blocks = {3, 1}; // wider than its 2-state block
        CHECK_THROWS_AS(generate_coupled_system(wide), GenerationFailed);

        GeneratorSpec negative = two_block_spec(TimeDomain::Discrete, 1, -0.5);
        CHECK_THROWS_AS(generate_coupled_system(negative), GenerationFailed);
    }
}

TEST_CASE("matrix text form") {
    const Matrix m = parse_matrix_text("0,1;0,0");
    CHECK(m.rows() == 2);
    CHECK(m(0, 1) == 1.0);

    oracles::TestRng rng(9);
    const Matrix random = rng.matrix(3, 5);
    CHECK(parse_matrix_text(format_matrix_text(random)) == random);

    CHECK_THROWS_AS(parse_matrix_text("1,2;3"), ParseError);
    CHECK_THROWS_AS(parse_matrix_text("1,zebra"), ParseError);
}

TEST_CASE("problem files") {
    TempDir dir("splitlqr_io_test");

    SUBCASE("save and load round-trip exactly") {
        const ProblemBundle bundle = generate_coupled_system(
            two_block_spec(TimeDomain::Discrete, 77, 0.2));
        const fs::path file = dir.path / "problem.txt";
        save_problem(bundle, file);
        const ProblemBundle loaded = load_problem(file);
        CHECK(loaded.problem.A() == bundle.problem.A());
        CHECK(loaded.problem.B() == bundle.problem.B());
        CHECK(loaded.problem.Q() == bundle.problem.Q());
        CHECK(loaded.problem.R() == bundle.problem.R());
        CHECK(loaded.problem.domain() == TimeDomain::Discrete);
        CHECK(loaded.input_partition == bundle.input_partition);
        CHECK(loaded.state_partition == bundle.state_partition);
    }

    SUBCASE("inconsistent block sums are rejected") {
        const fs::path file = dir.path / "bad.txt";
        spit(file, "domain: discrete\n"
                   "state_blocks: 1,1\n"
                   "input_blocks: 2,1\n"
                   "A: 1,0;0,1\n"
                   "B: 1,0;0,1\n"
                   "Q: 1,0;0,1\n"
                   "R: 1,0;0,1\n");
        CHECK_THROWS_AS(load_problem(file), DimensionMismatch);
    }

    SUBCASE("missing keys and malformed lines are parse errors") {
        const fs::path file = dir.path / "missing.txt";
        spit(file, "domain: discrete\nstate_blocks: 2\n");
        CHECK_THROWS_AS(load_problem(file), ParseError);
        spit(file, "domain discrete\n");
        CHECK_THROWS_AS(load_problem(file), ParseError);
    }

    SUBCASE("a hand-written two-subsystem fixture drives the block forms") {
        // the worked two-subsystem layout: 2+2 states, 2+2 inputs, block
        // costs; the first subproblem folds the second block row into A
        const fs::path file = dir.path / "two.txt";
        spit(file,
             "domain: continuous\n"
             "state_blocks: 2,2\n"
             "input_blocks: 2,2\n"
             "A: 0.5,1,0.2,0;0,-.5,0,0.2;0.1,0,-1,1;0,0.1,0,-1\n"
             "B: 1,0,0.3,0;0,1,0,0.3;0.2,0,1,0;0,0.2,0,1\n"
             "Q: 2,0,0,0;0,2,0,0;0,0,3,0;0,0,0,3\n"
             "R: 1,0,0,0;0,1,0,0;0,0,2,0;0,0,0,2\n");
        const ProblemBundle b = load_problem(file);
        oracles::TestRng rng(13);
        const Feedback f(rng.matrix(4, 4));
        const SubproblemMatrices sub =
            build_subproblem(b.problem, b.input_partition, f, 0);
        const Matrix a1 = b.problem.A() +
                          b.problem.B().rightCols(2) * f.gain().bottomRows(2);
        const Matrix q1 = b.problem.Q() +
                          f.gain().bottomRows(2).transpose() *
                              b.problem.R().bottomRightCorner(2, 2) *
                              f.gain().bottomRows(2);
        CHECK((sub.A - a1).norm() <= 1e-14 * (1.0 + a1.norm()));
        CHECK((sub.Q - q1).norm() <= 1e-14 * (1.0 + q1.norm()));
        CHECK(sub.B == b.problem.B().leftCols(2));
        CHECK(sub.R == b.problem.R().topLeftCorner(2, 2));
    }
}

TEST_CASE("trace CSV") {
    const ProblemBundle bundle = generate_coupled_system(
        two_block_spec(TimeDomain::Discrete, 11, 0.2));
    const SolveReport a = run_split_iteration(
        bundle.problem, bundle.input_partition, Feedback::zero(2, 4), {});
    const SolveReport b = run_split_iteration(
        bundle.problem, bundle.input_partition, Feedback::zero(2, 4), {});

    const std::string csv = trace_csv_text(a.trace);
    CHECK(csv == trace_csv_text(b.trace)); // byte-identical reruns
    CHECK(csv.rfind("sweep,subsystem,frobenius_change_F,full_ARE_residual,"
                    "min_eig_P_decrement,stabilizing\n", 0) == 0);
    CHECK(csv.find("\n1,1,") != std::string::npos);
    // first record has no predecessor value matrix
    CHECK(csv.find(",nan,") != std::string::npos);
}

TEST_CASE("experiment configs") {
    TempDir dir("splitlqr_cfg_test");

    SUBCASE("generator config parses") {
        const fs::path file = dir.path / "gen.cfg";
        spit(file, "# experiment\n"
                   "domain: discrete\n"
                   "state_blocks: 2,2\n"
                   "input_blocks: 1,1\n"
                   "epsilon: 0.1\n"
                   "seed: 42\n"
                   "max_sweeps: 400\n"
                   "order: 2,1\n");
        const ExperimentConfig config = load_experiment_config(file);
        REQUIRE(config.generator.has_value());
        CHECK(config.generator->coupling == 0.1);
        CHECK(config.generator->seed == 42);
        CHECK(config.run.max_sweeps == 400);
        CHECK(config.order == std::vector<int>{1, 0});
    }

    SUBCASE("unknown keys and mixed sources are rejected") {
        const fs::path file = dir.path / "bad.cfg";
        spit(file, "domain: discrete\nstate_blocks: 2\ninput_blocks: 1\n"
                   "seed: 1\nwibble: 3\n");
        CHECK_THROWS_AS(load_experiment_config(file), ParseError);
        spit(file, "problem: somewhere.txt\nseed: 3\n");
        CHECK_THROWS_AS(load_experiment_config(file), ParseError);
        spit(file, "tol: 1e-9\n");
        CHECK_THROWS_AS(load_experiment_config(file), ParseError);
    }
}

TEST_CASE("experiment runs") {
    TempDir dir("splitlqr_exp_test");

    SUBCASE("decoupled discrete experiment: zero radius, one sweep") {
        ExperimentConfig config;
        config.generator = two_block_spec(TimeDomain::Discrete, 8, 0.0);
        const ExperimentResult result =
            run_experiment(config, dir.path / "decoupled");
        CHECK(result.exit_status == exit_code::ok);
        CHECK(result.summary["sweeps"] == 1);
        CHECK(result.summary["converged"] == true);
        CHECK(result.summary["spectral_radius"].get<double>() <= 1e-10);
        CHECK(fs::exists(dir.path / "decoupled" / "trace.csv"));
        CHECK(fs::exists(dir.path / "decoupled" / "summary.json"));
        CHECK(fs::exists(dir.path / "decoupled" / "problem.txt"));
    }

    SUBCASE("single subsystem reports single-sweep optimality") {
        ExperimentConfig config;
        GeneratorSpec spec;
        spec.state_blocks = {3};
        spec.input_blocks = {2};
        spec.coupling = 0.0;
        spec.domain = TimeDomain::Continuous;
        spec.seed = 4;
        config.generator = spec;
        const ExperimentResult result =
            run_experiment(config, dir.path / "single");
        CHECK(result.exit_status == exit_code::ok);
        CHECK(result.summary["sweeps"] == 1);
        CHECK(result.summary["reference_check"] == true);
    }

    SUBCASE("identical configs produce byte-identical artifacts") {
        ExperimentConfig config;
        config.generator = two_block_spec(TimeDomain::Discrete, 12, 0.1);
        run_experiment(config, dir.path / "a");
        run_experiment(config, dir.path / "b");
        CHECK(slurp(dir.path / "a" / "trace.csv") ==
              slurp(dir.path / "b" / "trace.csv"));
        CHECK(slurp(dir.path / "a" / "problem.txt") ==
              slurp(dir.path / "b" / "problem.txt"));
        CHECK(slurp(dir.path / "a" / "summary.json") ==
              slurp(dir.path / "b" / "summary.json"));
    }

    SUBCASE("an exhausted sweep budget exits with the convergence code") {
        ExperimentConfig config;
        config.generator = two_block_spec(TimeDomain::Discrete, 13, 0.3);
        config.run.max_sweeps = 1;
        const ExperimentResult result =
            run_experiment(config, dir.path / "budget");
        CHECK(result.exit_status == exit_code::convergence);
        CHECK(result.summary["converged"] == false);
    }

    SUBCASE("an unreachable cross-check tolerance is a verification failure") {
        ExperimentConfig config;
        config.generator = two_block_spec(TimeDomain::Discrete, 14, 0.1);
        config.check_tol = 1e-16;
        const ExperimentResult result =
            run_experiment(config, dir.path / "strict");
        CHECK(result.exit_status == exit_code::verification);
        CHECK(result.summary["pass"] == false);
    }

    SUBCASE("a continuous local-order experiment fits a quadratic order") {
        // problem and starting feedback staged as files, as the CLI would
        const fixtures::RingSystem ring = fixtures::ring_system(6, 0.5, 240.0);
        std::vector<Eigen::Index> state_sizes(4, 2);
        const ProblemBundle bundle{ring.problem, ring.partition,
                                   BlockPartition(state_sizes)};
        const fs::path problem_file = dir.path / "ring.txt";
        save_problem(bundle, problem_file);

        Tolerances tight;
        tight.riccati = 1e-13;
        const Feedback f_opt =
            optimal_feedback(solve_riccati(ring.problem, {}, tight),
                             ring.problem);
        const Matrix f0 =
            f_opt.gain() + 9.5e-3 * fixtures::perturbation(6, 4, 8);
        const fs::path f0_file = dir.path / "f0.txt";
        spit(f0_file, format_matrix_text(f0) + "\n");

        ExperimentConfig config;
        config.problem_path = problem_file;
        config.f0_path = f0_file;
        config.run.tol_feedback = 1e-13;
        config.run.tol_residual = 1e-12;
        config.run.tolerances = tight;
        config.expected_order = {{1.7, 2.3}};
        const ExperimentResult result =
            run_experiment(config, dir.path / "order");
        CHECK(result.exit_status == exit_code::ok);
        CHECK(result.summary["order_check"] == true);
        const double fitted = result.summary["fitted_order"].get<double>();
        CHECK(fitted >= 1.7);
        CHECK(fitted <= 2.3);
    }
}

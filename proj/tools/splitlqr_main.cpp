// Command-line front end: solve, iterate, rate, experiment, check-identities.

#include <cstdint>
#include <iostream>
#include <random>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "splitlqr/experiment.hpp"

namespace {

using nlohmann::ordered_json;
using namespace splitlqr;

LqrProblem with_domain(const LqrProblem& problem, const std::string& domain) {
    if (domain.empty()) return problem;
    TimeDomain d;
    if (domain == "continuous") {
        d = TimeDomain::Continuous;
    } else if (domain == "discrete") {
        d = TimeDomain::Discrete;
    } else {
        throw ParseError("--domain must be 'continuous' or 'discrete'");
    }
    return LqrProblem(problem.A(), problem.B(), problem.Q(), problem.R(), d);
}

int cmd_solve(const std::string& problem_path, const std::string& domain) {
    const ProblemBundle bundle = load_problem(problem_path);
    const LqrProblem problem = with_domain(bundle.problem, domain);
    Tolerances tol;
    tol.riccati = 1e-12;
    const ValueMatrix p = solve_riccati(problem, {}, tol);
    const Feedback f = optimal_feedback(p, problem);

    ordered_json out;
    out["domain"] = problem.domain() == TimeDomain::Continuous ? "continuous"
                                                               : "discrete";
    out["residual"] = riccati_residual(p, problem);
    out["stabilizing"] = is_stabilizing(problem, f);
    out["P"] = format_matrix_text(p.matrix());
    out["F"] = format_matrix_text(f.gain());
    std::cout << out.dump(2) << "\n";
    return exit_code::ok;
}

int cmd_iterate(const std::string& problem_path, const std::string& order,
                const std::string& f0, double tol, int max_sweeps,
                const std::string& trace_path) {
    const ProblemBundle bundle = load_problem(problem_path);

    RunOptions options;
    options.max_sweeps = max_sweeps;
    options.tol_feedback = tol;
    if (!order.empty()) options.order = parse_order_text(order);

    std::optional<Feedback> given;
    if (!f0.empty() && f0 != "zero") given = Feedback(load_matrix_file(f0));
    const Feedback start =
        initial_feedback(bundle.problem, bundle.input_partition, given);

    const SolveReport report = run_split_iteration(
        bundle.problem, bundle.input_partition, start, options);
    if (!trace_path.empty()) write_trace_csv(report.trace, trace_path);

    ordered_json out;
    out["converged"] = report.status == TerminationReason::Converged;
    out["sweeps"] = report.sweeps;
    if (!report.trace.records.empty()) {
        out["final_residual"] =
            report.trace.records.back().full_riccati_residual;
    }
    out["F"] = format_matrix_text(report.final_feedback.gain());
    if (!report.message.empty()) out["message"] = report.message;
    std::cout << out.dump(2) << "\n";
    return report.status == TerminationReason::Converged
               ? exit_code::ok
               : exit_code::convergence;
}

int cmd_rate(const std::string& problem_path, const std::string& order) {
    const ProblemBundle bundle = load_problem(problem_path);
    if (bundle.problem.domain() != TimeDomain::Discrete) {
        throw ParseError("rate analysis needs a discrete-time problem; the "
                         "continuous-time sweep linearization vanishes");
    }
    Tolerances tol;
    tol.riccati = 1e-12;
    const ValueMatrix p = solve_riccati(bundle.problem, {}, tol);
    std::vector<int> cycle;
    if (!order.empty()) cycle = parse_order_text(order);
    const RateReport report =
        rate_matrix_cycle(bundle.problem, bundle.input_partition, p, cycle);

    ordered_json out;
    out["spectral_radius"] = report.spectral_radius;
    out["cycle_operator_norm"] = report.operator_norm;
    ordered_json norms = ordered_json::array();
    for (const Matrix& jac : report.subsystem_jacobians) {
        norms.push_back(jac.norm());
    }
    out["subsystem_jacobian_norms"] = norms;
    ordered_json ord = ordered_json::array();
    for (const int i : report.order) ord.push_back(i + 1);
    out["order"] = ord;
    std::cout << out.dump(2) << "\n";
    return exit_code::ok;
}

int cmd_experiment(const std::string& config_path, const std::string& out_dir) {
    const ExperimentConfig config = load_experiment_config(config_path);
    const ExperimentResult result = run_experiment(config, out_dir);
    std::cout << result.summary.dump(2) << "\n";
    return result.exit_status;
}

int cmd_check_identities(int seeds) {
    double worst_rel = 0.0;
    std::uint64_t worst_seed = 0;
    for (int s = 1; s <= seeds; ++s) {
        std::mt19937_64 engine(static_cast<std::uint64_t>(s));
        const auto draw = [&] {
            return 2.0 * (static_cast<double>(engine() >> 11) * 0x1.0p-53) -
                   1.0;
        };
        const auto draw_matrix = [&](Eigen::Index rows, Eigen::Index cols) {
            Matrix m(rows, cols);
            for (Eigen::Index i = 0; i < rows; ++i) {
                for (Eigen::Index j = 0; j < cols; ++j) m(i, j) = draw();
            }
            return m;
        };

        const Eigen::Index blocks = 1 + static_cast<Eigen::Index>(engine() % 3);
        std::vector<Eigen::Index> sizes;
        for (Eigen::Index b = 0; b < blocks; ++b) {
            sizes.push_back(1 + static_cast<Eigen::Index>(engine() % 3));
        }
        const BlockPartition partition(sizes);
        const Eigen::Index r = partition.total();

        Matrix rmat = Matrix::Zero(r, r);
        for (Eigen::Index b = 0; b < blocks; ++b) {
            const Matrix g = draw_matrix(partition.size(b), partition.size(b));
            rmat.block(partition.offset(b), partition.offset(b),
                       partition.size(b), partition.size(b)) =
                g.transpose() * g +
                0.3 * Matrix::Identity(partition.size(b), partition.size(b));
        }
        const Matrix gs = draw_matrix(r, r);
        const Matrix smat =
            gs.transpose() * gs + 0.3 * Matrix::Identity(r, r);
        const Eigen::Index i = static_cast<Eigen::Index>(
            engine() % static_cast<std::uint64_t>(blocks));

        const TechIdentityResiduals res =
            verify_tech_identities(rmat, smat, partition, i);
        const double scale = 1.0 + (rmat + smat).norm();
        const double rel = std::max({res.quadratic_identity,
                                     res.decomposition_identity,
                                     res.aggregate_gap}) /
                           scale;
        if (rel > worst_rel) {
            worst_rel = rel;
            worst_seed = static_cast<std::uint64_t>(s);
        }
    }

    const bool ok = worst_rel <= 1e-12;
    ordered_json out;
    out["seeds"] = seeds;
    out["worst_relative_residual"] = worst_rel;
    out["worst_seed"] = worst_seed;
    out["pass"] = ok;
    std::cout << out.dump(2) << "\n";
    return ok ? exit_code::ok : exit_code::verification;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Split optimal policy iteration for coupled LQR problems"};
    app.require_subcommand(1);

    std::string problem_path, domain, order, f0 = "zero", trace_path;
    std::string config_path, out_dir = ".";
    double tol = 1e-10;
    int max_sweeps = 500;
    int seeds = 100;

    auto* solve = app.add_subcommand("solve", "Full-problem Riccati reference");
    solve->add_option("--problem", problem_path, "problem file")->required();
    solve->add_option("--domain", domain, "override the file's time domain");

    auto* iterate =
        app.add_subcommand("iterate", "Run the split policy iteration");
    iterate->add_option("--problem", problem_path, "problem file")->required();
    iterate->add_option("--order", order, "sweep order, e.g. 2,1 (1-based)");
    iterate->add_option("--f0", f0, "'zero' or a feedback matrix file");
    iterate->add_option("--tol", tol, "relative feedback tolerance");
    iterate->add_option("--max-sweeps", max_sweeps, "sweep budget");
    iterate->add_option("--trace", trace_path, "write the update trace CSV");

    auto* rate =
        app.add_subcommand("rate", "Sweep linearization at the optimum");
    rate->add_option("--problem", problem_path, "problem file")->required();
    rate->add_option("--order", order, "sweep order (1-based)");

    auto* experiment =
        app.add_subcommand("experiment", "End-to-end seeded experiment");
    experiment->add_option("--config", config_path, "config file")->required();
    experiment->add_option("--out", out_dir, "output directory");

    auto* check = app.add_subcommand("check-identities",
                                     "Fuzz the block-projection identities");
    check->add_option("--seeds", seeds, "number of random draws");

    CLI11_PARSE(app, argc, argv);

    try {
        if (solve->parsed()) return cmd_solve(problem_path, domain);
        if (iterate->parsed()) {
            return cmd_iterate(problem_path, order, f0, tol, max_sweeps,
                               trace_path);
        }
        if (rate->parsed()) return cmd_rate(problem_path, order);
        if (experiment->parsed()) return cmd_experiment(config_path, out_dir);
        if (check->parsed()) return cmd_check_identities(seeds);
    } catch (const ParseError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return exit_code::config;
    } catch (const IoError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return exit_code::config;
    } catch (const GenerationFailed& e) {
        std::cerr << "error: " << e.what() << "\n";
        return exit_code::config;
    } catch (const DimensionMismatch& e) {
        std::cerr << "error: " << e.what() << "\n";
        return exit_code::config;
    } catch (const NoConvergence& e) {
        std::cerr << "error: " << e.what() << "\n";
        return exit_code::convergence;
    } catch (const NotStabilizable& e) {
        std::cerr << "error: " << e.what() << "\n";
        return exit_code::convergence;
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return exit_code::verification;
    }
    return exit_code::config;
}

#pragma once

#include <filesystem>
#include <optional>
#include <string>

#include <json.hpp>

#include "splitlqr/problem_io.hpp"
#include "splitlqr/rate_analysis.hpp"

namespace splitlqr {

/// Process exit codes shared by the experiment runner and the CLI.
namespace exit_code {
constexpr int ok = 0;
constexpr int config = 2;      ///< parse, config, generation and I/O errors
constexpr int convergence = 3; ///< the iteration did not converge
constexpr int verification = 4;///< a requested check failed its tolerance
} // namespace exit_code

/// A full experiment: where the problem comes from, how the iteration runs,
/// which artifacts to emit, and which claims to verify.
struct ExperimentConfig {
    std::optional<std::filesystem::path> problem_path;
    std::optional<GeneratorSpec> generator;

    std::vector<int> order;                       ///< empty = ascending
    std::optional<std::filesystem::path> f0_path; ///< empty = zero feedback
    RunOptions run;

    /// Relative tolerance of the final-feedback cross-check against the
    /// full-problem Riccati reference.
    double check_tol = 1e-7;

    bool want_trace = true;
    std::string trace_name = "trace.csv";
    bool want_rate = true; ///< effective for discrete problems only
    bool want_order_fit = true;
    double window_lo = 1e-10;
    double window_hi = 1e-2;
    bool save_problem_copy = true;
    std::string problem_name = "problem.txt";

    std::optional<std::pair<double, double>> expected_order;
    std::optional<double> rate_match_band;
};

ExperimentConfig load_experiment_config(const std::filesystem::path& path);

struct ExperimentResult {
    int exit_status = exit_code::ok;
    nlohmann::ordered_json summary;
};

/// Runs generation/loading, the split iteration, the full-problem reference
/// solve and the requested analyses; writes the artifacts into out_dir and
/// returns the summary. The summary is also written as summary.json.
ExperimentResult run_experiment(const ExperimentConfig& config,
                                const std::filesystem::path& out_dir);

} // namespace splitlqr

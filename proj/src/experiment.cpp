#include "splitlqr/experiment.hpp"

#include <cmath>
#include <fstream>
#include <map>
#include <sstream>

namespace splitlqr {

namespace {

void write_summary(const nlohmann::ordered_json& summary,
                   const std::filesystem::path& out_dir) {
    std::ofstream out(out_dir / "summary.json", std::ios::binary);
    if (!out) {
        throw IoError("cannot write '" + (out_dir / "summary.json").string() +
                      "'");
    }
    out << summary.dump(2) << "\n";
}

std::string trim_copy(const std::string& s) {
    const auto begin = s.find_first_not_of(" \t\r");
    if (begin == std::string::npos) return {};
    const auto end = s.find_last_not_of(" \t\r");
    return s.substr(begin, end - begin + 1);
}

bool parse_bool(const std::string& value, const std::string& key) {
    if (value == "true" || value == "1" || value == "yes") return true;
    if (value == "false" || value == "0" || value == "no") return false;
    throw ParseError("config key '" + key + "': expected a boolean, got '" +
                     value + "'");
}

double parse_double_cfg(const std::string& value, const std::string& key) {
    try {
        std::size_t used = 0;
        const double v = std::stod(value, &used);
        if (trim_copy(value.substr(used)).empty()) return v;
    } catch (const std::exception&) {
    }
    throw ParseError("config key '" + key + "': expected a number, got '" +
                     value + "'");
}

long parse_long_cfg(const std::string& value, const std::string& key) {
    try {
        std::size_t used = 0;
        const long v = std::stol(value, &used);
        if (trim_copy(value.substr(used)).empty()) return v;
    } catch (const std::exception&) {
    }
    throw ParseError("config key '" + key + "': expected an integer, got '" +
                     value + "'");
}

std::vector<Eigen::Index> parse_blocks_cfg(const std::string& value,
                                           const std::string& key) {
    std::vector<Eigen::Index> blocks;
    std::string token;
    std::istringstream in(value);
    while (std::getline(in, token, ',')) {
        blocks.push_back(
            static_cast<Eigen::Index>(parse_long_cfg(trim_copy(token), key)));
    }
    if (blocks.empty()) throw ParseError("config key '" + key + "' is empty");
    return blocks;
}

} // namespace

ExperimentConfig load_experiment_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open '" + path.string() + "'");

    std::map<std::string, std::string> kv;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        line = trim_copy(line);
        if (line.empty()) continue;
        const auto colon = line.find(':');
        if (colon == std::string::npos) {
            throw ParseError(path.string() + ":" + std::to_string(lineno) +
                             ": expected 'key: value'");
        }
        const std::string key = trim_copy(line.substr(0, colon));
        if (kv.count(key)) {
            throw ParseError(path.string() + ":" + std::to_string(lineno) +
                             ": duplicate key '" + key + "'");
        }
        kv[key] = trim_copy(line.substr(colon + 1));
    }

    ExperimentConfig config;
    GeneratorSpec gen;
    bool has_gen_field = false;

    const auto take = [&](const char* key) -> std::optional<std::string> {
        const auto it = kv.find(key);
        if (it == kv.end()) return std::nullopt;
        std::string value = it->second;
        kv.erase(it);
        return value;
    };

    if (const auto v = take("problem")) config.problem_path = *v;
    if (const auto v = take("domain")) {
        has_gen_field = true;
        if (*v == "continuous") {
            gen.domain = TimeDomain::Continuous;
        } else if (*v == "discrete") {
            gen.domain = TimeDomain::Discrete;
        } else {
            throw ParseError("config key 'domain': expected 'continuous' or "
                             "'discrete', got '" + *v + "'");
        }
    }
    if (const auto v = take("state_blocks")) {
        has_gen_field = true;
        gen.state_blocks = parse_blocks_cfg(*v, "state_blocks");
    }
    if (const auto v = take("input_blocks")) {
        has_gen_field = true;
        gen.input_blocks = parse_blocks_cfg(*v, "input_blocks");
    }
    if (const auto v = take("epsilon")) {
        has_gen_field = true;
        gen.coupling = parse_double_cfg(*v, "epsilon");
    }
    if (const auto v = take("seed")) {
        has_gen_field = true;
        gen.seed = static_cast<std::uint64_t>(parse_long_cfg(*v, "seed"));
    }
    if (const auto v = take("stability_margin")) {
        has_gen_field = true;
        gen.stability_margin = parse_double_cfg(*v, "stability_margin");
    }

    if (config.problem_path && has_gen_field) {
        throw ParseError("config mixes 'problem' with generator keys; use one "
                         "problem source");
    }
    if (!config.problem_path) {
        if (!has_gen_field) {
            throw ParseError("config needs either 'problem' or generator keys");
        }
        config.generator = gen;
    }

    if (const auto v = take("order")) config.order = parse_order_text(*v);
    if (const auto v = take("f0")) {
        if (*v != "zero") config.f0_path = *v;
    }
    if (const auto v = take("tol")) {
        config.run.tol_feedback = parse_double_cfg(*v, "tol");
    }
    if (const auto v = take("tol_residual")) {
        config.run.tol_residual = parse_double_cfg(*v, "tol_residual");
    }
    if (const auto v = take("max_sweeps")) {
        config.run.max_sweeps = static_cast<int>(parse_long_cfg(*v, "max_sweeps"));
    }
    if (const auto v = take("check_tol")) {
        config.check_tol = parse_double_cfg(*v, "check_tol");
    }
    if (const auto v = take("trace_csv")) {
        if (*v == "none") {
            config.want_trace = false;
        } else {
            config.trace_name = *v;
        }
    }
    if (const auto v = take("rate_report")) {
        config.want_rate = parse_bool(*v, "rate_report");
    }
    if (const auto v = take("order_fit")) {
        config.want_order_fit = parse_bool(*v, "order_fit");
    }
    if (const auto v = take("window_lo")) {
        config.window_lo = parse_double_cfg(*v, "window_lo");
    }
    if (const auto v = take("window_hi")) {
        config.window_hi = parse_double_cfg(*v, "window_hi");
    }
    if (const auto v = take("save_problem")) {
        if (*v == "none") {
            config.save_problem_copy = false;
        } else {
            config.problem_name = *v;
        }
    }
    if (const auto v = take("expect_order_min")) {
        const double lo = parse_double_cfg(*v, "expect_order_min");
        const auto hi = take("expect_order_max");
        if (!hi) {
            throw ParseError("expect_order_min needs expect_order_max");
        }
        config.expected_order = {lo, parse_double_cfg(*hi, "expect_order_max")};
    } else if (kv.count("expect_order_max")) {
        throw ParseError("expect_order_max needs expect_order_min");
    }
    if (const auto v = take("expect_rate_band")) {
        config.rate_match_band = parse_double_cfg(*v, "expect_rate_band");
    }

    if (!kv.empty()) {
        throw ParseError(path.string() + ": unknown config key '" +
                         kv.begin()->first + "'");
    }
    if (config.run.tol_feedback <= 0.0 || config.run.tol_residual <= 0.0 ||
        config.check_tol <= 0.0) {
        throw ParseError("tolerances must be positive");
    }
    if (config.run.max_sweeps < 1) {
        throw ParseError("max_sweeps must be at least 1");
    }
    return config;
}

ExperimentResult run_experiment(const ExperimentConfig& config,
                                const std::filesystem::path& out_dir) {
    ExperimentResult result;
    nlohmann::ordered_json& summary = result.summary;
    summary["pass"] = false;

    std::error_code ec;
    std::filesystem::create_directories(out_dir, ec);
    if (ec) {
        throw IoError("cannot create output directory '" + out_dir.string() +
                      "'");
    }

    // problem acquisition
    ProblemBundle bundle = [&] {
        if (config.problem_path) return load_problem(*config.problem_path);
        return generate_coupled_system(*config.generator);
    }();
    const LqrProblem& problem = bundle.problem;
    const bool discrete = problem.domain() == TimeDomain::Discrete;

    summary["domain"] = discrete ? "discrete" : "continuous";
    summary["states"] = problem.state_dim();
    summary["inputs"] = problem.input_dim();
    summary["subsystems"] = bundle.input_partition.subsystems();

    if (config.save_problem_copy && config.generator) {
        save_problem(bundle, out_dir / config.problem_name);
    }

    // full-problem reference, solved tighter than the outer tolerances
    Tolerances reference_tol;
    reference_tol.riccati = 1e-12;
    const ValueMatrix p_ref = solve_riccati(problem, {}, reference_tol);
    const Feedback f_ref = optimal_feedback(p_ref, problem);

    // split iteration
    RunOptions options = config.run;
    options.order = config.order;
    std::optional<Feedback> f0;
    if (config.f0_path) {
        f0 = Feedback(load_matrix_file(*config.f0_path));
    }
    const Feedback start =
        initial_feedback(problem, bundle.input_partition, f0);
    const SolveReport report =
        run_split_iteration(problem, bundle.input_partition, start, options);

    summary["sweeps"] = report.sweeps;
    summary["converged"] = report.status == TerminationReason::Converged;
    if (!report.trace.records.empty()) {
        summary["final_residual"] =
            report.trace.records.back().full_riccati_residual;
    }
    if (config.want_trace) {
        write_trace_csv(report.trace, out_dir / config.trace_name);
    }

    if (report.status != TerminationReason::Converged) {
        summary["message"] = report.message;
        result.exit_status = exit_code::convergence;
        write_summary(summary, out_dir);
        return result;
    }

    bool verified = true;

    // cross-check against the reference before reporting success
    const double gap = (report.final_feedback.gain() - f_ref.gain()).norm();
    const double gap_rel = gap / (1.0 + f_ref.gain().norm());
    summary["feedback_gap_vs_reference"] = gap_rel;
    summary["reference_check"] = gap_rel <= config.check_tol;
    verified = verified && gap_rel <= config.check_tol;

    std::optional<double> rho;
    if (config.want_rate && discrete) {
        const RateReport rate =
            rate_matrix_cycle(problem, bundle.input_partition, p_ref,
                              config.order);
        rho = rate.spectral_radius;
        summary["spectral_radius"] = rate.spectral_radius;
        summary["cycle_operator_norm"] = rate.operator_norm;
    }

    if (config.want_order_fit) {
        try {
            const OrderFit fit =
                empirical_order(report.trace, f_ref.gain(), config.window_lo,
                                config.window_hi);
            summary["fitted_order"] = fit.order;
            summary["fitted_rate"] = fit.rate;
            summary["fit_pairs"] = fit.pairs;
            if (config.expected_order) {
                const bool ok = fit.order >= config.expected_order->first &&
                                fit.order <= config.expected_order->second;
                summary["order_check"] = ok;
                verified = verified && ok;
            }
            if (config.rate_match_band && rho) {
                const double dev =
                    std::abs(fit.rate - *rho) / std::max(*rho, 0.01);
                summary["rate_deviation"] = dev;
                const bool ok = dev <= *config.rate_match_band;
                summary["rate_check"] = ok;
                verified = verified && ok;
            }
        } catch (const InsufficientData& e) {
            summary["fitted_order"] = nullptr;
            summary["fit_message"] = e.what();
            if (config.expected_order || config.rate_match_band) {
                verified = false;
                summary["order_check"] = false;
            }
        }
    }

    summary["pass"] = verified;
    result.exit_status = verified ? exit_code::ok : exit_code::verification;
    write_summary(summary, out_dir);
    return result;
}

} // namespace splitlqr

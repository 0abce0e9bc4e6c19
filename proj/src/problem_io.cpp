#include "splitlqr/problem_io.hpp"

#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>

namespace splitlqr {

namespace {

std::string trim(const std::string& s) {
    const auto begin = s.find_first_not_of(" \t\r");
    if (begin == std::string::npos) return {};
    const auto end = s.find_last_not_of(" \t\r");
    return s.substr(begin, end - begin + 1);
}

std::vector<std::string> split(const std::string& s, char sep) {
    std::vector<std::string> parts;
    std::string token;
    std::istringstream in(s);
    while (std::getline(in, token, sep)) parts.push_back(token);
    if (!s.empty() && s.back() == sep) parts.emplace_back();
    return parts;
}

double parse_double(const std::string& token, const std::string& context) {
    try {
        std::size_t used = 0;
        const double v = std::stod(token, &used);
        if (used != trim(token).size() && !trim(token).empty()) {
            // allow surrounding whitespace only
            const std::string rest = trim(token.substr(used));
            if (!rest.empty()) throw std::invalid_argument(rest);
        }
        return v;
    } catch (const std::exception&) {
        throw ParseError(context + ": cannot parse number '" + token + "'");
    }
}

std::vector<Eigen::Index> parse_blocks(const std::string& text,
                                       const std::string& context) {
    std::vector<Eigen::Index> blocks;
    for (const std::string& tok : split(text, ',')) {
        const std::string t = trim(tok);
        try {
            std::size_t used = 0;
            const long v = std::stol(t, &used);
            if (used != t.size() || v < 1) throw std::invalid_argument(t);
            blocks.push_back(static_cast<Eigen::Index>(v));
        } catch (const std::exception&) {
            throw ParseError(context + ": invalid block size '" + t + "'");
        }
    }
    if (blocks.empty()) throw ParseError(context + ": empty block list");
    return blocks;
}

TimeDomain parse_domain(const std::string& text, const std::string& context) {
    if (text == "continuous") return TimeDomain::Continuous;
    if (text == "discrete") return TimeDomain::Discrete;
    throw ParseError(context + ": domain must be 'continuous' or 'discrete', "
                               "got '" + text + "'");
}

struct KvEntry {
    std::string value;
    int line = 0;
};

std::map<std::string, KvEntry> read_kv_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open '" + path.string() + "'");
    std::map<std::string, KvEntry> entries;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        line = trim(line);
        if (line.empty()) continue;
        const auto colon = line.find(':');
        if (colon == std::string::npos) {
            throw ParseError(path.string() + ":" + std::to_string(lineno) +
                             ": expected 'key: value'");
        }
        const std::string key = trim(line.substr(0, colon));
        if (entries.count(key)) {
            throw ParseError(path.string() + ":" + std::to_string(lineno) +
                             ": duplicate key '" + key + "'");
        }
        entries[key] = {trim(line.substr(colon + 1)), lineno};
    }
    return entries;
}

const KvEntry& require_key(const std::map<std::string, KvEntry>& entries,
                           const std::string& key,
                           const std::filesystem::path& path) {
    const auto it = entries.find(key);
    if (it == entries.end()) {
        throw ParseError(path.string() + ": missing required key '" + key +
                         "'");
    }
    return it->second;
}

} // namespace

std::string format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

Matrix parse_matrix_text(const std::string& text) {
    const std::vector<std::string> rows = split(trim(text), ';');
    if (rows.empty()) throw ParseError("matrix text is empty");
    std::vector<std::vector<double>> values;
    for (std::size_t i = 0; i < rows.size(); ++i) {
        std::vector<double> row;
        for (const std::string& tok : split(rows[i], ',')) {
            row.push_back(
                parse_double(tok, "matrix row " + std::to_string(i + 1)));
        }
        if (!values.empty() && row.size() != values.front().size()) {
            throw ParseError("matrix rows have inconsistent lengths");
        }
        values.push_back(std::move(row));
    }
    Matrix m(static_cast<Eigen::Index>(values.size()),
             static_cast<Eigen::Index>(values.front().size()));
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        for (Eigen::Index j = 0; j < m.cols(); ++j) {
            m(i, j) = values[static_cast<std::size_t>(i)]
                            [static_cast<std::size_t>(j)];
        }
    }
    return m;
}

std::string format_matrix_text(const Matrix& m) {
    std::string out;
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        if (i > 0) out += ';';
        for (Eigen::Index j = 0; j < m.cols(); ++j) {
            if (j > 0) out += ',';
            out += format_double(m(i, j));
        }
    }
    return out;
}

std::string problem_file_text(const ProblemBundle& bundle) {
    std::string blocks_state, blocks_input;
    for (std::size_t i = 0; i < bundle.state_partition.sizes().size(); ++i) {
        if (i > 0) blocks_state += ',';
        blocks_state += std::to_string(bundle.state_partition.sizes()[i]);
    }
    for (std::size_t i = 0; i < bundle.input_partition.sizes().size(); ++i) {
        if (i > 0) blocks_input += ',';
        blocks_input += std::to_string(bundle.input_partition.sizes()[i]);
    }
    std::string out;
    out += "domain: ";
    out += bundle.problem.domain() == TimeDomain::Continuous ? "continuous"
                                                             : "discrete";
    out += "\nstate_blocks: " + blocks_state;
    out += "\ninput_blocks: " + blocks_input;
    out += "\nA: " + format_matrix_text(bundle.problem.A());
    out += "\nB: " + format_matrix_text(bundle.problem.B());
    out += "\nQ: " + format_matrix_text(bundle.problem.Q());
    out += "\nR: " + format_matrix_text(bundle.problem.R());
    out += "\n";
    return out;
}

void save_problem(const ProblemBundle& bundle,
                  const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write '" + path.string() + "'");
    out << problem_file_text(bundle);
    if (!out) throw IoError("failed while writing '" + path.string() + "'");
}

ProblemBundle load_problem(const std::filesystem::path& path) {
    const auto entries = read_kv_file(path);
    const TimeDomain domain =
        parse_domain(require_key(entries, "domain", path).value,
                     path.string());
    const BlockPartition states(
        parse_blocks(require_key(entries, "state_blocks", path).value,
                     path.string() + ": state_blocks"));
    const BlockPartition inputs(
        parse_blocks(require_key(entries, "input_blocks", path).value,
                     path.string() + ": input_blocks"));
    const Matrix a = parse_matrix_text(require_key(entries, "A", path).value);
    const Matrix b = parse_matrix_text(require_key(entries, "B", path).value);
    const Matrix q = parse_matrix_text(require_key(entries, "Q", path).value);
    const Matrix r = parse_matrix_text(require_key(entries, "R", path).value);

    if (states.total() != a.rows()) {
        throw DimensionMismatch(path.string() + ": state_blocks sum to " +
                                std::to_string(states.total()) + " but A is " +
                                std::to_string(a.rows()) + "x" +
                                std::to_string(a.cols()));
    }
    if (inputs.total() != b.cols()) {
        throw DimensionMismatch(path.string() + ": input_blocks sum to " +
                                std::to_string(inputs.total()) + " but B has " +
                                std::to_string(b.cols()) + " columns");
    }
    if (states.subsystems() != inputs.subsystems()) {
        throw DimensionMismatch(path.string() + ": state_blocks and "
                                                "input_blocks must have the "
                                                "same number of entries");
    }
    LqrProblem problem(a, b, q, r, domain);
    return ProblemBundle{std::move(problem), inputs, states};
}

Matrix load_matrix_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open '" + path.string() + "'");
    std::string text, line;
    while (std::getline(in, line)) {
        const auto hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        line = trim(line);
        if (!line.empty()) text += line;
    }
    if (text.empty()) throw ParseError(path.string() + ": no matrix found");
    return parse_matrix_text(text);
}

std::string trace_csv_text(const IterationTrace& trace) {
    std::string out = "sweep,subsystem,frobenius_change_F,full_ARE_residual,"
                      "min_eig_P_decrement,stabilizing\n";
    for (const UpdateRecord& rec : trace.records) {
        out += std::to_string(rec.sweep + 1);
        out += ',';
        out += std::to_string(rec.subsystem + 1);
        out += ',';
        out += format_double(rec.feedback_change);
        out += ',';
        out += format_double(rec.full_riccati_residual);
        out += ',';
        out += format_double(rec.value_decrement_min_eig);
        out += ',';
        out += rec.stabilizing ? '1' : '0';
        out += '\n';
    }
    return out;
}

void write_trace_csv(const IterationTrace& trace,
                     const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write '" + path.string() + "'");
    out << trace_csv_text(trace);
    if (!out) throw IoError("failed while writing '" + path.string() + "'");
}

std::vector<int> parse_order_text(const std::string& text) {
    std::vector<int> order;
    for (const std::string& tok : split(trim(text), ',')) {
        const std::string t = trim(tok);
        try {
            std::size_t used = 0;
            const long v = std::stol(t, &used);
            if (used != t.size() || v < 1) throw std::invalid_argument(t);
            order.push_back(static_cast<int>(v - 1));
        } catch (const std::exception&) {
            throw ParseError("invalid sweep order entry '" + t +
                             "' (expected 1-based subsystem indices)");
        }
    }
    if (order.empty()) throw ParseError("sweep order is empty");
    return order;
}

} // namespace splitlqr

#pragma once

#include <filesystem>
#include <string>

#include "splitlqr/generator.hpp"
#include "splitlqr/split_iteration.hpp"

namespace splitlqr {

/// Matrix text form: row-major, rows separated by semicolons, entries by
/// commas, e.g. "0,1;0,0".
Matrix parse_matrix_text(const std::string& text);

/// Inverse of parse_matrix_text; 17 significant digits, so doubles survive a
/// round trip exactly.
std::string format_matrix_text(const Matrix& m);

/// Problem file: "key: value" lines with keys domain, state_blocks,
/// input_blocks and the four matrices in the text form above. '#' starts a
/// comment.
ProblemBundle load_problem(const std::filesystem::path& path);
void save_problem(const ProblemBundle& bundle,
                  const std::filesystem::path& path);

/// Serialized form of a problem file, used by save_problem and handy for
/// byte-level determinism checks.
std::string problem_file_text(const ProblemBundle& bundle);

/// Reads a single matrix in text form (used for feedback files).
Matrix load_matrix_file(const std::filesystem::path& path);

/// One CSV row per performed subsystem update; sweep and subsystem columns
/// are 1-based.
std::string trace_csv_text(const IterationTrace& trace);
void write_trace_csv(const IterationTrace& trace,
                     const std::filesystem::path& path);

/// "2,3,1" (1-based in text) <-> {1, 2, 0} (0-based in memory).
std::vector<int> parse_order_text(const std::string& text);

std::string format_double(double v); ///< %.17g

} // namespace splitlqr

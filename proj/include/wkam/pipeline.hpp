#pragma once

// Subcommand orchestration: builds the problem from a spec, runs the requested
// stage chain (Cauchy solve, critical value, Mañé potential, Aubry set,
// extremals), writes CSV and JSON artifacts atomically and gates on checks.

#include <optional>
#include <string>
#include <vector>

#include "wkam/spec.hpp"

namespace wkam {

struct RunRequest {
  std::string command;
  std::optional<Vec2> from;       // distance / extremal
  std::optional<Vec2> at;         // aubry-orbit
  std::optional<double> horizon;  // extremal / aubry-orbit
  std::optional<std::string> out_dir;
};

struct CheckResult {
  std::string name;
  bool pass = false;
  double value = 0.0;
  double limit = 0.0;
};

struct RunSummary {
  std::string command;
  std::vector<CheckResult> checks;
  std::vector<std::string> files;  // written artifacts
  std::string json;                // the summary document
  int exit_code = 0;               // 0 ok, 3 a gated check failed
  bool all_pass() const;
};

const std::vector<std::string>& pipeline_commands();

// Throws Error for spec problems (SpecError) and numerical failures; the CLI
// maps those to exit codes 1 and 2.
RunSummary run_pipeline(const ProblemSpec& spec, const RunRequest& request);

// Writes through a temporary file in the same directory and renames it into
// place, so readers never observe a partial file.
void write_atomic(const std::string& path, const std::string& content);

// RFC 4180 table with a header row, CRLF line ends and %.12g numbers.
class CsvTable {
 public:
  explicit CsvTable(std::vector<std::string> header);
  void row(const std::vector<double>& values);
  std::string str() const;
  std::size_t rows() const { return rows_; }

 private:
  std::string text_;
  std::size_t columns_;
  std::size_t rows_ = 0;
};

std::string format_csv_number(double v);

}  // namespace wkam

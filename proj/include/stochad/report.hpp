#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "stochad/estimators.hpp"

namespace stochad {

// One row of a CLI report.
struct ReportRow {
  std::string experiment;
  std::string estimator;
  double parameter = 0.0;
  std::uint64_t n = 0;
  double mean = 0.0;
  double variance = 0.0;
  double std_error = 0.0;
  std::uint64_t seed = 0;
  // Wall time of the estimate; left empty unless timing was requested so that
  // report bodies stay reproducible.
  std::optional<double> seconds;
};

struct ReportMetadata {
  std::uint64_t seed = 0;
  std::string git_describe;
  std::string command;
  double wall_seconds = 0.0;
};

enum class ReportFormat { csv, json };

ReportRow make_row(const std::string& experiment, double parameter, const EstimateSummary& summary,
                   bool with_timing);

// Shortest decimal text that round-trips to the same double.
std::string format_number(double x);

// Version string baked in at build time (git describe), "unknown" outside a checkout.
std::string build_describe();

// CSV: '#'-prefixed metadata lines, then a header row and one line per row.
void write_csv(std::ostream& out, const ReportMetadata& meta, const std::vector<ReportRow>& rows);
void write_csv_body(std::ostream& out, const std::vector<ReportRow>& rows);

// JSON: array of flat records with the CSV columns as keys.
void write_json(std::ostream& out, const std::vector<ReportRow>& rows);
std::string metadata_json(const ReportMetadata& meta);

extern const std::vector<std::string> kReportColumns;

}  // namespace stochad

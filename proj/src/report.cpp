#include "stochad/report.hpp"

#include <array>
#include <charconv>
#include <cmath>
#include <ostream>

#include "json.hpp"

#ifndef STOCHAD_GIT_DESCRIBE
#define STOCHAD_GIT_DESCRIBE "unknown"
#endif

namespace stochad {

const std::vector<std::string> kReportColumns = {"experiment", "estimator", "parameter", "n",      "mean",
                                                 "variance",   "stderr",    "seed",      "seconds"};

ReportRow make_row(const std::string& experiment, double parameter, const EstimateSummary& summary,
                   bool with_timing) {
  ReportRow row;
  row.experiment = experiment;
  row.estimator = summary.estimator;
  row.parameter = parameter;
  row.n = summary.n;
  row.mean = summary.mean;
  row.variance = summary.variance;
  row.std_error = summary.std_error;
  row.seed = summary.seed;
  if (with_timing) row.seconds = summary.seconds;
  return row;
}

std::string format_number(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  std::array<char, 64> buf{};
  const auto res = std::to_chars(buf.data(), buf.data() + buf.size(), x);
  return std::string(buf.data(), res.ptr);
}

std::string build_describe() { return STOCHAD_GIT_DESCRIBE; }

namespace {

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string quoted = "\"";
  for (char c : s) {
    if (c == '"') quoted += '"';
    quoted += c;
  }
  return quoted + "\"";
}

}  // namespace

void write_csv_body(std::ostream& out, const std::vector<ReportRow>& rows) {
  for (std::size_t i = 0; i < kReportColumns.size(); ++i) out << (i ? "," : "") << kReportColumns[i];
  out << '\n';
  for (const auto& r : rows) {
    out << csv_field(r.experiment) << ',' << csv_field(r.estimator) << ',' << format_number(r.parameter) << ','
        << r.n << ',' << format_number(r.mean) << ',' << format_number(r.variance) << ','
        << format_number(r.std_error) << ',' << r.seed << ',' << (r.seconds ? format_number(*r.seconds) : "")
        << '\n';
  }
}

void write_csv(std::ostream& out, const ReportMetadata& meta, const std::vector<ReportRow>& rows) {
  out << "# seed: " << meta.seed << '\n';
  out << "# git_describe: " << meta.git_describe << '\n';
  if (!meta.command.empty()) out << "# command: " << meta.command << '\n';
  out << "# wall_seconds: " << format_number(meta.wall_seconds) << '\n';
  write_csv_body(out, rows);
}

void write_json(std::ostream& out, const std::vector<ReportRow>& rows) {
  auto records = nlohmann::ordered_json::array();
  for (const auto& r : rows) {
    nlohmann::ordered_json rec;
    rec["experiment"] = r.experiment;
    rec["estimator"] = r.estimator;
    rec["parameter"] = r.parameter;
    rec["n"] = r.n;
    rec["mean"] = r.mean;
    rec["variance"] = r.variance;
    rec["stderr"] = r.std_error;
    rec["seed"] = r.seed;
    rec["seconds"] = r.seconds ? nlohmann::ordered_json(*r.seconds) : nlohmann::ordered_json(nullptr);
    records.push_back(std::move(rec));
  }
  out << records.dump(2) << '\n';
}

std::string metadata_json(const ReportMetadata& meta) {
  nlohmann::ordered_json rec;
  rec["seed"] = meta.seed;
  rec["git_describe"] = meta.git_describe;
  rec["command"] = meta.command;
  rec["wall_seconds"] = meta.wall_seconds;
  return rec.dump(2);
}

}  // namespace stochad

#include <cmath>
#include <cstdlib>
#include <limits>
#include <sstream>
#include <string>

#include "doctest.h"
#include "json.hpp"
#include "stochad/report.hpp"

using namespace stochad;

namespace {

ReportRow sample_row(bool timed) {
  EstimateSummary s;
  s.estimator = "triple";
  s.mean = 0.1;
  s.variance = 2.0 / 3.0;
  s.std_error = 1e-300;
  s.n = 1000;
  s.seed = 42;
  s.seconds = 1.25;
  return make_row("walk_n10", 10.0, s, timed);
}

std::vector<std::string> lines_of(const std::string& text) {
  std::vector<std::string> lines;
  std::istringstream in(text);
  for (std::string line; std::getline(in, line);) lines.push_back(line);
  return lines;
}

}  // namespace

TEST_CASE("numbers round-trip through their text form") {
  for (double x : {0.1, 2.0 / 3.0, 1e-300, -123456.789, 203.04, 5e-324, 1.0}) {
    CHECK(std::strtod(format_number(x).c_str(), nullptr) == x);
  }
  CHECK(format_number(10.0) == "10");
  CHECK(format_number(std::numeric_limits<double>::quiet_NaN()) == "nan");
  CHECK(format_number(-std::numeric_limits<double>::infinity()) == "-inf");
}

TEST_CASE("csv layout") {
  ReportMetadata meta;
  meta.seed = 42;
  meta.git_describe = "v0";
  meta.command = "stochad walk";
  std::ostringstream out;
  write_csv(out, meta, {sample_row(false), sample_row(true)});
  const auto lines = lines_of(out.str());
  REQUIRE(lines.size() == 7);
  CHECK(lines[0] == "# seed: 42");
  CHECK(lines[1] == "# git_describe: v0");
  CHECK(lines[2] == "# command: stochad walk");
  CHECK(lines[3].rfind("# wall_seconds: ", 0) == 0);
  CHECK(lines[4] == "experiment,estimator,parameter,n,mean,variance,stderr,seed,seconds");
  CHECK(lines[5] == "walk_n10,triple,10,1000,0.1," + format_number(2.0 / 3.0) + ",1e-300,42,");
  CHECK(lines[6] == "walk_n10,triple,10,1000,0.1," + format_number(2.0 / 3.0) + ",1e-300,42,1.25");
}

TEST_CASE("csv fields with separators are quoted") {
  ReportRow row = sample_row(false);
  row.experiment = "a,\"b\"";
  std::ostringstream out;
  write_csv_body(out, {row});
  CHECK(lines_of(out.str())[1].rfind("\"a,\"\"b\"\"\",triple,", 0) == 0);
}

TEST_CASE("json layout") {
  std::ostringstream out;
  write_json(out, {sample_row(false), sample_row(true)});
  const auto parsed = nlohmann::json::parse(out.str());
  REQUIRE(parsed.is_array());
  REQUIRE(parsed.size() == 2);
  const auto& rec = parsed[0];
  CHECK(rec.size() == kReportColumns.size());
  for (const auto& key : kReportColumns) CHECK(rec.contains(key));
  CHECK(rec["experiment"] == "walk_n10");
  CHECK(rec["n"] == 1000);
  CHECK(rec["variance"].get<double>() == 2.0 / 3.0);
  CHECK(rec["stderr"].get<double>() == 1e-300);
  CHECK(rec["seconds"].is_null());
  CHECK(parsed[1]["seconds"].get<double>() == 1.25);

  ReportMetadata meta;
  meta.seed = 3;
  meta.git_describe = "x";
  const auto m = nlohmann::json::parse(metadata_json(meta));
  CHECK(m["seed"] == 3);
  CHECK(m["git_describe"] == "x");
}

TEST_CASE("build description is never empty") { CHECK_FALSE(build_describe().empty()); }

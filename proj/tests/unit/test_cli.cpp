#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <gtest/gtest.h>
#include <json.hpp>

#include "fracint/cli.hpp"

namespace fs = std::filesystem;
using fracint::cli::run;

namespace {

struct Outcome {
  int code;
  std::string out;
  std::string err;
};

Outcome call(const std::vector<std::string>& args) {
  std::ostringstream out, err;
  const int code = run(args, out, err);
  return {code, out.str(), err.str()};
}

fs::path temp_file(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("fracint_cli_" + std::to_string(::getpid()) + "_" + name);
  fs::remove(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream f(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(f), std::istreambuf_iterator<char>()};
}

}  // namespace

TEST(Cli, ConstJson) {
  const Outcome o = call({"--json", "const"});
  ASSERT_EQ(o.code, 0) << o.err;
  const auto j = nlohmann::json::parse(o.out);
  EXPECT_NEAR(j["limit_constant"].get<double>(), 1.663089800, 1e-8);
  EXPECT_NEAR(j["series_total"].get<double>(), 0.996423133, 1e-8);
  EXPECT_NEAR(j["zeta_three_halves"].get<double>(), 2.612375348685488, 1e-12);
}

TEST(Cli, JsonFlagAfterSubcommand) {
  const Outcome o = call({"t0", "--x", "2", "--json"});
  ASSERT_EQ(o.code, 0) << o.err;
  EXPECT_NEAR(nlohmann::json::parse(o.out)["t0"].get<double>(), 2.0 * std::log(1.5), 1e-12);
}

TEST(Cli, TextOutput) {
  const Outcome o = call({"td", "--x", "2", "--d", "1"});
  ASSERT_EQ(o.code, 0) << o.err;
  EXPECT_NE(o.out.find("td 0.537589624"), std::string::npos) << o.out;
  EXPECT_NE(o.out.find("closed_form"), std::string::npos);
}

TEST(Cli, EvalModes) {
  Outcome o = call({"--json", "eval", "--x", "100", "--per-d", "5"});
  ASSERT_EQ(o.code, 0) << o.err;
  auto j = nlohmann::json::parse(o.out);
  EXPECT_EQ(j["width"].get<double>(), 5.0);
  EXPECT_EQ(j["mode"], "per_d");
  o = call({"--json", "eval", "--x", "2", "--t-min", "1e-4"});
  ASSERT_EQ(o.code, 0) << o.err;
  j = nlohmann::json::parse(o.out);
  EXPECT_LE(j["width"].get<double>(), 1e-4);
  EXPECT_EQ(call({"eval", "--x", "2", "--t-min", "1", "--per-d", "3"}).code, 2);
}

TEST(Cli, UsageErrorsExitTwo) {
  EXPECT_EQ(call({}).code, 2);
  EXPECT_EQ(call({"nonsense"}).code, 2);
  EXPECT_EQ(call({"t0"}).code, 2);
  EXPECT_EQ(call({"td", "--x", "2", "--d", "zero"}).code, 2);
  EXPECT_EQ(call({"sum", "--which", "eq9", "--x", "5"}).code, 2);
  EXPECT_EQ(call({"--help"}).code, 0);
}

TEST(Cli, ValidationErrorsExitThree) {
  Outcome o = call({"t0", "--x", "-3"});
  EXPECT_EQ(o.code, 3);
  EXPECT_NE(o.err.find("positive"), std::string::npos);
  EXPECT_EQ(call({"t0", "--x", "1.5.2"}).code, 3);
  EXPECT_EQ(call({"eval", "--x", "2", "--t-min", "5"}).code, 3);
  EXPECT_EQ(call({"const", "--tolerance", "0.1"}).code, 3);
  EXPECT_EQ(call({"fd", "--total", "1e-12"}).code, 3);
  EXPECT_EQ(call({"sum", "--which", "eq3", "--x", "100", "--a", "2", "--b", "1"}).code, 3);
  EXPECT_EQ(call({"scan", "--x-from", "1", "--x-to", "100", "--points", "3"}).code, 3);
}

TEST(Cli, SeriesCommands) {
  Outcome o = call({"--json", "fd", "--sum-to", "5"});
  ASSERT_EQ(o.code, 0) << o.err;
  EXPECT_NEAR(nlohmann::json::parse(o.out)["partial_sum"].get<double>(), 0.853906608, 1e-8);
  o = call({"--json", "fd", "--d", "3", "--printed"});
  ASSERT_EQ(o.code, 0) << o.err;
  const auto j = nlohmann::json::parse(o.out);
  EXPECT_GT(j["f_printed"].get<double>(), j["f"].get<double>());
  o = call({"--json", "fd", "--total", "1e-6"});
  ASSERT_EQ(o.code, 0) << o.err;
  EXPECT_LE(std::abs(nlohmann::json::parse(o.out)["difference"].get<double>()), 1e-6);
}

TEST(Cli, SumCommands) {
  Outcome o = call({"--json", "sum", "--which", "eq2", "--x", "2"});
  ASSERT_EQ(o.code, 0) << o.err;
  EXPECT_NEAR(nlohmann::json::parse(o.out)["sum"].get<double>(), 4.0 / 3.0, 1e-15);
  o = call({"--json", "sum", "--which", "eq3", "--x", "1000", "--a", "1", "--b", "2"});
  ASSERT_EQ(o.code, 0) << o.err;
  const auto j = nlohmann::json::parse(o.out);
  EXPECT_LE(j["lo"].get<double>(), j["hi"].get<double>());
}

TEST(Cli, ScanThenFit) {
  const fs::path csv = temp_file("scan.csv");
  Outcome o = call({"scan", "--x-from", "1e4", "--x-to", "1e5", "--points", "3", "--no-timing", "--out", csv.string()});
  ASSERT_EQ(o.code, 0) << o.err;
  const std::string text = slurp(csv);
  EXPECT_EQ(text.rfind(fracint::kScanHeader, 0), 0u);
  // Fitting the real scan needs usable records; a synthetic file exercises the path.
  const fs::path synth = temp_file("synthetic.csv");
  {
    std::ofstream f(synth);
    f.precision(17);
    f << fracint::kScanHeader << '\n';
    for (int i = 0; i < 8; ++i) {
      const double x = 1e4 * std::pow(10.0, i / 2.0);
      f << x << ",0,0,0,0," << -std::pow(x, 0.4) << ",0.001,1,0\n";
    }
  }
  o = call({"--json", "fit", "--in", synth.string()});
  ASSERT_EQ(o.code, 0) << o.err;
  const auto j = nlohmann::json::parse(o.out);
  EXPECT_NEAR(j["slope"].get<double>(), 0.4, 1e-9);
  EXPECT_EQ(j["n_used"].get<int>(), 8);
  EXPECT_NEAR(j["reference_exponent"].get<double>(), 13.0 / 30.0, 1e-15);
  EXPECT_EQ(call({"fit", "--in", "/nonexistent/file.csv"}).code, 2);
  fs::remove(csv);
  fs::remove(synth);
}

TEST(Cli, BenchReportsCsv) {
  const Outcome o = call({"bench", "--x", "1e5", "--reps", "1"});
  ASSERT_EQ(o.code, 0) << o.err;
  std::istringstream lines(o.out);
  std::string header, row;
  std::getline(lines, header);
  std::getline(lines, row);
  EXPECT_EQ(header.rfind("x,width,segments", 0), 0u);
  EXPECT_EQ(std::count(row.begin(), row.end(), ','), std::count(header.begin(), header.end(), ','));
}

TEST(Cli, OracleCommand) {
  const Outcome o = call({"--json", "oracle", "--x", "5", "--points", "100000"});
  ASSERT_EQ(o.code, 0) << o.err;
  EXPECT_EQ(nlohmann::json::parse(o.out)["contained"].get<int>(), 1);
}

TEST(Cli, LedgerAppendsOneLinePerRun) {
  const fs::path ledger = temp_file("ledger.jsonl");
  ::setenv("FRACINT_LEDGER", ledger.c_str(), 1);
  EXPECT_EQ(call({"t0", "--x", "2"}).code, 0);
  EXPECT_EQ(call({"t0", "--x", "-2"}).code, 3);
  ::unsetenv("FRACINT_LEDGER");
  EXPECT_EQ(call({"t0", "--x", "2"}).code, 0);
  std::istringstream lines(slurp(ledger));
  std::vector<nlohmann::json> entries;
  for (std::string line; std::getline(lines, line);) entries.push_back(nlohmann::json::parse(line));
  ASSERT_EQ(entries.size(), 2u);
  EXPECT_EQ(entries[0]["command"], "t0");
  EXPECT_EQ(entries[0]["args"]["x"], "2");
  EXPECT_EQ(entries[0]["version"], FRACINT_VERSION);
  EXPECT_NEAR(entries[0]["summary"]["t0"].get<double>(), 2.0 * std::log(1.5), 1e-12);
  EXPECT_EQ(entries[1]["summary"]["exit_code"].get<int>(), 3);
  EXPECT_EQ(entries[0]["ts"].get<std::string>().size(), 20u);
  EXPECT_TRUE(entries[0]["duration_ms"].is_number_integer());
  fs::remove(ledger);
}

TEST(Cli, LedgerFailureOnlyWarns) {
  ::setenv("FRACINT_LEDGER", "/nonexistent-dir/ledger.jsonl", 1);
  const Outcome o = call({"t0", "--x", "2"});
  ::unsetenv("FRACINT_LEDGER");
  EXPECT_EQ(o.code, 0);
  EXPECT_NE(o.err.find("warning"), std::string::npos);
}

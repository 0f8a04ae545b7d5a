// Output files and the comparison table: exact formats, stable key order.

#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <greendc/report.hpp>

using namespace greendc;

namespace {

MetricsReport sample_report() {
  MetricsReport r;
  r.policy = "gsa";
  r.predictor = "oracle";
  r.seed = 42;
  r.horizon = 2;
  r.dt_s = 300.0;
  r.brown_kwh = 1.25;
  r.green_kwh = 0.75;
  r.total_kwh = 2.0;
  r.renewable_potential_kwh = 1.0;
  r.mean_rt_ms = 450.125;
  r.p95_rt_ms = 600.5;
  r.p99_rt_ms = 700.25;
  r.deadline_violations = 0;
  r.deactivation_pct = 0.0625;
  r.completed_jobs = 5;
  r.deferred_jobs = 2;
  r.incomplete_jobs = 1;
  r.saturated_intervals = 0;
  r.overloaded_intervals = 1;
  r.migrations = 3;
  r.mean_active_hosts = 2.5;
  r.batch_units_executed = 10.0;
  r.batch_units_expected = 12.0;
  r.intervals.push_back({0, 100.0, 21.151, 121.151, 50.0, 71.151, 50.0, 1.2345, 2, 450.125, 0.0625});
  r.intervals.push_back({1, 0.5, 0.1, 0.6, 0.0, 0.6, 0.0, 0.0, 1, 0.0, 0.0});
  return r;
}

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

}  // namespace

TEST(Report, IntervalsCsvUsesTheExactHeaderAndRowFormat) {
  std::filesystem::path p =
      std::filesystem::path(::testing::TempDir()) / "report_rows.csv";
  write_intervals_csv(sample_report(), p.string());

  std::string text = slurp(p.string());
  EXPECT_EQ(text,
            "t,server_w,cooling_w,total_w,renewable_w,brown_w,green_w,"
            "demand_units,active_hosts,mean_rt_ms,deactivated_pct\n"
            "0,100.000,21.151,121.151,50.000,71.151,50.000,1.2345,2,450.125,0.0625\n"
            "1,0.500,0.100,0.600,0.000,0.600,0.000,0.0000,1,0.000,0.0000\n");
}

TEST(Report, SummaryKeysKeepInsertionOrder) {
  auto j = summary_json(sample_report());
  std::vector<std::string> keys;
  for (auto it = j.begin(); it != j.end(); ++it) keys.push_back(it.key());
  std::vector<std::string> want = {
      "policy", "predictor", "seed", "horizon", "dt_s", "brown_kwh", "green_kwh",
      "total_kwh", "renewable_potential_kwh", "mean_rt_ms", "rt_percentiles",
      "deadline_violations", "deactivation_pct", "completed_jobs", "deferred_jobs",
      "incomplete_jobs", "saturated_intervals", "overloaded_intervals", "migrations",
      "mean_active_hosts", "batch_units_executed", "batch_units_expected"};
  EXPECT_EQ(keys, want);
  EXPECT_EQ(j["rt_percentiles"]["p95_ms"].get<double>(), 600.5);
  EXPECT_EQ(j["rt_percentiles"]["p99_ms"].get<double>(), 700.25);
}

TEST(Report, WriteThenLoadRoundTrips) {
  std::filesystem::path dir = std::filesystem::path(::testing::TempDir()) / "report_rt";
  MetricsReport r = sample_report();
  write_report(r, dir.string());

  ASSERT_TRUE(std::filesystem::exists(dir / "intervals.csv"));
  auto j = load_summary((dir / "summary.json").string());
  EXPECT_EQ(j["policy"], "gsa");
  EXPECT_EQ(j["horizon"].get<int>(), 2);
  EXPECT_EQ(j["brown_kwh"].get<double>(), 1.25);
  EXPECT_EQ(j["rt_percentiles"]["p95_ms"].get<double>(), 600.5);

  // The file ends with exactly one newline after the pretty-printed object.
  std::string text = slurp((dir / "summary.json").string());
  ASSERT_FALSE(text.empty());
  EXPECT_EQ(text.back(), '\n');
  EXPECT_NE(text[text.size() - 2], '\n');
}

TEST(Report, CompareOfIdenticalRunsIsAllZeroDeltas) {
  auto j = summary_json(sample_report());
  auto rows = compare_summaries(j, j);
  ASSERT_EQ(rows.size(), 13u);
  EXPECT_EQ(rows[0].metric, "brown_kwh");
  EXPECT_EQ(rows[5].metric, "rt_percentiles.p95_ms");
  for (const auto& row : rows) EXPECT_EQ(row.a, row.b);
}

TEST(Report, CompareRefusesShapeMismatches) {
  auto a = summary_json(sample_report());
  auto b = a;
  b["horizon"] = 4;
  EXPECT_THROW(compare_summaries(a, b), SchemaMismatchError);

  b = a;
  b.erase("dt_s");
  EXPECT_THROW(compare_summaries(a, b), SchemaMismatchError);

  b = a;
  b.erase("migrations");
  EXPECT_THROW(compare_summaries(a, b), SchemaMismatchError);

  b = a;
  b["green_kwh"] = "lots";
  EXPECT_THROW(compare_summaries(a, b), SchemaMismatchError);
}

TEST(Report, FormatMarksZeroBaselinesAsNa) {
  std::vector<CompareRow> rows = {{"brown_kwh", 2.0, 1.0}, {"deadline_violations", 0.0, 3.0}};
  std::string text = format_compare(rows, "gsa", "hs");
  EXPECT_NE(text.find("metric"), std::string::npos);
  EXPECT_NE(text.find("gsa"), std::string::npos);
  EXPECT_NE(text.find("-50.00%"), std::string::npos);
  EXPECT_NE(text.find("n/a"), std::string::npos);
}

TEST(Report, LoadSummaryFailuresAreTyped) {
  EXPECT_THROW(load_summary("/nonexistent/summary.json"), IoError);
  std::filesystem::path p = std::filesystem::path(::testing::TempDir()) / "broken.json";
  std::ofstream(p) << "{ not json";
  EXPECT_THROW(load_summary(p.string()), ParseError);
}

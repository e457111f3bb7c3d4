#include <cmath>
#include <limits>

#include <gtest/gtest.h>

#include "collapse_lab/error.hpp"
#include "collapse_lab/results.hpp"

namespace collapse_lab {
namespace {

ResultRow row(std::string metric, std::uint64_t t, double value) {
  return ResultRow{"s", "exponential_rate(d=1)", "exp_mle", "constant(c=1)", 100, 10, 1000, t, std::move(metric),
                   value, value - 0.01, value + 0.01, 0, 42};
}

TEST(Csv, HeaderOnlyForNoRows) { EXPECT_EQ(format_csv({}), std::string(kCsvHeader) + "\n"); }

TEST(Csv, RoundTripsExactly) {
  std::vector<ResultRow> rows{row("mean_sq_error", 2, 0.1), row("exceedance", 1, 1.0 / 3.0),
                              row("mean_sq_error", 1, 1e-300)};
  rows[1].family = "gaussian_mean(p=2;sigma=custom)";
  rows[1].schedule = "a \"quoted\", label";
  rows[2].exclusions = 7;
  const auto text = format_csv(rows);
  auto parsed = parse_csv(text);
  sort_rows(rows);
  EXPECT_EQ(parsed, rows);
  EXPECT_EQ(format_csv(parsed), text);
}

TEST(Csv, SortsByCellThenStepThenMetric) {
  std::vector<ResultRow> rows{row("b", 2, 0.0), row("a", 2, 0.0), row("z", 1, 0.0)};
  sort_rows(rows);
  EXPECT_EQ(rows[0].metric, "z");
  EXPECT_EQ(rows[1].metric, "a");
  EXPECT_EQ(rows[2].metric, "b");
}

TEST(Csv, SkipsNonFiniteValues) {
  const auto text = format_csv({row("x", 1, std::numeric_limits<double>::quiet_NaN()), row("y", 1, 0.5)});
  EXPECT_EQ(parse_csv(text).size(), 1u);
}

TEST(Csv, RejectsInvertedIntervals) {
  auto r = row("x", 1, 0.5);
  r.ci_low = 0.6;
  try {
    format_csv({r});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kConfiguration);
  }
}

TEST(Csv, ParseErrorsNameTheLine) {
  const std::string bad = std::string(kCsvHeader) + "\ns,f,e,c,1,2,3,4,m,0.5,0.4,0.6,0,1\ns,f,e,c,1,2\n";
  try {
    parse_csv(bad);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kIo);
    EXPECT_NE(std::string(e.what()).find("line 3"), std::string::npos);
  }
  EXPECT_THROW(parse_csv("wrong,header\n"), Error);
}

TEST(SummaryRows, OneRowPerFiniteStep) {
  const ChainConfig config{FamilySpec::exponential_rate(), EstimatorSpec::exponential_mle(),
                           ScheduleSpec::constant(),       20, 3, ParamPoint{1.0}, 4, SamplingMode::kDatasets};
  const auto summary = run_monte_carlo(config, {.replications = 40, .keep_trajectories = 2});
  const auto rows = summary_rows(summary, "unit");
  std::size_t expected = 0;
  for (const auto& s : summary.series) {
    for (double v : s.value) expected += std::isfinite(v) ? 1 : 0;
  }
  EXPECT_EQ(rows.size(), expected);
  for (const auto& r : rows) {
    EXPECT_EQ(r.R, 40u);
    EXPECT_EQ(r.seed, 4u);
  }
  const auto traj = format_trajectories(summary, "unit");
  EXPECT_EQ(traj.rfind(std::string(kTrajectoryHeader) + "\n", 0), 0u);
  EXPECT_EQ(static_cast<std::size_t>(std::count(traj.begin(), traj.end(), '\n')), 1u + 2u * 3u);
}

TEST(WriteTextFile, CreatesDirectoriesAndReportsFailures) {
  const auto dir = std::filesystem::path(::testing::TempDir()) / "collapse_lab_results_test" / "nested";
  std::filesystem::remove_all(dir.parent_path());
  write_text_file(dir / "x.csv", "hello\n");
  EXPECT_TRUE(std::filesystem::exists(dir / "x.csv"));
  try {
    write_text_file(dir / "x.csv" / "impossible.csv", "x");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kIo);
  }
}

}  // namespace
}  // namespace collapse_lab

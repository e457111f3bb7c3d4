#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "collapse_lab/engine.hpp"

namespace collapse_lab {

/// One (cell, step, metric) measurement.
struct ResultRow {
  std::string scenario;
  std::string family;
  std::string estimator;
  std::string schedule;
  std::uint64_t n0 = 0;
  std::uint64_t T = 0;
  std::uint64_t R = 0;
  std::uint64_t t = 0;
  std::string metric;
  double value = 0.0;
  double ci_low = 0.0;
  double ci_high = 0.0;
  std::uint64_t exclusions = 0;
  std::uint64_t seed = 0;

  friend bool operator==(const ResultRow&, const ResultRow&) = default;
};

inline constexpr std::string_view kCsvHeader =
    "scenario,family,estimator,schedule,n0,T,R,t,metric,value,ci_low,ci_high,exclusions,seed";

/// Orders rows by (scenario, family, estimator, schedule, n0, t, metric).
void sort_rows(std::vector<ResultRow>& rows);

/// Header plus sorted rows, numbers with 17 significant digits. Throws
/// kConfiguration when a row violates ci_low <= value <= ci_high.
std::string format_csv(std::vector<ResultRow> rows);

/// Inverse of format_csv. Throws kIo naming the offending line.
std::vector<ResultRow> parse_csv(std::string_view text);

/// Writes format_csv(rows); throws kIo naming the path on failure.
void export_csv(const std::vector<ResultRow>& rows, const std::filesystem::path& path);

/// One row per (metric, step) with a finite value.
std::vector<ResultRow> summary_rows(const ReplicationSummary& summary, std::string_view scenario);

inline constexpr std::string_view kTrajectoryHeader =
    "scenario,family,estimator,schedule,n0,replication,t,coord,value";

/// Long-format export of the kept trajectories of a summary.
std::string format_trajectories(const ReplicationSummary& summary, std::string_view scenario,
                                bool include_header = true);

/// Writes text to path, creating parent directories. Throws kIo.
void write_text_file(const std::filesystem::path& path, std::string_view text);

}  // namespace collapse_lab

#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "collapse_lab/engine.hpp"
#include "collapse_lab/results.hpp"

namespace collapse_lab {

/// A (family, estimator, theta*) triple; the grid crosses it with schedules and n0.
struct ChainCase {
  FamilySpec family;
  EstimatorSpec estimator;
  ParamPoint theta_star;
};

enum class ModeChoice {
  kAuto,  // sufficient statistic when the pair has a direct sampler
  kDatasets,
  kSufficient,
};

struct ScenarioConfig {
  std::string scenario = "custom";
  std::vector<ChainCase> cases;
  std::vector<ScheduleSpec> schedules;
  std::vector<std::uint64_t> n0_values;
  std::uint64_t T = 10;
  std::uint64_t R = 100;
  std::uint64_t seed = 0;
  double delta = 1.0;
  double epsilon = 0.05;
  unsigned parallelism = 0;
  double budget = 5e10;
  std::uint64_t trajectories = 0;
  ModeChoice mode = ModeChoice::kAuto;
  /// Adds theory rows (improvement_theory, mse_theory, risk_theory) next to
  /// the empirical ones where a closed form applies.
  bool overlay = false;
  std::uint64_t overlay_draws = 100'000;
  std::filesystem::path out = "results";
  /// The validated document, echoed into the manifest.
  nlohmann::json document;
};

/// Parses and validates a scenario document. Unknown keys and type errors
/// throw kConfiguration naming the JSON pointer; grid-level problems are
/// collected and reported together.
ScenarioConfig parse_config(std::string_view text);
ScenarioConfig config_from_json(const nlohmann::json& document);

// Single-component parsers with the same schema and strictness.
FamilySpec family_from_json(const nlohmann::json& node);
EstimatorSpec estimator_from_json(const nlohmann::json& node, const FamilySpec& family);
ScheduleSpec schedule_from_json(const nlohmann::json& node);

/// Chain configurations in grid order (case, schedule, n0). Cell i is seeded
/// with split_seed(seed, i).
std::vector<ChainConfig> expand_grid(const ScenarioConfig& config);

/// Every problem across the full grid; empty when the scenario can run.
std::vector<std::string> preflight(const ScenarioConfig& config);

struct ScenarioOutput {
  std::vector<ResultRow> rows;
  std::string trajectories_csv;
  nlohmann::json manifest;
};

using ProgressSink = std::function<void(std::string_view)>;

/// Runs every cell. Throws kConfiguration listing all pre-flight failures
/// before any sampling starts.
ScenarioOutput run_scenario(const ScenarioConfig& config, const ProgressSink& progress = {});

/// Writes <out>/<scenario>.csv, .manifest.json and, when trajectories were
/// kept, .trajectories.csv. Returns the paths written.
std::vector<std::filesystem::path> write_outputs(const ScenarioOutput& output, const ScenarioConfig& config);

/// Names accepted by preset_document.
std::vector<std::string> preset_names();

/// Scenario document of a built-in preset; `paper_scale` restores the
/// replication counts of the original study. Throws kConfiguration listing
/// the presets for unknown names.
nlohmann::json preset_document(std::string_view name, bool paper_scale = false);

std::string_view library_version() noexcept;

}  // namespace collapse_lab

#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "collapse_lab/estimators.hpp"
#include "collapse_lab/families.hpp"
#include "collapse_lab/random.hpp"
#include "collapse_lab/schedules.hpp"

namespace collapse_lab {

enum class SamplingMode {
  /// Draw every synthetic dataset D_t and run the estimator on it.
  kDatasets,
  /// Draw M(D_t) straight from its exact law (see direct_sampling.hpp).
  kSufficientStatistic,
};

std::string to_string(SamplingMode mode);

struct ChainConfig {
  FamilySpec family;
  EstimatorSpec estimator;
  ScheduleSpec schedule;
  std::uint64_t n0 = 100;
  /// Number of estimates theta_1 .. theta_T in the chain.
  std::uint64_t T = 10;
  ParamPoint theta_star;
  std::uint64_t seed = 0;
  SamplingMode mode = SamplingMode::kDatasets;
};

/// Every problem that would stop the chain from running, or empty.
std::vector<std::string> validate_chain(const ChainConfig& config);

struct ChainFailure {
  std::uint64_t step = 0;  // index t of the estimate that could not be produced or was invalid
  std::string cause;
};

struct Trajectory {
  std::vector<ParamPoint> estimates;        // theta_1 .. theta_T
  std::vector<std::uint64_t> step_sizes;    // n_0 .. n_{T-1}
  std::vector<ParamPoint> increments;       // xi_t = theta_t - theta_{t-1}, theta_0 = theta*
  std::optional<ChainFailure> failure;

  std::size_t length() const noexcept { return estimates.size(); }
};

/// Runs one recursive-training chain. Failures (invalid or non-finite
/// estimates, estimator errors) truncate the trajectory and are recorded;
/// they never throw.
Trajectory run_chain(const ChainConfig& config, RandomStream& rng);

/// ||theta_T - theta*|| < ||theta_1 - theta*||; empty when the chain failed
/// or is shorter than 2 steps.
std::optional<bool> improvement_indicator(const Trajectory& trajectory, const ParamPoint& theta_star);

enum class MetricKind {
  kProbability,  // normal-approximation proportion interval clamped to [0, 1]
  kMoment,       // mean +- 1.96 sd / sqrt(N)
};

struct MetricSeries {
  std::string name;
  MetricKind kind = MetricKind::kMoment;
  // Index i holds step t = i + 1. Steps without eligible chains hold NaN.
  std::vector<double> value;
  std::vector<double> ci_low;
  std::vector<double> ci_high;
  std::vector<std::uint64_t> exclusions;  // replications left out at this step
};

struct MonteCarloOptions {
  std::uint64_t replications = 100;
  double delta = 1.0;
  double epsilon = 0.05;
  /// Worker threads; 0 picks the hardware concurrency.
  unsigned parallelism = 1;
  /// Hard cap on generated scalar draws, checked before any work starts.
  double budget = 5e10;
  /// Full trajectories kept for the first replications.
  std::uint64_t keep_trajectories = 0;
};

struct ReplicationSummary {
  ChainConfig config;
  std::uint64_t replications = 0;
  double delta = 1.0;
  double epsilon = 0.05;
  std::vector<MetricSeries> series;
  std::vector<Trajectory> trajectories;
  /// Estimated scalar draws, as charged against the budget.
  double work = 0.0;

  const MetricSeries* find(std::string_view name) const;
  /// Throws kConfiguration when the metric was not computed.
  const MetricSeries& metric(std::string_view name) const;
};

/// Draws charged for R replications of the chain.
double chain_work(const ChainConfig& config, std::uint64_t replications);

/// R independent chains; replication i uses RandomStream::substream(seed, i).
/// Metrics per step t: mean_sq_error, mean_error, exceedance (||e|| >= delta),
/// diversity (scalar chains, theta <= epsilon), improvement (t >= 2),
/// max_estimate, positive_drift (<e, 1> > 0) and failure_rate. The result is
/// identical for every worker count.
///
/// Throws kConfiguration for invalid configs and kBudget when the work
/// exceeds options.budget.
ReplicationSummary run_monte_carlo(const ChainConfig& config, const MonteCarloOptions& options);

}  // namespace collapse_lab

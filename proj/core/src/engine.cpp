#include "collapse_lab/engine.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <mutex>
#include <thread>

#include "collapse_lab/direct_sampling.hpp"
#include "collapse_lab/error.hpp"
#include "text.hpp"

namespace collapse_lab {

namespace {

// Replications are grouped into fixed blocks whose partial sums are merged in
// block order, so floating-point results do not depend on the worker count.
constexpr std::uint64_t kBlockSize = 256;
constexpr double kDivergenceCap = 1e300;
constexpr double kZ95 = 1.96;

std::uint64_t step_size(const ChainConfig& config, std::uint64_t t) {
  return t == 1 ? config.n0 : sample_size(config.schedule, t - 1, config.n0);
}

std::optional<std::string> invalid_estimate(const FamilySpec& family, const ParamPoint& theta) {
  if (!theta.all_finite()) return "non-finite estimate";
  if (theta.values().cwiseAbs().maxCoeff() > kDivergenceCap) return "estimate exceeds 1e300 in magnitude";
  if (auto verdict = validate_param(family, theta); !verdict) return verdict.reason;
  return std::nullopt;
}

// Calls on_step(t, n_{t-1}, theta_t) for every valid estimate in order.
template <class OnStep>
std::optional<ChainFailure> walk_chain(const ChainConfig& config, RandomStream& rng, OnStep&& on_step) {
  Dataset buffer;
  ParamPoint current = config.theta_star;
  for (std::uint64_t t = 1; t <= config.T; ++t) {
    ParamPoint next;
    std::uint64_t n = 0;
    try {
      n = step_size(config, t);
      if (config.mode == SamplingMode::kSufficientStatistic) {
        next = sample_estimate(config.family, config.estimator, current, n, rng);
      } else {
        sample_dataset_into(config.family, current, n, rng, buffer);
        next = estimate(config.estimator, buffer);
      }
    } catch (const Error& e) {
      return ChainFailure{t, e.what()};
    }
    if (auto cause = invalid_estimate(config.family, next)) return ChainFailure{t, *cause};
    on_step(t, n, next);
    current = std::move(next);
  }
  return std::nullopt;
}

struct StepTally {
  std::uint64_t alive = 0;
  std::uint64_t exceed = 0;
  std::uint64_t diverse = 0;
  std::uint64_t improve = 0;
  std::uint64_t positive = 0;
  double sq = 0.0, sq2 = 0.0;
  double norm = 0.0, norm2 = 0.0;
  double max = 0.0, max2 = 0.0;

  void merge(const StepTally& o) {
    alive += o.alive;
    exceed += o.exceed;
    diverse += o.diverse;
    improve += o.improve;
    positive += o.positive;
    sq += o.sq;
    sq2 += o.sq2;
    norm += o.norm;
    norm2 += o.norm2;
    max += o.max;
    max2 += o.max2;
  }
};

std::vector<StepTally> run_block(const ChainConfig& config, const MonteCarloOptions& options, std::uint64_t first,
                                 std::uint64_t last) {
  std::vector<StepTally> tally(config.T);
  const bool scalar = config.theta_star.dim() == 1;
  const Eigen::VectorXd& star = config.theta_star.values();
  for (std::uint64_t i = first; i < last; ++i) {
    RandomStream rng = RandomStream::substream(config.seed, i);
    double first_error = 0.0;
    walk_chain(config, rng, [&](std::uint64_t t, std::uint64_t, const ParamPoint& theta) {
      StepTally& s = tally[t - 1];
      const Eigen::VectorXd e = theta.values() - star;
      const double sq = e.squaredNorm();
      const double norm = std::sqrt(sq);
      const double top = theta.values().maxCoeff();
      ++s.alive;
      s.sq += sq;
      s.sq2 += sq * sq;
      s.norm += norm;
      s.norm2 += sq;
      s.max += top;
      s.max2 += top * top;
      if (norm >= options.delta) ++s.exceed;
      if (scalar && theta[0] <= options.epsilon) ++s.diverse;
      if (e.sum() > 0.0) ++s.positive;
      if (t == 1) {
        first_error = norm;
      } else if (norm < first_error) {
        ++s.improve;
      }
    });
  }
  return tally;
}

MetricSeries make_series(std::string name, MetricKind kind, std::size_t steps) {
  MetricSeries s;
  s.name = std::move(name);
  s.kind = kind;
  s.value.assign(steps, std::nan(""));
  s.ci_low.assign(steps, std::nan(""));
  s.ci_high.assign(steps, std::nan(""));
  s.exclusions.assign(steps, 0);
  return s;
}

void set_proportion(MetricSeries& s, std::size_t i, std::uint64_t hits, std::uint64_t n, std::uint64_t excluded) {
  s.exclusions[i] = excluded;
  if (n == 0) return;
  const double p = static_cast<double>(hits) / static_cast<double>(n);
  const double hw = kZ95 * std::sqrt(p * (1.0 - p) / static_cast<double>(n));
  s.value[i] = p;
  s.ci_low[i] = std::max(0.0, p - hw);
  s.ci_high[i] = std::min(1.0, p + hw);
}

void set_moment(MetricSeries& s, std::size_t i, double sum, double sum_sq, std::uint64_t n, std::uint64_t excluded) {
  s.exclusions[i] = excluded;
  if (n == 0) return;
  const double count = static_cast<double>(n);
  const double mean = sum / count;
  double hw = 0.0;
  if (n > 1) {
    const double var = std::max(0.0, (sum_sq - count * mean * mean) / (count - 1.0));
    hw = kZ95 * std::sqrt(var / count);
  }
  s.value[i] = mean;
  s.ci_low[i] = mean - hw;
  s.ci_high[i] = mean + hw;
}

}  // namespace

std::string to_string(SamplingMode mode) {
  return mode == SamplingMode::kDatasets ? "datasets" : "sufficient";
}

std::vector<std::string> validate_chain(const ChainConfig& config) {
  std::vector<std::string> problems;
  if (config.n0 == 0) problems.emplace_back("n0 must be >= 1");
  if (config.T == 0) problems.emplace_back("T must be >= 1");
  if (auto verdict = validate_param(config.family, config.theta_star); !verdict) {
    problems.push_back("theta_star invalid for " + config.family.label() + ": " + verdict.reason);
  }
  if (auto verdict = check_compatible(config.estimator, config.family); !verdict) problems.push_back(verdict.reason);
  if (config.mode == SamplingMode::kSufficientStatistic && !has_direct_sampler(config.family, config.estimator)) {
    problems.push_back("sufficient-statistic sampling is unavailable for " + config.estimator.label() +
                       "; use dataset mode");
  }
  if (config.T > 1 && config.n0 > 0) {
    try {
      // Only explicit schedules can be non-monotone in t.
      const bool monotone = config.schedule.get_if<ExplicitSchedule>() == nullptr;
      for (std::uint64_t t = monotone ? config.T - 1 : 1; t < config.T; ++t) {
        sample_size(config.schedule, t, config.n0);
      }
    } catch (const Error& e) {
      problems.emplace_back(e.what());
    }
  }
  if (const auto* m = config.estimator.get_if<SampleMean>(); m && m->prefix > config.n0) {
    problems.push_back("sample_mean prefix " + std::to_string(m->prefix) + " exceeds n0 = " +
                       std::to_string(config.n0));
  }
  return problems;
}

Trajectory run_chain(const ChainConfig& config, RandomStream& rng) {
  Trajectory out;
  out.estimates.reserve(config.T);
  out.failure = walk_chain(config, rng, [&](std::uint64_t, std::uint64_t n, const ParamPoint& theta) {
    const ParamPoint& previous = out.estimates.empty() ? config.theta_star : out.estimates.back();
    out.increments.emplace_back(theta.values() - previous.values());
    out.step_sizes.push_back(n);
    out.estimates.push_back(theta);
  });
  return out;
}

std::optional<bool> improvement_indicator(const Trajectory& trajectory, const ParamPoint& theta_star) {
  if (trajectory.failure || trajectory.estimates.size() < 2) return std::nullopt;
  const double last = (trajectory.estimates.back().values() - theta_star.values()).norm();
  const double first = (trajectory.estimates.front().values() - theta_star.values()).norm();
  return last < first;
}

const MetricSeries* ReplicationSummary::find(std::string_view name) const {
  for (const auto& s : series) {
    if (s.name == name) return &s;
  }
  return nullptr;
}

const MetricSeries& ReplicationSummary::metric(std::string_view name) const {
  if (const auto* s = find(name)) return *s;
  throw Error(ErrorCode::kConfiguration, "metric '" + std::string(name) + "' was not computed for this chain");
}

double chain_work(const ChainConfig& config, std::uint64_t replications) {
  double per_chain = 0.0;
  if (config.mode == SamplingMode::kSufficientStatistic) {
    per_chain = static_cast<double>(config.T) * static_cast<double>(config.family.param_dim());
  } else {
    const auto width = static_cast<double>(config.family.observation_width());
    for (std::uint64_t t = 1; t <= config.T; ++t) per_chain += static_cast<double>(step_size(config, t)) * width;
  }
  return per_chain * static_cast<double>(replications);
}

ReplicationSummary run_monte_carlo(const ChainConfig& config, const MonteCarloOptions& options) {
  if (auto problems = validate_chain(config); !problems.empty()) {
    std::string message = "invalid chain configuration:";
    for (const auto& p : problems) message += "\n  - " + p;
    throw Error(ErrorCode::kConfiguration, message);
  }
  if (options.replications == 0) throw Error(ErrorCode::kConfiguration, "replications must be >= 1");
  if (!(options.delta > 0.0) || !(options.epsilon > 0.0)) {
    throw Error(ErrorCode::kConfiguration, "delta and epsilon must be positive");
  }
  const double work = chain_work(config, options.replications);
  if (work > options.budget) {
    throw Error(ErrorCode::kBudget, "run needs about " + detail::compact(work) + " draws, above the budget of " +
                                        detail::compact(options.budget) + "; lower R or T, or raise --budget");
  }

  const std::uint64_t R = options.replications;
  const std::uint64_t blocks = (R + kBlockSize - 1) / kBlockSize;
  std::vector<std::vector<StepTally>> partial(blocks);

  unsigned workers = options.parallelism == 0 ? std::max(1u, std::thread::hardware_concurrency()) : options.parallelism;
  workers = static_cast<unsigned>(std::min<std::uint64_t>(workers, blocks));

  std::atomic<std::uint64_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  auto work_loop = [&] {
    try {
      for (std::uint64_t b = next++; b < blocks; b = next++) {
        partial[b] = run_block(config, options, b * kBlockSize, std::min(R, (b + 1) * kBlockSize));
      }
    } catch (...) {
      std::lock_guard lock(failure_mutex);
      if (!failure) failure = std::current_exception();
      next = blocks;
    }
  };
  if (workers <= 1) {
    work_loop();
  } else {
    std::vector<std::jthread> pool;
    pool.reserve(workers);
    for (unsigned w = 0; w < workers; ++w) pool.emplace_back(work_loop);
  }
  if (failure) std::rethrow_exception(failure);

  std::vector<StepTally> total(config.T);
  for (const auto& block : partial) {
    for (std::size_t i = 0; i < total.size(); ++i) total[i].merge(block[i]);
  }

  const std::size_t steps = config.T;
  ReplicationSummary summary{config, R, options.delta, options.epsilon, {}, {}, work};
  auto mse = make_series("mean_sq_error", MetricKind::kMoment, steps);
  auto err = make_series("mean_error", MetricKind::kMoment, steps);
  auto exc = make_series("exceedance", MetricKind::kProbability, steps);
  auto div = make_series("diversity", MetricKind::kProbability, steps);
  auto imp = make_series("improvement", MetricKind::kProbability, steps);
  auto top = make_series("max_estimate", MetricKind::kMoment, steps);
  auto pos = make_series("positive_drift", MetricKind::kProbability, steps);
  auto fail = make_series("failure_rate", MetricKind::kProbability, steps);
  for (std::size_t i = 0; i < steps; ++i) {
    const StepTally& s = total[i];
    const std::uint64_t excluded = R - s.alive;
    set_moment(mse, i, s.sq, s.sq2, s.alive, excluded);
    set_moment(err, i, s.norm, s.norm2, s.alive, excluded);
    set_proportion(exc, i, s.exceed, s.alive, excluded);
    set_proportion(div, i, s.diverse, s.alive, excluded);
    if (i > 0) set_proportion(imp, i, s.improve, s.alive, excluded);
    set_moment(top, i, s.max, s.max2, s.alive, excluded);
    set_proportion(pos, i, s.positive, s.alive, excluded);
    set_proportion(fail, i, excluded, R, 0);
  }
  summary.series = {std::move(mse), std::move(err), std::move(exc)};
  if (config.theta_star.dim() == 1) summary.series.push_back(std::move(div));
  if (steps >= 2) summary.series.push_back(std::move(imp));
  summary.series.push_back(std::move(top));
  summary.series.push_back(std::move(pos));
  summary.series.push_back(std::move(fail));

  for (std::uint64_t i = 0; i < std::min(options.keep_trajectories, R); ++i) {
    RandomStream rng = RandomStream::substream(config.seed, i);
    summary.trajectories.push_back(run_chain(config, rng));
  }
  return summary;
}

}  // namespace collapse_lab

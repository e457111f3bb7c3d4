#include "collapse_lab/scenario.hpp"

#include <chrono>
#include <cmath>
#include <limits>
#include <set>

#include "collapse_lab/analytics.hpp"
#include "collapse_lab/direct_sampling.hpp"
#include "collapse_lab/error.hpp"
#include "text.hpp"

#ifndef COLLAPSE_LAB_VERSION
#define COLLAPSE_LAB_VERSION "0.0.0"
#endif

namespace collapse_lab {

using nlohmann::json;

namespace {

// Stream index reserved for overlay computations; replication streams use
// indices below R.
constexpr std::uint64_t kOverlayStream = std::uint64_t{1} << 63;

[[noreturn]] void fail_at(const std::string& pointer, const std::string& what) {
  throw Error(ErrorCode::kConfiguration, "config " + (pointer.empty() ? std::string("/") : pointer) + ": " + what);
}

std::string escape_token(std::string_view key) {
  std::string out;
  for (char c : key) {
    if (c == '~') out += "~0";
    else if (c == '/') out += "~1";
    else out += c;
  }
  return out;
}

/// Typed, strict view of one JSON object.
class Node {
 public:
  Node(const json& value, std::string pointer) : value_(value), pointer_(std::move(pointer)) {}

  const json& value() const { return value_; }
  const std::string& pointer() const { return pointer_; }

  void require_object() const {
    if (!value_.is_object()) fail_at(pointer_, "expected an object");
  }

  void allow_keys(std::initializer_list<std::string_view> keys) const {
    require_object();
    for (const auto& [key, _] : value_.items()) {
      bool known = false;
      for (auto k : keys) known = known || k == key;
      if (!known) fail_at(child_pointer(key), "unknown key '" + key + "'");
    }
  }

  bool has(std::string_view key) const { return value_.is_object() && value_.contains(key); }
  Node child(std::string_view key) const { return {value_.at(std::string(key)), child_pointer(key)}; }
  Node element(std::size_t i) const { return {value_.at(i), pointer_ + "/" + std::to_string(i)}; }

  double number(std::string_view key, double fallback) const {
    if (!has(key)) return fallback;
    return child(key).as_number();
  }
  std::uint64_t count(std::string_view key, std::uint64_t fallback) const {
    if (!has(key)) return fallback;
    return child(key).as_count();
  }
  std::string text(std::string_view key, std::string fallback) const {
    if (!has(key)) return fallback;
    return child(key).as_text();
  }

  double as_number() const {
    if (!value_.is_number()) fail_at(pointer_, "expected a number");
    const double x = value_.get<double>();
    if (!std::isfinite(x)) fail_at(pointer_, "expected a finite number");
    return x;
  }
  std::uint64_t as_count() const {
    if (value_.is_number_unsigned()) return value_.get<std::uint64_t>();
    if (value_.is_number_integer() && value_.get<std::int64_t>() >= 0) return value_.get<std::uint64_t>();
    // Accept integral floats such as 1e4.
    if (value_.is_number_float()) {
      const double x = value_.get<double>();
      if (x >= 0.0 && x < 0x1.0p64 && std::floor(x) == x) return static_cast<std::uint64_t>(x);
    }
    fail_at(pointer_, "expected a non-negative integer");
  }
  std::string as_text() const {
    if (!value_.is_string()) fail_at(pointer_, "expected a string");
    return value_.get<std::string>();
  }
  bool as_bool() const {
    if (!value_.is_boolean()) fail_at(pointer_, "expected true or false");
    return value_.get<bool>();
  }

 private:
  std::string child_pointer(std::string_view key) const { return pointer_ + "/" + escape_token(key); }

  const json& value_;
  std::string pointer_;
};

// Domain errors raised by the library factories, relabelled with the location.
template <class F>
auto at_location(const Node& node, F&& make) {
  try {
    return make();
  } catch (const Error& e) {
    // Errors already carrying a location pass through unchanged.
    if (std::string_view(e.what()).starts_with("config /")) throw;
    fail_at(node.pointer(), e.what());
  }
}

std::string kind_of(const Node& node) {
  if (node.value().is_string()) return node.as_text();
  node.require_object();
  if (!node.has("kind")) fail_at(node.pointer(), "missing 'kind'");
  return node.child("kind").as_text();
}

FamilySpec parse_family(const Node& node) {
  const std::string kind = kind_of(node);
  const bool object = node.value().is_object();
  auto keys = [&](std::initializer_list<std::string_view> allowed) {
    if (object) node.allow_keys(allowed);
  };
  return at_location(node, [&]() -> FamilySpec {
    if (kind == "gaussian_mean") {
      keys({"kind", "dim", "covariance"});
      if (node.has("covariance")) {
        const Node cov = node.child("covariance");
        if (!cov.value().is_array() || cov.value().empty()) fail_at(cov.pointer(), "expected a non-empty matrix");
        const auto p = static_cast<Eigen::Index>(cov.value().size());
        Eigen::MatrixXd m(p, p);
        for (Eigen::Index i = 0; i < p; ++i) {
          const Node row = cov.element(static_cast<std::size_t>(i));
          if (!row.value().is_array() || static_cast<Eigen::Index>(row.value().size()) != p) {
            fail_at(row.pointer(), "expected a row of length " + std::to_string(p));
          }
          for (Eigen::Index j = 0; j < p; ++j) m(i, j) = row.element(static_cast<std::size_t>(j)).as_number();
        }
        if (node.has("dim") && node.count("dim", 0) != static_cast<std::uint64_t>(p)) {
          fail_at(node.pointer() + "/dim", "does not match the covariance size");
        }
        return FamilySpec::gaussian_mean(m);
      }
      return FamilySpec::gaussian_mean_identity(node.count("dim", 1));
    }
    if (kind == "gaussian_variance") {
      keys({"kind", "mean"});
      return FamilySpec::gaussian_variance(node.number("mean", 0.0));
    }
    if (kind == "exponential") {
      keys({"kind", "dim"});
      return FamilySpec::exponential_rate(node.count("dim", 1));
    }
    if (kind == "gamma_scale") {
      keys({"kind", "shape"});
      return FamilySpec::gamma_scale(node.number("shape", 2.0));
    }
    if (kind == "uniform_upper") {
      keys({"kind", "cap"});
      return FamilySpec::uniform_upper(node.number("cap", 10.0));
    }
    if (kind == "logistic") {
      keys({"kind", "dim"});
      return FamilySpec::logistic_regression(node.count("dim", 2));
    }
    fail_at(node.pointer(), "unknown family '" + kind +
                                "' (expected gaussian_mean, gaussian_variance, exponential, gamma_scale, "
                                "uniform_upper or logistic)");
  });
}

EstimatorSpec parse_estimator(const Node& node, const FamilySpec& family) {
  const std::string kind = kind_of(node);
  const bool object = node.value().is_object();
  auto keys = [&](std::initializer_list<std::string_view> allowed) {
    if (object) node.allow_keys(allowed);
  };
  const std::size_t dim = family.param_dim();
  return at_location(node, [&]() -> EstimatorSpec {
    if (kind == "sample_mean") {
      keys({"kind", "prefix"});
      return EstimatorSpec::sample_mean(dim, node.count("prefix", 0));
    }
    if (kind == "harmonic_mean") {
      keys({"kind"});
      return EstimatorSpec::harmonic_weighted_mean(dim);
    }
    if (kind == "max_observation") {
      keys({"kind", "cap"});
      const auto* u = family.get_if<UniformUpperFamily>();
      return EstimatorSpec::max_observation(node.number("cap", u ? u->cap : 10.0));
    }
    if (kind == "exp_mle") {
      keys({"kind"});
      return EstimatorSpec::exponential_mle(dim);
    }
    if (kind == "gamma_mle") {
      keys({"kind", "shape"});
      const auto* g = family.get_if<GammaScaleFamily>();
      return EstimatorSpec::gamma_scale_mle(node.number("shape", g ? g->shape : 2.0));
    }
    if (kind == "variance_known_mean") {
      keys({"kind", "mean"});
      const auto* v = family.get_if<GaussianVarianceFamily>();
      return EstimatorSpec::variance_known_mean(node.number("mean", v ? v->mean : 0.0));
    }
    if (kind == "biased_mean") {
      keys({"kind", "b"});
      return EstimatorSpec::biased_mean(dim, node.number("b", 1.0));
    }
    if (kind == "logistic_mle") {
      keys({"kind", "max_iter", "tol"});
      const std::uint64_t max_iter = node.count("max_iter", 100);
      if (max_iter > 1'000'000) fail_at(node.pointer() + "/max_iter", "must be at most 1000000");
      return EstimatorSpec::logistic_mle(dim, static_cast<int>(max_iter), node.number("tol", 1e-8));
    }
    fail_at(node.pointer(), "unknown estimator '" + kind +
                                "' (expected sample_mean, harmonic_mean, max_observation, exp_mle, gamma_mle, "
                                "variance_known_mean, biased_mean or logistic_mle)");
  });
}

ScheduleSpec parse_schedule(const Node& node) {
  const std::string kind = kind_of(node);
  const bool object = node.value().is_object();
  auto keys = [&](std::initializer_list<std::string_view> allowed) {
    if (object) node.allow_keys(allowed);
  };
  return at_location(node, [&]() -> ScheduleSpec {
    if (kind == "constant") {
      keys({"kind", "c"});
      return ScheduleSpec::constant(node.number("c", 1.0));
    }
    if (kind == "polynomial") {
      keys({"kind", "a"});
      if (!node.has("a")) fail_at(node.pointer(), "polynomial schedule needs 'a'");
      return ScheduleSpec::polynomial(node.number("a", 0.0));
    }
    if (kind == "geometric") {
      keys({"kind", "b"});
      if (!node.has("b")) fail_at(node.pointer(), "geometric schedule needs 'b'");
      return ScheduleSpec::geometric(node.number("b", 0.0));
    }
    if (kind == "explicit") {
      keys({"kind", "coefficients"});
      if (!node.has("coefficients")) fail_at(node.pointer(), "explicit schedule needs 'coefficients'");
      const Node list = node.child("coefficients");
      if (!list.value().is_array()) fail_at(list.pointer(), "expected an array");
      std::vector<double> c;
      for (std::size_t i = 0; i < list.value().size(); ++i) c.push_back(list.element(i).as_number());
      return ScheduleSpec::explicit_coefficients(std::move(c));
    }
    fail_at(node.pointer(), "unknown schedule '" + kind + "' (expected constant, polynomial, geometric or explicit)");
  });
}

ParamPoint default_theta(const FamilySpec& family) {
  const std::size_t p = family.param_dim();
  if (family.get_if<GaussianMeanFamily>()) return ParamPoint::constant(p, 0.0);
  if (const auto* u = family.get_if<UniformUpperFamily>()) return ParamPoint::scalar((1.0 + u->cap) / 2.0);
  return ParamPoint::constant(p, 1.0);
}

ParamPoint parse_theta(const Node& node) {
  if (node.value().is_number()) return ParamPoint::scalar(node.as_number());
  if (!node.value().is_array() || node.value().empty()) fail_at(node.pointer(), "expected a number or array");
  Eigen::VectorXd v(static_cast<Eigen::Index>(node.value().size()));
  for (std::size_t i = 0; i < node.value().size(); ++i) v(static_cast<Eigen::Index>(i)) = node.element(i).as_number();
  return ParamPoint(std::move(v));
}

ChainCase parse_case(const Node& node, bool top_level) {
  if (!top_level) node.allow_keys({"family", "estimator", "theta_star"});
  if (!node.has("family")) fail_at(node.pointer(), "missing 'family'");
  if (!node.has("estimator")) fail_at(node.pointer(), "missing 'estimator'");
  FamilySpec family = parse_family(node.child("family"));
  EstimatorSpec estimator = parse_estimator(node.child("estimator"), family);
  ParamPoint theta = node.has("theta_star") ? parse_theta(node.child("theta_star")) : default_theta(family);
  return {std::move(family), std::move(estimator), std::move(theta)};
}

template <class T, class F>
std::vector<T> one_or_many(const Node& node, F&& parse) {
  std::vector<T> out;
  if (node.value().is_array()) {
    if (node.value().empty()) fail_at(node.pointer(), "expected a non-empty array");
    for (std::size_t i = 0; i < node.value().size(); ++i) out.push_back(parse(node.element(i)));
  } else {
    out.push_back(parse(node));
  }
  return out;
}

SamplingMode resolve_mode(ModeChoice choice, const ChainCase& c) {
  switch (choice) {
    case ModeChoice::kDatasets: return SamplingMode::kDatasets;
    case ModeChoice::kSufficient: return SamplingMode::kSufficientStatistic;
    case ModeChoice::kAuto: break;
  }
  return has_direct_sampler(c.family, c.estimator) ? SamplingMode::kSufficientStatistic : SamplingMode::kDatasets;
}

std::string cell_name(const ChainConfig& c) {
  return c.family.label() + " / " + c.estimator.label() + " / " + c.schedule.label() + " / n0=" +
         std::to_string(c.n0);
}

ResultRow theory_row(const ScenarioConfig& config, const ChainConfig& cell, std::uint64_t t, std::string metric,
                     double value, double half_width, std::uint64_t draws, std::uint64_t seed) {
  return ResultRow{config.scenario, cell.family.label(), cell.estimator.label(), cell.schedule.label(), cell.n0,
                   cell.T, draws, t, std::move(metric), value, value - half_width, value + half_width, 0, seed};
}

void append_overlay(const ScenarioConfig& config, const ChainConfig& cell, std::vector<ResultRow>& rows) {
  const auto* mean_family = cell.family.get_if<GaussianMeanFamily>();
  const auto* sample_mean = cell.estimator.get_if<SampleMean>();
  if (mean_family && sample_mean && sample_mean->prefix == 0) {
    const double trace = mean_family->covariance.trace();
    for (std::uint64_t t = 1; t <= cell.T; ++t) {
      const double mse = trace * gaussian_mean_mse(cell.n0, cell.schedule, t).value;
      rows.push_back(theory_row(config, cell, t, "mse_theory", mse, 0.0, 0, cell.seed));
    }
  }
  const auto* constant = cell.schedule.get_if<ConstantSchedule>();
  if (cell.family.get_if<GaussianVarianceFamily>() && cell.estimator.get_if<VarianceKnownMean>() && constant &&
      constant->c == 1.0 && cell.n0 >= 2) {
    for (std::uint64_t t = 1; t <= cell.T; ++t) {
      const double risk = variance_chain_risk(cell.n0, t, cell.theta_star[0]);
      rows.push_back(theory_row(config, cell, t, "risk_theory", risk, 0.0, 0, cell.seed));
    }
  }
  const bool asymptotic = (mean_family && sample_mean && sample_mean->prefix == 0) ||
                          cell.estimator.get_if<ExponentialMle>() || cell.estimator.get_if<LogisticMle>();
  if (asymptotic && cell.T >= 2) {
    const std::uint64_t seed = split_seed(cell.seed, kOverlayStream);
    RandomStream cov_rng(seed);
    const AsymptoticCovariance cov = asymptotic_covariance(cell.family, cell.theta_star, config.overlay_draws, cov_rng);
    for (std::uint64_t t = 2; t <= cell.T; ++t) {
      // The same draws for every t keep the overlay curve smooth in t.
      RandomStream rng(split_seed(seed, 1));
      const auto est =
          improvement_probability(cov.matrix, inverse_coefficient_sum(cell.schedule, t), config.overlay_draws, rng);
      rows.push_back(
          theory_row(config, cell, t, "improvement_theory", est.value, est.half_width, config.overlay_draws, seed));
    }
  }
}

}  // namespace

std::string_view library_version() noexcept { return COLLAPSE_LAB_VERSION; }

ScenarioConfig config_from_json(const json& document) {
  const Node root(document, "");
  root.allow_keys({"scenario", "family", "estimator", "theta_star", "cases", "schedule", "schedules", "n0", "T", "R",
                   "seed", "delta", "epsilon", "parallelism", "budget", "trajectories", "mode", "overlay",
                   "overlay_draws", "out"});
  ScenarioConfig config;
  config.document = document;
  config.scenario = root.text("scenario", "custom");
  if (config.scenario.empty() || config.scenario.find_first_of("/\\") != std::string::npos) {
    fail_at("/scenario", "must be a non-empty name without path separators");
  }

  if (!root.has("seed")) fail_at("/seed", "seed required for reproducibility");
  config.seed = root.child("seed").as_count();

  if (root.has("cases")) {
    if (root.has("family") || root.has("estimator") || root.has("theta_star")) {
      fail_at("/cases", "give either 'cases' or top-level family/estimator/theta_star, not both");
    }
    config.cases = one_or_many<ChainCase>(root.child("cases"), [](const Node& n) { return parse_case(n, false); });
  } else {
    config.cases.push_back(parse_case(root, true));
  }

  if (root.has("schedule") && root.has("schedules")) fail_at("/schedules", "give either 'schedule' or 'schedules'");
  if (root.has("schedule") || root.has("schedules")) {
    config.schedules = one_or_many<ScheduleSpec>(root.child(root.has("schedule") ? "schedule" : "schedules"),
                                                 [](const Node& n) { return parse_schedule(n); });
  } else {
    config.schedules.push_back(ScheduleSpec::constant(1.0));
  }

  if (root.has("n0")) {
    config.n0_values = one_or_many<std::uint64_t>(root.child("n0"), [](const Node& n) { return n.as_count(); });
  } else {
    config.n0_values = {100};
  }
  config.T = root.count("T", config.T);
  config.R = root.count("R", config.R);
  config.delta = root.number("delta", config.delta);
  config.epsilon = root.number("epsilon", config.epsilon);
  const std::uint64_t threads = root.count("parallelism", 0);
  if (threads > 4096) fail_at("/parallelism", "must be at most 4096");
  config.parallelism = static_cast<unsigned>(threads);
  config.budget = root.number("budget", config.budget);
  config.trajectories = root.count("trajectories", 0);
  config.overlay = root.has("overlay") ? root.child("overlay").as_bool() : false;
  config.overlay_draws = root.count("overlay_draws", config.overlay_draws);
  config.out = root.text("out", "results");

  const std::string mode = root.text("mode", "auto");
  if (mode == "auto") config.mode = ModeChoice::kAuto;
  else if (mode == "datasets") config.mode = ModeChoice::kDatasets;
  else if (mode == "sufficient") config.mode = ModeChoice::kSufficient;
  else fail_at("/mode", "expected auto, datasets or sufficient");

  if (auto problems = preflight(config); !problems.empty()) {
    std::string message = "pre-flight validation failed:";
    for (const auto& p : problems) message += "\n  - " + p;
    throw Error(ErrorCode::kConfiguration, message);
  }
  return config;
}

FamilySpec family_from_json(const json& node) { return parse_family(Node(node, "")); }

EstimatorSpec estimator_from_json(const json& node, const FamilySpec& family) {
  return parse_estimator(Node(node, ""), family);
}

ScheduleSpec schedule_from_json(const json& node) { return parse_schedule(Node(node, "")); }

ScenarioConfig parse_config(std::string_view text) {
  json document;
  try {
    document = json::parse(text);
  } catch (const json::parse_error& e) {
    throw Error(ErrorCode::kConfiguration, std::string("config is not valid JSON: ") + e.what());
  }
  return config_from_json(document);
}

std::vector<ChainConfig> expand_grid(const ScenarioConfig& config) {
  std::vector<ChainConfig> cells;
  for (const auto& c : config.cases) {
    for (const auto& schedule : config.schedules) {
      for (std::uint64_t n0 : config.n0_values) {
        const std::uint64_t seed = split_seed(config.seed, cells.size());
        cells.push_back(ChainConfig{c.family, c.estimator, schedule, n0, config.T, c.theta_star, seed,
                                    resolve_mode(config.mode, c)});
      }
    }
  }
  return cells;
}

std::vector<std::string> preflight(const ScenarioConfig& config) {
  std::vector<std::string> problems;
  if (config.cases.empty() || config.schedules.empty() || config.n0_values.empty()) {
    problems.emplace_back("the grid is empty");
  }
  if (config.T == 0) problems.emplace_back("T must be >= 1");
  if (config.R == 0) problems.emplace_back("R must be >= 1");
  if (!(config.delta > 0.0)) problems.emplace_back("delta must be positive");
  if (!(config.epsilon > 0.0)) problems.emplace_back("epsilon must be positive");
  if (!(config.budget > 0.0)) problems.emplace_back("budget must be positive");
  if (config.overlay && config.overlay_draws == 0) problems.emplace_back("overlay_draws must be >= 1");
  if (!problems.empty()) return problems;

  std::set<std::string> seen;
  for (const auto& cell : expand_grid(config)) {
    const std::string name = cell_name(cell);
    if (!seen.insert(name).second) problems.push_back(name + ": duplicate grid cell");
    for (const auto& p : validate_chain(cell)) problems.push_back(name + ": " + p);
    if (!validate_chain(cell).empty()) continue;
    try {
      const double work = chain_work(cell, config.R);
      if (work > config.budget) {
        problems.push_back(name + ": needs about " + detail::compact(work) + " draws, above the budget of " +
                           detail::compact(config.budget));
      }
    } catch (const Error& e) {
      problems.push_back(name + ": " + e.what());
    }
  }
  return problems;
}

ScenarioOutput run_scenario(const ScenarioConfig& config, const ProgressSink& progress) {
  if (auto problems = preflight(config); !problems.empty()) {
    std::string message = "pre-flight validation failed:";
    for (const auto& p : problems) message += "\n  - " + p;
    throw Error(ErrorCode::kConfiguration, message);
  }
  const auto cells = expand_grid(config);
  ScenarioOutput out;
  json cell_log = json::array();
  bool trajectory_header = true;
  for (std::size_t i = 0; i < cells.size(); ++i) {
    const ChainConfig& cell = cells[i];
    const auto started = std::chrono::steady_clock::now();
    MonteCarloOptions options;
    options.replications = config.R;
    options.delta = config.delta;
    options.epsilon = config.epsilon;
    options.parallelism = config.parallelism;
    options.budget = config.budget;
    options.keep_trajectories = config.trajectories;
    const ReplicationSummary summary = run_monte_carlo(cell, options);

    auto rows = summary_rows(summary, config.scenario);
    out.rows.insert(out.rows.end(), rows.begin(), rows.end());
    if (config.overlay) append_overlay(config, cell, out.rows);
    if (config.trajectories > 0) {
      out.trajectories_csv += format_trajectories(summary, config.scenario, trajectory_header);
      trajectory_header = false;
    }

    const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
    const double failed = summary.metric("failure_rate").value.back();
    cell_log.push_back({{"index", i},
                        {"family", cell.family.label()},
                        {"estimator", cell.estimator.label()},
                        {"schedule", cell.schedule.label()},
                        {"n0", cell.n0},
                        {"seed", cell.seed},
                        {"mode", to_string(cell.mode)},
                        {"work", summary.work},
                        {"failure_rate_at_T", failed}});
    if (progress) {
      progress("[" + std::to_string(i + 1) + "/" + std::to_string(cells.size()) + "] " + cell_name(cell) + " (" +
               to_string(cell.mode) + ") " + detail::compact(std::round(seconds * 100.0) / 100.0) + " s");
    }
  }
  sort_rows(out.rows);
  out.manifest = {{"version", std::string(library_version())},
                  {"scenario", config.scenario},
                  {"seed", config.seed},
                  {"config", config.document},
                  {"cells", std::move(cell_log)},
                  {"rows", out.rows.size()}};
  return out;
}

std::vector<std::filesystem::path> write_outputs(const ScenarioOutput& output, const ScenarioConfig& config) {
  std::vector<std::filesystem::path> written;
  const auto base = config.out / config.scenario;
  written.push_back(base.string() + ".csv");
  export_csv(output.rows, written.back());
  written.push_back(base.string() + ".manifest.json");
  write_text_file(written.back(), output.manifest.dump(2) + "\n");
  if (!output.trajectories_csv.empty()) {
    written.push_back(base.string() + ".trajectories.csv");
    write_text_file(written.back(), output.trajectories_csv);
  }
  return written;
}

}  // namespace collapse_lab

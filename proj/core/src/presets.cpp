#include <string>
#include <vector>

#include "collapse_lab/error.hpp"
#include "collapse_lab/scenario.hpp"

namespace collapse_lab {

using nlohmann::json;

namespace {

json constant_one() { return {{"kind", "constant"}, {"c", 1}}; }
json polynomial(double a) { return {{"kind", "polynomial"}, {"a", a}}; }

json scenario1(bool paper) {
  return {
      {"scenario", "scenario1"},
      {"cases", json::array({
                    {{"family", {{"kind", "gamma_scale"}, {"shape", 2}}}, {"estimator", "gamma_mle"}, {"theta_star", 1}},
                    {{"family", {{"kind", "exponential"}, {"dim", 1}}}, {"estimator", "exp_mle"}, {"theta_star", 1}},
                    {{"family", {{"kind", "gaussian_mean"}, {"dim", 1}}}, {"estimator", "sample_mean"}, {"theta_star", 0}},
                })},
      {"schedules", json::array({constant_one(), polynomial(1.1)})},
      {"n0", 100},
      {"T", 2000},
      {"R", paper ? 1000 : 100},
      {"seed", 20240601},
      {"delta", 1.0},
      {"overlay", true},
  };
}

json scenario2(const std::string& name, json family, json estimator, json theta, bool paper) {
  const bool logistic = name == "scenario2-logistic";
  std::uint64_t R = paper ? 1'000'000 : 10'000;
  // Each logistic replication runs an iterative fit on every synthetic dataset.
  if (logistic && !paper) R = 1'000;
  return {
      {"scenario", name},
      {"family", std::move(family)},
      {"estimator", std::move(estimator)},
      {"theta_star", std::move(theta)},
      {"schedules", json::array({constant_one(), polynomial(1.0), polynomial(1.5)})},
      {"n0", json::array({100, 200, 400})},
      {"T", 10},
      {"R", R},
      {"seed", 20240602},
      {"overlay", true},
      {"overlay_draws", paper ? 1'000'000 : 100'000},
      // Literal logistic datasets at 10^6 replications need about 1.3e11 draws per cell.
      {"budget", logistic && paper ? 2e11 : 5e10},
  };
}

json scenario3(bool paper) {
  json cases = json::array();
  for (int p : {2, 4, 8}) {
    json family = {{"kind", "gaussian_mean"}, {"dim", p}};
    cases.push_back({{"family", family}, {"estimator", {{"kind", "sample_mean"}, {"prefix", 100}}}});
    cases.push_back({{"family", family}, {"estimator", {{"kind", "biased_mean"}, {"b", 1}}}});
  }
  return {
      {"scenario", "scenario3"},
      {"cases", std::move(cases)},
      {"schedule", constant_one()},
      {"n0", 200},
      {"T", 100},
      {"R", paper ? 10'000 : 1'000},
      {"seed", 20240603},
      {"delta", 1.0},
      {"trajectories", 50},
  };
}

}  // namespace

std::vector<std::string> preset_names() {
  return {"scenario1", "scenario2-gaussian", "scenario2-exponential", "scenario2-logistic", "scenario3"};
}

json preset_document(std::string_view name, bool paper_scale) {
  if (name == "scenario1") return scenario1(paper_scale);
  if (name == "scenario2-gaussian") {
    return scenario2(std::string(name), {{"kind", "gaussian_mean"}, {"dim", 2}}, "sample_mean", {0, 0}, paper_scale);
  }
  if (name == "scenario2-exponential") {
    return scenario2(std::string(name), {{"kind", "exponential"}, {"dim", 2}}, "exp_mle", {1, 2}, paper_scale);
  }
  if (name == "scenario2-logistic") {
    return scenario2(std::string(name), {{"kind", "logistic"}, {"dim", 2}}, "logistic_mle", {1, -1}, paper_scale);
  }
  if (name == "scenario3") return scenario3(paper_scale);
  std::string known;
  for (const auto& n : preset_names()) known += (known.empty() ? "" : ", ") + n;
  throw Error(ErrorCode::kConfiguration, "unknown preset '" + std::string(name) + "'; available presets: " + known);
}

}  // namespace collapse_lab

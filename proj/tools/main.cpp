#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "analytics_command.hpp"
#include "collapse_lab/error.hpp"
#include "collapse_lab/scenario.hpp"

namespace {

using collapse_lab::Error;
using collapse_lab::ErrorCode;
using nlohmann::json;

struct RunFlags {
  std::string target;
  std::optional<std::uint64_t> seed;
  std::optional<std::uint64_t> replications;
  std::optional<unsigned> parallelism;
  std::optional<std::string> out;
  std::optional<double> delta;
  std::optional<double> epsilon;
  std::optional<std::uint64_t> trajectories;
  std::optional<double> budget;
  bool paper_scale = false;
  bool exact_datasets = false;
  bool quiet = false;
};

bool is_preset(const std::string& name) {
  for (const auto& p : collapse_lab::preset_names()) {
    if (p == name) return true;
  }
  return false;
}

json load_target(const std::string& target, bool paper_scale) {
  if (is_preset(target)) return collapse_lab::preset_document(target, paper_scale);
  if (!std::filesystem::exists(target)) {
    // Reuses the preset error so the message lists what is available.
    collapse_lab::preset_document(target);
  }
  if (paper_scale) throw Error(ErrorCode::kConfiguration, "--paper-scale applies to presets only");
  std::ifstream in(target);
  if (!in) throw Error(ErrorCode::kIo, "cannot read " + target);
  std::stringstream buffer;
  buffer << in.rdbuf();
  try {
    return json::parse(buffer.str());
  } catch (const json::parse_error& e) {
    throw Error(ErrorCode::kConfiguration, target + " is not valid JSON: " + e.what());
  }
}

std::optional<unsigned> env_threads() {
  const char* value = std::getenv("COLLAPSE_LAB_THREADS");
  if (value == nullptr || *value == '\0') return std::nullopt;
  char* end = nullptr;
  const unsigned long n = std::strtoul(value, &end, 10);
  if (*end != '\0' || n > 4096) {
    throw Error(ErrorCode::kConfiguration, "COLLAPSE_LAB_THREADS must be an integer in [0, 4096]");
  }
  return static_cast<unsigned>(n);
}

json apply_overrides(json doc, const RunFlags& f) {
  if (f.seed) doc["seed"] = *f.seed;
  if (f.replications) doc["R"] = *f.replications;
  if (f.out) doc["out"] = *f.out;
  if (f.delta) doc["delta"] = *f.delta;
  if (f.epsilon) doc["epsilon"] = *f.epsilon;
  if (f.trajectories) doc["trajectories"] = *f.trajectories;
  if (f.budget) doc["budget"] = *f.budget;
  if (f.exact_datasets) doc["mode"] = "datasets";
  if (f.parallelism) {
    doc["parallelism"] = *f.parallelism;
  } else if (auto env = env_threads()) {
    doc["parallelism"] = *env;
  }
  return doc;
}

template <class F>
void guarded(int& exit_code, F&& body) {
  try {
    body();
  } catch (const Error& e) {
    std::cerr << "error [" << collapse_lab::to_string(e.code()) << "]: " << e.what() << "\n";
    exit_code = 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    exit_code = 1;
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Monte Carlo laboratory for recursive training of parametric models on synthetic data"};
  app.set_version_flag("--version", std::string(collapse_lab::library_version()));
  app.require_subcommand(1);
  int exit_code = 0;

  auto* presets = app.add_subcommand("presets", "List the built-in scenario presets");
  presets->callback([] {
    for (const auto& name : collapse_lab::preset_names()) std::cout << name << "\n";
  });

  std::string show_name;
  bool show_paper = false;
  auto* show = app.add_subcommand("show", "Print the scenario document of a preset");
  show->add_option("preset", show_name, "Preset name")->required();
  show->add_flag("--paper-scale", show_paper, "Use the replication counts of the original study");
  show->callback([&] {
    guarded(exit_code, [&] { std::cout << collapse_lab::preset_document(show_name, show_paper).dump(2) << "\n"; });
  });

  RunFlags flags;
  auto* run = app.add_subcommand("run", "Run a preset or a scenario config file and write CSV + manifest");
  run->add_option("target", flags.target, "Preset name or path to a JSON scenario config")->required();
  run->add_option("--seed", flags.seed, "Base seed");
  run->add_option("-R,--replications", flags.replications, "Replications per grid cell");
  run->add_option("-j,--parallelism", flags.parallelism,
                  "Worker threads (0 = all cores; overrides COLLAPSE_LAB_THREADS)");
  run->add_option("--out", flags.out, "Output directory");
  run->add_option("--delta", flags.delta, "Exceedance threshold delta");
  run->add_option("--epsilon", flags.epsilon, "Diversity threshold epsilon");
  run->add_option("--trajectories", flags.trajectories, "Trajectories exported per cell");
  run->add_option("--budget", flags.budget, "Cap on scalar draws per cell");
  run->add_flag("--paper-scale", flags.paper_scale, "Use the replication counts of the original study");
  run->add_flag("--exact-datasets", flags.exact_datasets,
                "Materialize every synthetic dataset instead of sampling estimator laws");
  run->add_flag("-q,--quiet", flags.quiet, "No progress output");
  run->callback([&] {
    guarded(exit_code, [&] {
      const auto config = collapse_lab::config_from_json(apply_overrides(load_target(flags.target, flags.paper_scale), flags));
      collapse_lab::ProgressSink progress;
      if (!flags.quiet) progress = [](std::string_view line) { std::cerr << line << "\n"; };
      const auto output = collapse_lab::run_scenario(config, progress);
      for (const auto& path : collapse_lab::write_outputs(output, config)) std::cout << path.string() << "\n";
    });
  });

  std::string validate_target;
  auto* validate = app.add_subcommand("validate", "Check a scenario config (or preset) without running it");
  validate->add_option("target", validate_target, "Preset name or path to a JSON scenario config")->required();
  validate->callback([&] {
    guarded(exit_code, [&] {
      const auto config = collapse_lab::config_from_json(load_target(validate_target, false));
      std::cout << "ok: " << collapse_lab::expand_grid(config).size() << " grid cells\n";
    });
  });

  collapse_lab::cli::add_analytics_command(app, exit_code);

  CLI11_PARSE(app, argc, argv);
  return exit_code;
}

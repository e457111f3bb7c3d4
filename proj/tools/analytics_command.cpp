#include "analytics_command.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "collapse_lab/analytics.hpp"
#include "collapse_lab/error.hpp"
#include "collapse_lab/scenario.hpp"

namespace collapse_lab::cli {

namespace {

using nlohmann::json;
using Rows = std::vector<std::pair<std::string, double>>;

std::string exact(double x) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", x);
  return buf;
}

std::vector<std::string> split(const std::string& text, char sep) {
  std::vector<std::string> parts;
  std::stringstream in(text);
  for (std::string part; std::getline(in, part, sep);) parts.push_back(part);
  return parts;
}

double to_double(const std::string& s) {
  std::size_t used = 0;
  const double x = std::stod(s, &used);
  if (used != s.size()) throw Error(ErrorCode::kConfiguration, "not a number: '" + s + "'");
  return x;
}

// Bare kind names, "kind:value" shorthands and full JSON objects.
json component(const std::string& text, const char* parameter) {
  if (!text.empty() && text.front() == '{') return json::parse(text);
  const auto colon = text.find(':');
  if (colon == std::string::npos || parameter == nullptr) return text;
  return {{"kind", text.substr(0, colon)}, {parameter, to_double(text.substr(colon + 1))}};
}

const char* schedule_parameter(const std::string& text) {
  if (text.rfind("polynomial", 0) == 0) return "a";
  if (text.rfind("geometric", 0) == 0) return "b";
  return "c";
}

ScheduleSpec schedule_arg(const std::string& text) {
  return schedule_from_json(component(text, schedule_parameter(text)));
}

std::uint64_t horizon_arg(const std::string& text) {
  if (text == "inf" || text == "infinity") return kUnboundedHorizon;
  std::size_t used = 0;
  const unsigned long long T = std::stoull(text, &used);
  if (used != text.size()) throw Error(ErrorCode::kConfiguration, "T must be an integer or 'inf'");
  return T;
}

ParamPoint vector_arg(const std::string& text) {
  const auto parts = split(text, ',');
  Eigen::VectorXd v(static_cast<Eigen::Index>(parts.size()));
  for (std::size_t i = 0; i < parts.size(); ++i) v(static_cast<Eigen::Index>(i)) = to_double(parts[i]);
  return ParamPoint(std::move(v));
}

Eigen::MatrixXd matrix_arg(const std::string& text) {
  const auto rows = split(text, ';');
  const auto p = static_cast<Eigen::Index>(rows.size());
  Eigen::MatrixXd m(p, p);
  for (Eigen::Index i = 0; i < p; ++i) {
    const auto entries = split(rows[static_cast<std::size_t>(i)], ',');
    if (static_cast<Eigen::Index>(entries.size()) != p) {
      throw Error(ErrorCode::kConfiguration, "covariance must be square, rows separated by ';'");
    }
    for (Eigen::Index j = 0; j < p; ++j) m(i, j) = to_double(entries[static_cast<std::size_t>(j)]);
  }
  return m;
}

struct Shared {
  std::string csv;
  std::string schedule = "constant:1";
  std::string horizon;
  std::string family = "gaussian_mean";
  std::string estimator = "sample_mean";
  std::string theta;
  std::string covariance;
  std::uint64_t n0 = 100;
  std::uint64_t n = 100;
  std::uint64_t p = 1;
  std::uint64_t draws = 1'000'000;
  std::uint64_t seed = 1;
  double v = 1.0;
  double delta = 1.0;
  double s = 0.5;
  double sigma_sq = 1.0;
};

void emit(const std::string& op, const Rows& rows, const std::string& csv) {
  for (const auto& [name, value] : rows) std::cout << name << "," << exact(value) << "\n";
  if (csv.empty()) return;
  const bool fresh = !std::filesystem::exists(csv);
  std::ofstream out(csv, std::ios::app);
  if (!out) throw Error(ErrorCode::kIo, "cannot append to " + csv);
  if (fresh) out << "operation,name,value\n";
  for (const auto& [name, value] : rows) out << op << "," << name << "," << exact(value) << "\n";
}

ParamPoint theta_for(const Shared& a, const FamilySpec& family) {
  if (!a.theta.empty()) return vector_arg(a.theta);
  if (family.get_if<GaussianMeanFamily>()) return ParamPoint::constant(family.param_dim(), 0.0);
  return ParamPoint::constant(family.param_dim(), 1.0);
}

Rows covariance_rows(const Eigen::MatrixXd& m) {
  Rows rows;
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
      rows.emplace_back("cov[" + std::to_string(i) + "][" + std::to_string(j) + "]", m(i, j));
    }
  }
  return rows;
}

}  // namespace

void add_analytics_command(CLI::App& parent, int& exit_code) {
  auto* analytics = parent.add_subcommand("analytics", "Evaluate closed forms and bounds; prints name,value rows");
  analytics->require_subcommand(1);
  auto args = std::make_shared<Shared>();
  analytics->add_option("--csv", args->csv, "Also append operation,name,value rows to this CSV");

  auto op = [&, args](const std::string& name, const std::string& help, auto configure, auto compute) {
    auto* cmd = analytics->add_subcommand(name, help);
    configure(*cmd, *args);
    cmd->callback([&exit_code, args, name, compute] {
      try {
        emit(name, compute(*args), args->csv);
      } catch (const Error& e) {
        std::cerr << "error [" << to_string(e.code()) << "]: " << e.what() << "\n";
        exit_code = 2;
      } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        exit_code = 2;
      }
    });
  };
  auto schedule_opt = [](CLI::App& c, Shared& a) {
    c.add_option("--schedule", a.schedule, "constant:C, polynomial:A, geometric:B or a JSON object")
        ->capture_default_str();
  };
  auto horizon_opt = [](CLI::App& c, Shared& a, bool required) {
    auto* o = c.add_option("--T", a.horizon, "Horizon T (integer or 'inf')");
    if (required) o->required();
    else a.horizon = "inf";
  };
  auto draws_opt = [](CLI::App& c, Shared& a) {
    c.add_option("--draws", a.draws, "Monte Carlo draws")->capture_default_str();
    c.add_option("--seed", a.seed, "Seed of the Monte Carlo stream")->capture_default_str();
  };

  op("gaussian-mse", "Per-coordinate MSE of the recursive Gaussian mean chain",
     [&](CLI::App& c, Shared& a) {
       c.add_option("--n0", a.n0)->capture_default_str();
       schedule_opt(c, a);
       horizon_opt(c, a, true);
     },
     [](const Shared& a) {
       const auto r = gaussian_mean_mse(a.n0, schedule_arg(a.schedule), horizon_arg(a.horizon));
       return Rows{{"mse", r.value}, {"divergent", r.divergent ? 1.0 : 0.0}};
     });

  op("variance-risk", "Population risk of the known-mean variance chain",
     [&](CLI::App& c, Shared& a) {
       c.add_option("--n", a.n)->capture_default_str();
       horizon_opt(c, a, true);
       c.add_option("--sigma-sq", a.sigma_sq)->capture_default_str();
     },
     [](const Shared& a) {
       return Rows{{"risk", variance_chain_risk(a.n, horizon_arg(a.horizon), a.sigma_sq)}};
     });

  op("log-drift", "Per-step drift log(n/2) - psi(n/2) of log sigma^2",
     [&](CLI::App& c, Shared& a) { c.add_option("--n", a.n)->capture_default_str(); },
     [](const Shared& a) {
       return Rows{{"log_drift", variance_chain_log_drift(a.n)}, {"lower_bound", 1.0 / (3.0 * static_cast<double>(a.n))}};
     });

  op("improvement", "Improvement probability P(T) for covariance S and v",
     [&](CLI::App& c, Shared& a) {
       c.add_option("--v", a.v)->required();
       c.add_option("--cov", a.covariance, "Covariance rows, e.g. '1,0;0,4' (default identity)");
       c.add_option("--p", a.p, "Dimension of the identity covariance")->capture_default_str();
       draws_opt(c, a);
     },
     [](const Shared& a) {
       const Eigen::MatrixXd cov = a.covariance.empty()
                                       ? Eigen::MatrixXd::Identity(static_cast<Eigen::Index>(a.p),
                                                                   static_cast<Eigen::Index>(a.p))
                                       : matrix_arg(a.covariance);
       RandomStream rng(a.seed);
       const auto b = improvement_probability_bracketed(cov, a.v, a.draws, rng);
       return Rows{{"improvement", b.estimate.value},
                   {"half_width", b.estimate.half_width},
                   {"draws", static_cast<double>(b.estimate.draws)},
                   {"bracket_root_low", b.lower_root},
                   {"bracket_root_high", b.upper_root},
                   {"bracket_eigenvalue_low", b.lower_eigenvalue},
                   {"bracket_eigenvalue_high", b.upper_eigenvalue}};
     });

  op("identity-bounds", "Lower/upper bounds on P(T) for identity covariance",
     [&](CLI::App& c, Shared& a) {
       c.add_option("--v", a.v)->required();
       c.add_option("--p", a.p)->required();
     },
     [](const Shared& a) {
       const auto b = improvement_bounds_identity(a.v, a.p);
       Rows rows{{"lower", b.lower}};
       if (b.upper) rows.emplace_back("upper", *b.upper);
       rows.emplace_back("upper_raw", b.upper_raw);
       rows.emplace_back("partial", b.partial ? 1.0 : 0.0);
       return rows;
     });

  op("union-bound", "Union tail bound over the chain for an estimator's tail constants",
     [&](CLI::App& c, Shared& a) {
       c.add_option("--estimator", a.estimator, "Estimator kind or JSON")->capture_default_str();
       c.add_option("--family", a.family, "Family kind or JSON")->capture_default_str();
       schedule_opt(c, a);
       c.add_option("--n0", a.n0)->capture_default_str();
       c.add_option("--delta", a.delta)->capture_default_str();
       c.add_option("--s", a.s)->capture_default_str();
       horizon_opt(c, a, false);
     },
     [](const Shared& a) {
       const auto family = family_from_json(component(a.family, nullptr));
       const auto est = estimator_from_json(component(a.estimator, nullptr), family);
       if (!est.tail()) throw Error(ErrorCode::kUnsupported, est.label() + " has no uniform tail constants");
       const auto r = union_tail_bound(*est.tail(), schedule_arg(a.schedule), a.n0, a.delta, a.s,
                                       horizon_arg(a.horizon));
       return Rows{{"bound", r.value},
                   {"divergent", r.divergent ? 1.0 : 0.0},
                   {"vacuous", r.vacuous ? 1.0 : 0.0},
                   {"terms", static_cast<double>(r.terms)},
                   {"partition_norm", r.partition_norm}};
     });

  op("sharp-bound", "Sharp Gaussian exceedance bound",
     [&](CLI::App& c, Shared& a) {
       c.add_option("--n0", a.n0)->capture_default_str();
       schedule_opt(c, a);
       horizon_opt(c, a, true);
       c.add_option("--delta", a.delta)->capture_default_str();
       c.add_option("--p", a.p)->capture_default_str();
     },
     [](const Shared& a) {
       return Rows{{"bound", sharp_gaussian_bound(a.n0, schedule_arg(a.schedule), horizon_arg(a.horizon), a.delta, a.p)}};
     });

  op("asymptotic-covariance", "Asymptotic covariance (inverse Fisher information) of the MLE",
     [&](CLI::App& c, Shared& a) {
       c.add_option("--family", a.family, "Family kind or JSON")->capture_default_str();
       c.add_option("--theta", a.theta, "Comma-separated parameter");
       draws_opt(c, a);
     },
     [](const Shared& a) {
       const auto family = family_from_json(component(a.family, nullptr));
       RandomStream rng(a.seed);
       const auto cov = asymptotic_covariance(family, theta_for(a, family), a.draws, rng);
       Rows rows = covariance_rows(cov.matrix);
       rows.emplace_back("monte_carlo", cov.source == CovarianceSource::kMonteCarlo ? 1.0 : 0.0);
       return rows;
     });

  op("improvement-asymptotic", "Large-n improvement probability for an MLE chain",
     [&](CLI::App& c, Shared& a) {
       c.add_option("--family", a.family, "Family kind or JSON")->capture_default_str();
       c.add_option("--theta", a.theta, "Comma-separated theta*");
       schedule_opt(c, a);
       horizon_opt(c, a, true);
       draws_opt(c, a);
     },
     [](const Shared& a) {
       const auto family = family_from_json(component(a.family, nullptr));
       RandomStream rng(a.seed);
       const auto est = improvement_probability_asymptotic(family, theta_for(a, family), schedule_arg(a.schedule),
                                                           horizon_arg(a.horizon), a.draws, rng);
       return Rows{{"improvement", est.value}, {"half_width", est.half_width}, {"v", est.v}};
     });

  op("drift-ratio", "Drift ratio r_T of the biased-mean chain",
     [&](CLI::App& c, Shared& a) {
       schedule_opt(c, a);
       horizon_opt(c, a, true);
     },
     [](const Shared& a) {
       const auto schedule = schedule_arg(a.schedule);
       const std::uint64_t T = horizon_arg(a.horizon);
       const SeriesValue r = T == kUnboundedHorizon ? drift_ratio_limit(schedule) : SeriesValue{drift_ratio(schedule, T)};
       return Rows{{"drift_ratio", r.value}, {"divergent", r.divergent ? 1.0 : 0.0}};
     });

  op("inverse-sum", "v(T) = sum_{t<T} 1/c_t",
     [&](CLI::App& c, Shared& a) {
       schedule_opt(c, a);
       horizon_opt(c, a, true);
     },
     [](const Shared& a) {
       const auto schedule = schedule_arg(a.schedule);
       const std::uint64_t T = horizon_arg(a.horizon);
       const SeriesValue v = T == kUnboundedHorizon ? inverse_coefficient_sum_limit(schedule)
                                                    : SeriesValue{inverse_coefficient_sum(schedule, T)};
       return Rows{{"v", v.value}, {"divergent", v.divergent ? 1.0 : 0.0}};
     });

  op("collapse-threshold", "Polynomial schedule exponent that avoids collapse for an estimator",
     [&](CLI::App& c, Shared& a) {
       c.add_option("--estimator", a.estimator, "Estimator kind or JSON")->capture_default_str();
       c.add_option("--family", a.family, "Family kind or JSON")->capture_default_str();
     },
     [](const Shared& a) {
       const auto family = family_from_json(component(a.family, nullptr));
       const auto est = estimator_from_json(component(a.estimator, nullptr), family);
       const auto th = collapse_threshold(est.order(), est.bias());
       std::cout << "regime," << to_string(th.regime) << "\n";
       return Rows{{"exponent_above", th.exponent}};
     });

  op("tail-bound", "Uniform tail bound C1 exp(-C2 r(n) delta^gamma)",
     [&](CLI::App& c, Shared& a) {
       c.add_option("--estimator", a.estimator, "Estimator kind or JSON")->capture_default_str();
       c.add_option("--family", a.family, "Family kind or JSON")->capture_default_str();
       c.add_option("--n", a.n)->capture_default_str();
       c.add_option("--delta", a.delta)->capture_default_str();
     },
     [](const Shared& a) {
       const auto family = family_from_json(component(a.family, nullptr));
       const auto est = estimator_from_json(component(a.estimator, nullptr), family);
       return Rows{{"tail_bound", tail_bound(est, a.n, a.delta)}};
     });
}

}  // namespace collapse_lab::cli

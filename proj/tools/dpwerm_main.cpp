// Copyright 2026 The dpwerm Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <CLI11.hpp>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <json.hpp>
#include <string>

#include "dpwerm/io.hpp"
#include "dpwerm/mlearn.hpp"
#include "dpwerm/owl.hpp"
#include "dpwerm/simgen.hpp"
#include "dpwerm/tuner.hpp"
#include "dpwerm/version.hpp"

namespace {

using dpwerm::ConfigError;
using dpwerm::DataError;
using dpwerm::JsonWriter;

constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitData = 3;
constexpr int kExitConvergence = 4;

double parse_epsilon(const std::string& text) {
  if (text == "inf" || text == "Inf" || text == "INF" || text == "infinity") {
    return std::numeric_limits<double>::infinity();
  }
  try {
    return std::stod(text);
  } catch (const std::exception&) {
    throw ConfigError("epsilon '" + text + "' is not a number or 'inf'");
  }
}

std::vector<double> parse_double_list(const std::string& text,
                                      const std::string& what) {
  std::vector<double> out;
  std::string current;
  std::istringstream in(text);
  while (std::getline(in, current, ',')) {
    try {
      out.push_back(std::stod(current));
    } catch (const std::exception&) {
      throw ConfigError(what + ": '" + current + "' is not a number");
    }
  }
  if (out.empty()) {
    throw ConfigError(what + ": empty list");
  }
  return out;
}

std::vector<int> parse_int_list(const std::string& text,
                                const std::string& what) {
  std::vector<int> out;
  for (double v : parse_double_list(text, what)) {
    out.push_back(static_cast<int>(v));
  }
  return out;
}

// "lo:hi,lo:hi,..." per column.
dpwerm::FeatureBounds parse_bounds(const std::string& text, int d) {
  if (text.empty()) {
    return dpwerm::FeatureBounds::unit(d);
  }
  std::vector<double> lo;
  std::vector<double> hi;
  std::istringstream in(text);
  std::string pair;
  while (std::getline(in, pair, ',')) {
    const std::size_t sep = pair.find(':');
    if (sep == std::string::npos) {
      throw ConfigError("--bounds: expected 'lo:hi', got '" + pair + "'");
    }
    try {
      lo.push_back(std::stod(pair.substr(0, sep)));
      hi.push_back(std::stod(pair.substr(sep + 1)));
    } catch (const std::exception&) {
      throw ConfigError("--bounds: '" + pair + "' is not a numeric pair");
    }
  }
  if (static_cast<int>(lo.size()) != d) {
    std::ostringstream msg;
    msg << "--bounds: got " << lo.size() << " column bounds but the data has "
        << d << " features";
    throw ConfigError(msg.str());
  }
  dpwerm::FeatureBounds bounds;
  bounds.lo = Eigen::Map<Eigen::VectorXd>(lo.data(), static_cast<Eigen::Index>(lo.size()));
  bounds.hi = Eigen::Map<Eigen::VectorXd>(hi.data(), static_cast<Eigen::Index>(hi.size()));
  bounds.validate();
  return bounds;
}

void emit(const std::string& doc, const std::string& out_path) {
  if (out_path.empty()) {
    std::cout << doc << "\n";
  } else {
    dpwerm::write_text_file(out_path, doc + "\n");
  }
}

struct FitOptions {
  std::string data_path;
  std::string epsilon_text;
  double gamma = 0.0;
  double weight_bound = 30.0;
  double benefit_clip = 15.0;
  double huber_h = 0.5;
  std::string bounds_text;
  std::string sensitivity_mode = "observed";
  double tail_multiplier = 2.5;
  double effective_fraction = 1.0;
  double weight_diff_sd = 0.0;  // 0 = default (weight bound)
  int max_iters = 10000;
  std::uint64_t seed = 0;
  std::string out_path;
};

dpwerm::SensitivitySpec::Mode parse_mode(const std::string& name) {
  if (name == "observed") return dpwerm::SensitivitySpec::Mode::kObserved;
  if (name == "estimated") return dpwerm::SensitivitySpec::Mode::kEstimatedLargeN;
  if (name == "conservative") return dpwerm::SensitivitySpec::Mode::kConservative;
  throw ConfigError("unknown sensitivity mode '" + name +
                    "' (use observed, estimated, or conservative)");
}

std::string mode_name(dpwerm::SensitivitySpec::Mode mode) {
  switch (mode) {
    case dpwerm::SensitivitySpec::Mode::kObserved: return "observed";
    case dpwerm::SensitivitySpec::Mode::kEstimatedLargeN: return "estimated";
    case dpwerm::SensitivitySpec::Mode::kConservative: return "conservative";
  }
  return "observed";
}

int run_fit(const FitOptions& opt) {
  const dpwerm::TrialRecords records = dpwerm::parse_csv_trial(opt.data_path);
  const int d = static_cast<int>(records.front().x.size());

  dpwerm::OwlConfig cfg;
  cfg.gamma = opt.gamma;
  cfg.epsilon = parse_epsilon(opt.epsilon_text);
  cfg.weight_bound = opt.weight_bound;
  cfg.benefit_clip = opt.benefit_clip;
  cfg.huber_h = opt.huber_h;
  cfg.bounds = parse_bounds(opt.bounds_text, d);
  cfg.sensitivity_mode = parse_mode(opt.sensitivity_mode);
  cfg.tail_multiplier = opt.tail_multiplier;
  cfg.effective_fraction = opt.effective_fraction;
  if (opt.weight_diff_sd > 0.0) cfg.weight_diff_sd = opt.weight_diff_sd;
  cfg.solver.max_iters = opt.max_iters;

  dpwerm::Rng rng(opt.seed);
  const dpwerm::DpOwlFit fit = dpwerm::fit_dp_owl(records, cfg, rng);

  // Only the privatized parameters leave the process; the raw fit is
  // dropped here unless the budget is the no-privacy sentinel (in which
  // case they are one and the same vector).
  std::vector<double> theta(fit.theta_star.theta.data(),
                            fit.theta_star.theta.data() + fit.theta_star.theta.size());
  std::vector<double> lo(cfg.bounds.lo.data(), cfg.bounds.lo.data() + d);
  std::vector<double> hi(cfg.bounds.hi.data(), cfg.bounds.hi.data() + d);

  JsonWriter json;
  json.begin_object()
      .field("tool", "dpwerm")
      .field("version", dpwerm::kVersion)
      .field("command", "fit")
      .field("seed", opt.seed)
      .field("epsilon", cfg.epsilon)
      .field("gamma", cfg.gamma)
      .field("weight_bound", cfg.weight_bound)
      .field("benefit_clip", cfg.benefit_clip)
      .field("huber_h", cfg.huber_h)
      .field("sensitivity_mode", mode_name(cfg.sensitivity_mode))
      .field("sensitivity", fit.delta_sens)
      .field("non_private", std::isinf(cfg.epsilon))
      .field("n", static_cast<std::int64_t>(records.size()))
      .field("d", d)
      .field("bounds_lo", lo)
      .field("bounds_hi", hi)
      .field("theta_star", theta)
      .end_object();
  emit(json.str(), opt.out_path);
  return kExitOk;
}

struct ValueOptions {
  std::string model_path;
  std::string data_path;
  std::string out_path;
};

int run_value(const ValueOptions& opt) {
  std::ifstream model_file(opt.model_path);
  if (!model_file) {
    throw DataError(opt.model_path + ": cannot open model file");
  }
  nlohmann::json model;
  try {
    model_file >> model;
  } catch (const std::exception& e) {
    throw DataError(opt.model_path + ": invalid JSON: " + e.what());
  }
  if (!model.contains("theta_star") || !model.contains("d")) {
    throw DataError(opt.model_path + ": not a fit document");
  }

  const auto theta_values = model["theta_star"].get<std::vector<double>>();
  dpwerm::ModelParams params;
  params.theta = Eigen::Map<const Eigen::VectorXd>(
      theta_values.data(), static_cast<Eigen::Index>(theta_values.size()));
  params.privatized = true;

  const dpwerm::TrialRecords records = dpwerm::parse_csv_trial(opt.data_path);
  const int d = model["d"].get<int>();
  if (records.front().x.size() != d) {
    std::ostringstream msg;
    msg << opt.data_path << ": data has " << records.front().x.size()
        << " features but the model expects " << d;
    throw DataError(msg.str());
  }

  dpwerm::FeatureBounds bounds = dpwerm::FeatureBounds::unit(d);
  if (model.contains("bounds_lo") && model.contains("bounds_hi")) {
    const auto lo = model["bounds_lo"].get<std::vector<double>>();
    const auto hi = model["bounds_hi"].get<std::vector<double>>();
    bounds.lo = Eigen::Map<const Eigen::VectorXd>(lo.data(), static_cast<Eigen::Index>(lo.size()));
    bounds.hi = Eigen::Map<const Eigen::VectorXd>(hi.data(), static_cast<Eigen::Index>(hi.size()));
  }

  const Eigen::MatrixXd x_scaled = dpwerm::preprocess_features(records, bounds);
  const double value = dpwerm::empirical_value(params, records, x_scaled);
  int matched = 0;
  for (std::size_t i = 0; i < records.size(); ++i) {
    if (dpwerm::assign(params, x_scaled.row(static_cast<Eigen::Index>(i)).transpose()) ==
        records[i].treatment) {
      ++matched;
    }
  }

  const auto echo_number = [&model](const char* key) {
    return model.contains(key) && model[key].is_number()
               ? model[key].get<double>()
               : std::numeric_limits<double>::quiet_NaN();
  };
  double model_epsilon = std::numeric_limits<double>::quiet_NaN();
  if (model.contains("epsilon")) {
    model_epsilon = model["epsilon"].is_string()
                        ? parse_epsilon(model["epsilon"].get<std::string>())
                        : model["epsilon"].get<double>();
  }

  JsonWriter json;
  json.begin_object()
      .field("tool", "dpwerm")
      .field("version", dpwerm::kVersion)
      .field("command", "value")
      .field("value", value)
      .field("matched", matched)
      .field("n", static_cast<std::int64_t>(records.size()))
      .field("seed", model.contains("seed")
                         ? model["seed"].get<std::uint64_t>()
                         : std::uint64_t{0})
      .field("epsilon", model_epsilon)
      .field("gamma", echo_number("gamma"))
      .field("weight_bound", echo_number("weight_bound"))
      .field("sensitivity", echo_number("sensitivity"))
      .end_object();
  emit(json.str(), opt.out_path);
  return kExitOk;
}

struct TuneOptions {
  std::string data_path;   // independent dataset; exclusive with sim_n0
  int sim_n0 = 0;          // simulate the independent dataset when > 0
  std::string epsilon_text;
  int n = 0;
  int min_validation = 500;
  std::string candidates_text;
  int repeats = 50;
  std::string metric = "";  // default: accuracy when truth known, else value
  double weight_bound = 30.0;
  double benefit_clip = 15.0;
  double huber_h = 0.5;
  std::string bounds_text;
  int selected_features = 4;
  std::uint64_t seed = 0;
  int threads = 1;
  std::string format = "json";
  std::string out_path;
};

dpwerm::TrialRecords select_features(const dpwerm::TrialRecords& records,
                                     int k) {
  dpwerm::TrialRecords out = records;
  for (dpwerm::TrialRecord& rec : out) {
    rec.x = rec.x.head(k).eval();
  }
  return out;
}

int run_tune(const TuneOptions& opt) {
  dpwerm::Rng rng(opt.seed);

  dpwerm::TuneConfig cfg;
  cfg.n = opt.n;
  cfg.epsilon = parse_epsilon(opt.epsilon_text);
  cfg.min_validation = opt.min_validation;
  cfg.repeats = opt.repeats;
  cfg.threads = opt.threads;
  cfg.candidates = opt.candidates_text.empty()
                       ? dpwerm::TuneConfig::default_candidates()
                       : parse_double_list(opt.candidates_text, "--candidates");

  int d = 0;
  if (opt.sim_n0 > 0) {
    if (!opt.data_path.empty()) {
      throw ConfigError("tune: pass either --data or --sim-n0, not both");
    }
    dpwerm::SimConfig sim = dpwerm::SimConfig::defaults(opt.sim_n0);
    dpwerm::Rng sim_rng = rng.child(0xD0);
    dpwerm::SimData data = dpwerm::generate(sim, sim_rng);
    cfg.independent = select_features(data.records, opt.selected_features);
    cfg.optimal = data.optimal;
    cfg.metric = opt.metric == "value" ? dpwerm::TuneConfig::Metric::kValue
                                       : dpwerm::TuneConfig::Metric::kAccuracy;
    d = opt.selected_features;
  } else {
    if (opt.data_path.empty()) {
      throw ConfigError("tune: need --data or --sim-n0");
    }
    cfg.independent = dpwerm::parse_csv_trial(opt.data_path);
    d = static_cast<int>(cfg.independent.front().x.size());
    if (opt.metric == "accuracy") {
      // Leave the metric set but with no truth labels, so the config check
      // explains the problem.
      cfg.metric = dpwerm::TuneConfig::Metric::kAccuracy;
    } else {
      cfg.metric = dpwerm::TuneConfig::Metric::kValue;
    }
  }

  cfg.owl.weight_bound = opt.weight_bound;
  cfg.owl.benefit_clip = opt.benefit_clip;
  cfg.owl.huber_h = opt.huber_h;
  cfg.owl.bounds = parse_bounds(opt.bounds_text, d);

  dpwerm::Rng tune_rng = rng.child(0x70);
  const dpwerm::TuneResult result = dpwerm::tune_gamma(cfg, tune_rng);
  const double chosen_sensitivity =
      2.0 * cfg.owl.weight_bound / result.chosen_gamma;

  JsonWriter json;
  json.begin_object()
      .field("tool", "dpwerm")
      .field("version", dpwerm::kVersion)
      .field("command", "tune")
      .field("seed", opt.seed)
      .field("epsilon", cfg.epsilon)
      .field("n", cfg.n)
      .field("n0", static_cast<std::int64_t>(cfg.independent.size()))
      .field("min_validation", cfg.min_validation)
      .field("repeats", cfg.repeats)
      .field("metric",
             cfg.metric == dpwerm::TuneConfig::Metric::kAccuracy ? "accuracy"
                                                                 : "value")
      .field("weight_bound", cfg.owl.weight_bound)
      .field("gamma", result.chosen_gamma)
      .field("sensitivity", chosen_sensitivity)
      .field("chosen_gamma", result.chosen_gamma)
      .field("chosen_index", result.chosen_index)
      .field("candidates", result.candidate_gammas)
      .field("mean_metric", result.mean_metric);
  json.begin_array("repeat_metrics");
  for (const std::vector<double>& row : result.repeat_metrics) {
    json.element(row);
  }
  json.end_array().end_object();

  const std::string csv = dpwerm::tune_result_csv(result);
  if (!opt.out_path.empty()) {
    dpwerm::write_text_file(opt.out_path + ".json", json.str() + "\n");
    dpwerm::write_text_file(opt.out_path + ".csv", csv);
  } else if (opt.format == "csv") {
    std::cout << csv;
  } else {
    std::cout << json.str() << "\n";
  }
  return kExitOk;
}

struct SimulateOptions {
  std::string epsilons_text = "0.5,1,2,5";
  std::string sizes_text = "200,500,1000";
  std::string gamma_map_text;  // "eps:n:gamma;..."
  double gamma = 0.0;          // single gamma for every cell
  bool auto_tune = false;
  int repeats = 200;
  int test_size = 5000;
  int tune_repeats = 50;
  int tune_n0 = 1000;
  int tune_min_validation = 500;
  std::uint64_t seed = 0;
  int threads = 1;
  std::string format = "csv";
  std::string out_path;
};

std::vector<dpwerm::CellGamma> parse_gamma_map(const std::string& text) {
  std::vector<dpwerm::CellGamma> out;
  std::istringstream in(text);
  std::string entry;
  while (std::getline(in, entry, ';')) {
    std::istringstream fields(entry);
    std::string eps_text, n_text, gamma_text;
    if (!std::getline(fields, eps_text, ':') ||
        !std::getline(fields, n_text, ':') ||
        !std::getline(fields, gamma_text)) {
      throw ConfigError("--gamma-map: expected 'eps:n:gamma', got '" + entry +
                        "'");
    }
    dpwerm::CellGamma cell;
    cell.cell.epsilon = parse_epsilon(eps_text);
    try {
      cell.cell.n = std::stoi(n_text);
      cell.gamma = std::stod(gamma_text);
    } catch (const std::exception&) {
      throw ConfigError("--gamma-map: '" + entry + "' is not numeric");
    }
    out.push_back(cell);
  }
  if (out.empty()) {
    throw ConfigError("--gamma-map: empty map");
  }
  return out;
}

int run_simulate(const SimulateOptions& opt) {
  dpwerm::Rng rng(opt.seed);

  std::vector<std::string> eps_parts;
  {
    std::istringstream in(opt.epsilons_text);
    std::string part;
    while (std::getline(in, part, ',')) eps_parts.push_back(part);
  }
  const std::vector<int> sizes = parse_int_list(opt.sizes_text, "--sizes");
  std::vector<dpwerm::GridCell> grid;
  for (const std::string& eps_text : eps_parts) {
    const double eps = parse_epsilon(eps_text);
    for (int n : sizes) {
      grid.push_back({eps, n});
    }
  }
  if (grid.empty()) {
    throw ConfigError("simulate: empty grid");
  }

  dpwerm::ExperimentConfig cfg;
  cfg.sim = dpwerm::SimConfig::defaults();
  cfg.repeats = opt.repeats;
  cfg.test_size = opt.test_size;
  cfg.threads = opt.threads;

  std::vector<dpwerm::CellGamma> gammas;
  if (!opt.gamma_map_text.empty()) {
    gammas = parse_gamma_map(opt.gamma_map_text);
  } else if (opt.gamma > 0.0) {
    for (const dpwerm::GridCell& cell : grid) {
      gammas.push_back({cell, opt.gamma});
    }
  } else if (opt.auto_tune) {
    // One independent dataset and one tuning pass per grid cell; streams are
    // derived per cell so the loop order does not matter.
    for (std::size_t c = 0; c < grid.size(); ++c) {
      dpwerm::Rng cell_rng = rng.child(dpwerm::salt_pair(0xA0, c));
      dpwerm::SimConfig sim = dpwerm::SimConfig::defaults(opt.tune_n0);
      dpwerm::Rng gen_rng = cell_rng.child(1);
      dpwerm::SimData independent = dpwerm::generate(sim, gen_rng);

      dpwerm::TuneConfig tune;
      tune.n = grid[c].n;
      tune.epsilon = grid[c].epsilon;
      tune.independent =
          select_features(independent.records, cfg.selected_features);
      tune.optimal = independent.optimal;
      tune.min_validation = opt.tune_min_validation;
      tune.candidates = dpwerm::TuneConfig::default_candidates();
      tune.repeats = opt.tune_repeats;
      tune.metric = dpwerm::TuneConfig::Metric::kAccuracy;
      tune.threads = opt.threads;
      tune.owl = cfg.owl;
      tune.owl.bounds = dpwerm::FeatureBounds::unit(cfg.selected_features);

      dpwerm::Rng tune_rng = cell_rng.child(2);
      const dpwerm::TuneResult tuned = dpwerm::tune_gamma(tune, tune_rng);
      gammas.push_back({grid[c], tuned.chosen_gamma});
    }
  } else {
    throw ConfigError(
        "simulate: supply --gamma, --gamma-map, or --auto-tune");
  }

  dpwerm::Rng experiment_rng = rng.child(0xE0);
  const dpwerm::ExperimentTable table =
      dpwerm::run_experiment(grid, cfg, gammas, experiment_rng);

  JsonWriter json;
  json.begin_object()
      .field("tool", "dpwerm")
      .field("version", dpwerm::kVersion)
      .field("command", "simulate")
      .field("seed", opt.seed)
      .field("repeats", opt.repeats)
      .field("test_size", opt.test_size)
      .field("weight_bound", cfg.owl.weight_bound)
      .field("benefit_clip", cfg.owl.benefit_clip)
      .field("huber_h", cfg.owl.huber_h);
  json.begin_array("cells");
  for (const dpwerm::ExperimentCell& cell : table.cells) {
    json.begin_object()
        .field("epsilon", cell.epsilon)
        .field("n", cell.n)
        .field("gamma", cell.gamma)
        .field("sensitivity", 2.0 * cfg.owl.weight_bound / cell.gamma)
        .field("repeats", cell.repeats)
        .field("acc_mean", cell.acc_mean)
        .field("acc_lo", cell.acc_lo)
        .field("acc_hi", cell.acc_hi)
        .field("val_mean", cell.val_mean)
        .field("val_lo", cell.val_lo)
        .field("val_hi", cell.val_hi)
        .field("acc_scores", cell.acc_scores)
        .field("val_scores", cell.val_scores)
        .end_object();
  }
  json.end_array().end_object();

  const std::string csv = dpwerm::experiment_table_csv(table);
  if (!opt.out_path.empty()) {
    dpwerm::write_text_file(opt.out_path + ".json", json.str() + "\n");
    dpwerm::write_text_file(opt.out_path + ".csv", csv);
  } else if (opt.format == "json") {
    std::cout << json.str() << "\n";
  } else {
    std::cout << csv;
  }
  return kExitOk;
}

struct MlearnOptions {
  std::string data_path;
  double gamma = 0.0;
  std::string epsilon_text;
  std::string g_kind = "constant";
  std::string residualizer = "none";
  int match_size = 1;
  int affected_set_size = 1;
  double sup_g = 0.0;  // 0 = use the default when one exists
  double huber_h = 0.5;
  std::string bounds_text;
  bool sign_of_abs = false;
  std::uint64_t seed = 0;
  std::string out_path;
};

int run_mlearn(const MlearnOptions& opt) {
  const dpwerm::TrialRecords records = dpwerm::parse_csv_trial(opt.data_path);
  const int d = static_cast<int>(records.front().x.size());

  dpwerm::MlearnConfig cfg;
  cfg.gamma = opt.gamma;
  cfg.huber_h = opt.huber_h;
  cfg.affected_set_size = opt.affected_set_size;
  cfg.sign_of_abs_difference = opt.sign_of_abs;
  if (opt.g_kind == "constant") {
    cfg.g_kind = dpwerm::MlearnConfig::GKind::kConstantOne;
  } else if (opt.g_kind == "identity") {
    cfg.g_kind = dpwerm::MlearnConfig::GKind::kIdentity;
  } else {
    throw ConfigError("--g: expected 'constant' or 'identity'");
  }
  if (opt.residualizer == "none") {
    cfg.residualizer = dpwerm::MlearnConfig::Residualizer::kNone;
  } else if (opt.residualizer == "ols") {
    cfg.residualizer = dpwerm::MlearnConfig::Residualizer::kLinearOls;
  } else {
    throw ConfigError("--residualizer: expected 'none' or 'ols'");
  }
  if (opt.sup_g > 0.0) cfg.sup_g = opt.sup_g;

  const double epsilon = parse_epsilon(opt.epsilon_text);
  const dpwerm::FeatureBounds bounds = parse_bounds(opt.bounds_text, d);

  const dpwerm::Residualized residual =
      dpwerm::residualize(records, cfg.residualizer);

  dpwerm::MlearnProblem problem;
  problem.x_scaled = dpwerm::preprocess_features(records, bounds);
  problem.treatments.resize(records.size());
  for (std::size_t i = 0; i < records.size(); ++i) {
    problem.treatments[i] = records[i].treatment;
  }
  problem.residual_benefits = residual.values;

  const dpwerm::MatchedSets matches = dpwerm::build_matches(
      problem.x_scaled, problem.treatments, opt.match_size);

  const dpwerm::ModelParams theta_hat =
      dpwerm::fit_mlearn(problem, matches, cfg);
  const double delta_sens = dpwerm::mlearn_sensitivity(cfg);
  dpwerm::Rng rng(opt.seed);
  const dpwerm::ModelParams theta_star =
      std::isinf(epsilon)
          ? dpwerm::ModelParams{theta_hat.theta, true}
          : dpwerm::privatize_mlearn(theta_hat, epsilon, delta_sens, rng);

  std::vector<double> theta(theta_star.theta.data(),
                            theta_star.theta.data() + theta_star.theta.size());

  JsonWriter json;
  json.begin_object()
      .field("tool", "dpwerm")
      .field("version", dpwerm::kVersion)
      .field("command", "mlearn")
      .field("seed", opt.seed)
      .field("epsilon", epsilon)
      .field("gamma", cfg.gamma)
      .field("weight_bound", cfg.resolved_sup_g())
      .field("sup_g", cfg.resolved_sup_g())
      .field("affected_set_size", cfg.affected_set_size)
      .field("match_size", opt.match_size)
      .field("sensitivity", delta_sens)
      .field("non_private", std::isinf(epsilon))
      .field("residualizer", opt.residualizer)
      .field("residualizer_fallback", residual.used_mean_fallback)
      .field("n", static_cast<std::int64_t>(records.size()))
      .field("d", d)
      .field("theta_star", theta)
      .end_object();
  emit(json.str(), opt.out_path);
  return kExitOk;
}

void print_error(const std::string& kind, int code, const std::string& message) {
  std::cerr << "{\"error\":\"" << kind << "\",\"exit\":" << code
            << ",\"message\":\"" << dpwerm::escape_json(message) << "\"}"
            << std::endl;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Differentially private weighted empirical risk minimization "
               "and outcome weighted learning"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string("dpwerm ") + dpwerm::kVersion);

  FitOptions fit;
  CLI::App* fit_cmd = app.add_subcommand(
      "fit", "Fit a DP-OWL model and release privatized parameters");
  fit_cmd->add_option("--data", fit.data_path, "Trial CSV (x1..xd,A,B[,P])")
      ->required();
  fit_cmd->add_option("--epsilon", fit.epsilon_text,
                      "Privacy budget (or 'inf' for no privacy)")
      ->required();
  fit_cmd->add_option("--gamma", fit.gamma, "Regularization constant")
      ->required();
  fit_cmd->add_option("--weight-bound", fit.weight_bound, "Weight upper bound");
  fit_cmd->add_option("--benefit-clip", fit.benefit_clip,
                      "Benefit clipping threshold");
  fit_cmd->add_option("--huber-h", fit.huber_h, "Huber smoothing parameter");
  fit_cmd->add_option("--bounds", fit.bounds_text,
                      "Per-column clipping bounds 'lo:hi,lo:hi,...'");
  fit_cmd->add_option("--sensitivity", fit.sensitivity_mode,
                      "Weight provenance: observed|estimated|conservative");
  fit_cmd->add_option("--tail-multiplier", fit.tail_multiplier,
                      "Estimated mode: retained tail multiplier");
  fit_cmd->add_option("--effective-fraction", fit.effective_fraction,
                      "Estimated mode: effective sample fraction");
  fit_cmd->add_option("--weight-diff-sd", fit.weight_diff_sd,
                      "Estimated mode: weight-difference sd (default W)");
  fit_cmd->add_option("--max-iters", fit.max_iters, "Solver iteration cap");
  fit_cmd->add_option("--seed", fit.seed, "RNG seed");
  fit_cmd->add_option("--out", fit.out_path, "Output JSON path");

  ValueOptions value;
  CLI::App* value_cmd = app.add_subcommand(
      "value", "Empirical treatment value of a released model on a dataset");
  value_cmd->add_option("--model", value.model_path, "fit output JSON")
      ->required();
  value_cmd->add_option("--data", value.data_path, "Trial CSV")->required();
  value_cmd->add_option("--out", value.out_path, "Output JSON path");

  TuneOptions tune;
  CLI::App* tune_cmd = app.add_subcommand(
      "tune", "Pick the regularization constant on an independent dataset");
  tune_cmd->add_option("--data", tune.data_path, "Independent trial CSV");
  tune_cmd->add_option("--sim-n0", tune.sim_n0,
                       "Simulate the independent dataset with this size");
  tune_cmd->add_option("--epsilon", tune.epsilon_text, "Privacy budget")
      ->required();
  tune_cmd->add_option("--n", tune.n, "Target training size")->required();
  tune_cmd->add_option("--min-validation", tune.min_validation,
                       "Minimum validation size m");
  tune_cmd->add_option("--candidates", tune.candidates_text,
                       "Comma-separated gammas (default 1,21,...,601)");
  tune_cmd->add_option("--repeats", tune.repeats, "Repeats per candidate");
  tune_cmd->add_option("--metric", tune.metric, "accuracy|value");
  tune_cmd->add_option("--weight-bound", tune.weight_bound, "Weight bound");
  tune_cmd->add_option("--benefit-clip", tune.benefit_clip, "Benefit clip");
  tune_cmd->add_option("--huber-h", tune.huber_h, "Huber parameter");
  tune_cmd->add_option("--bounds", tune.bounds_text, "Clipping bounds");
  tune_cmd->add_option("--selected-features", tune.selected_features,
                       "Leading features used when simulating");
  tune_cmd->add_option("--seed", tune.seed, "RNG seed");
  tune_cmd->add_option("--threads", tune.threads, "Worker cap");
  tune_cmd->add_option("--format", tune.format, "stdout format json|csv");
  tune_cmd->add_option("--out", tune.out_path,
                       "Output prefix (writes .json and .csv)");

  SimulateOptions sim;
  CLI::App* sim_cmd = app.add_subcommand(
      "simulate", "Monte-Carlo accuracy/value table on synthetic trials");
  sim_cmd->add_option("--epsilons", sim.epsilons_text,
                      "Comma-separated budgets; 'inf' allowed");
  sim_cmd->add_option("--sizes", sim.sizes_text, "Comma-separated sizes");
  sim_cmd->add_option("--gamma-map", sim.gamma_map_text,
                      "Per-cell gammas 'eps:n:gamma;...'");
  sim_cmd->add_option("--gamma", sim.gamma, "One gamma for every cell");
  sim_cmd->add_flag("--auto-tune", sim.auto_tune,
                    "Tune gamma per cell on a fresh independent dataset");
  sim_cmd->add_option("--repeats", sim.repeats, "Repeats per cell");
  sim_cmd->add_option("--test-size", sim.test_size, "Test set size");
  sim_cmd->add_option("--tune-repeats", sim.tune_repeats,
                      "Tuning repeats per candidate");
  sim_cmd->add_option("--tune-n0", sim.tune_n0, "Tuning dataset size");
  sim_cmd->add_option("--tune-min-validation", sim.tune_min_validation,
                      "Tuning minimum validation size");
  sim_cmd->add_option("--seed", sim.seed, "RNG seed");
  sim_cmd->add_option("--threads", sim.threads, "Worker cap");
  sim_cmd->add_option("--format", sim.format, "stdout format json|csv");
  sim_cmd->add_option("--out", sim.out_path,
                      "Output prefix (writes .json and .csv)");

  MlearnOptions mlearn;
  CLI::App* mlearn_cmd = app.add_subcommand(
      "mlearn", "Matched-learning fit with privatized parameters");
  mlearn_cmd->add_option("--data", mlearn.data_path, "Trial CSV")->required();
  mlearn_cmd->add_option("--gamma", mlearn.gamma, "Regularization constant")
      ->required();
  mlearn_cmd->add_option("--epsilon", mlearn.epsilon_text, "Privacy budget")
      ->required();
  mlearn_cmd->add_option("--g", mlearn.g_kind, "Pair weight: constant|identity");
  mlearn_cmd->add_option("--residualizer", mlearn.residualizer, "none|ols");
  mlearn_cmd->add_option("--match-size", mlearn.match_size,
                         "Opposite-arm matches per subject");
  mlearn_cmd->add_option("--affected-size", mlearn.affected_set_size,
                         "Declared |S| for the sensitivity");
  mlearn_cmd->add_option("--sup-g", mlearn.sup_g, "Supremum of g");
  mlearn_cmd->add_option("--huber-h", mlearn.huber_h, "Huber parameter");
  mlearn_cmd->add_option("--bounds", mlearn.bounds_text, "Clipping bounds");
  mlearn_cmd->add_flag("--sign-abs", mlearn.sign_of_abs,
                       "Use sign(|Bi-Bj|) in the matched loss");
  mlearn_cmd->add_option("--seed", mlearn.seed, "RNG seed");
  mlearn_cmd->add_option("--out", mlearn.out_path, "Output JSON path");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    print_error("config", kExitConfig, e.what());
    return kExitConfig;
  }

  try {
    if (fit_cmd->parsed()) return run_fit(fit);
    if (value_cmd->parsed()) return run_value(value);
    if (tune_cmd->parsed()) return run_tune(tune);
    if (sim_cmd->parsed()) return run_simulate(sim);
    if (mlearn_cmd->parsed()) return run_mlearn(mlearn);
    print_error("config", kExitConfig, "no subcommand given");
    return kExitConfig;
  } catch (const ConfigError& e) {
    print_error("config", kExitConfig, e.what());
    return kExitConfig;
  } catch (const DataError& e) {
    print_error("data", kExitData, e.what());
    return kExitData;
  } catch (const dpwerm::ConvergenceError& e) {
    print_error("convergence", kExitConvergence, e.what());
    return kExitConvergence;
  } catch (const std::exception& e) {
    print_error("internal", kExitConfig, e.what());
    return kExitConfig;
  }
}

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

#include "dpwerm/simgen.hpp"

#include <atomic>
#include <cmath>
#include <sstream>
#include <thread>

namespace dpwerm {

namespace {

Eigen::VectorXd pad_coefficients(std::initializer_list<double> values, int d) {
  Eigen::VectorXd out = Eigen::VectorXd::Zero(d + 1);
  int i = 0;
  for (double v : values) {
    if (i > d) {
      throw ConfigError("simgen: more decision coefficients than features");
    }
    out[i++] = v;
  }
  return out;
}

}  // namespace

SimConfig SimConfig::defaults(int n) {
  SimConfig cfg;
  cfg.n = n;
  cfg.decision_coefficients = pad_coefficients({1.0, 1.0, 1.0, -1.8, -2.2}, cfg.d);
  cfg.tn_means.resize(cfg.d);
  for (int j = 0; j < cfg.d; ++j) {
    cfg.tn_means[j] = static_cast<double>(j + 1) / static_cast<double>(cfg.d + 1);
  }
  return cfg;
}

void SimConfig::validate() const {
  if (n < 1) throw ConfigError("simgen: n must be >= 1");
  if (d < 1) throw ConfigError("simgen: d must be >= 1");
  if (decision_coefficients.size() != d + 1) {
    std::ostringstream msg;
    msg << "simgen: decision coefficients must have length d+1 = " << d + 1
        << ", got " << decision_coefficients.size();
    throw ConfigError(msg.str());
  }
  if (!(benefit_sd > 0.0)) {
    throw ConfigError("simgen: benefit noise sd must be positive");
  }
  if (benefit_feature_index < 0 || benefit_feature_index >= d) {
    throw ConfigError("simgen: benefit feature index out of range");
  }
  if (feature_dist == FeatureDist::kTruncatedNormal) {
    if (tn_means.size() != d) {
      throw ConfigError("simgen: truncated-normal means must have length d");
    }
    if (!(tn_sd > 0.0)) {
      throw ConfigError("simgen: truncated-normal sd must be positive");
    }
  }
}

double decision_value(const SimConfig& cfg, const Eigen::VectorXd& x) {
  return cfg.decision_coefficients[0] +
         cfg.decision_coefficients.tail(cfg.d).dot(x);
}

double benefit_mean(const SimConfig& cfg, const Eigen::VectorXd& x,
                    int treatment) {
  return cfg.benefit_intercept +
         cfg.benefit_feature_coef * x[cfg.benefit_feature_index] +
         cfg.benefit_signal_coef * static_cast<double>(treatment) *
             decision_value(cfg, x);
}

SimData generate(const SimConfig& cfg, Rng& rng) {
  cfg.validate();
  SimData data;
  data.records.resize(static_cast<std::size_t>(cfg.n));
  data.optimal.resize(static_cast<std::size_t>(cfg.n));
  std::vector<double> benefits(static_cast<std::size_t>(cfg.n));

  for (int i = 0; i < cfg.n; ++i) {
    TrialRecord& rec = data.records[static_cast<std::size_t>(i)];
    rec.x.resize(cfg.d);
    for (int j = 0; j < cfg.d; ++j) {
      if (cfg.feature_dist == SimConfig::FeatureDist::kUniform01) {
        rec.x[j] = rng.next_double();
      } else {
        double v;
        do {
          v = cfg.tn_means[j] + cfg.tn_sd * rng.next_gaussian();
        } while (v < 0.0 || v > 1.0);
        rec.x[j] = v;
      }
    }
    rec.treatment = rng.next_double() < 0.5 ? -1 : 1;
    rec.propensity = 0.5;
    data.optimal[static_cast<std::size_t>(i)] =
        decision_value(cfg, rec.x) > 0.0 ? 1 : -1;
    benefits[static_cast<std::size_t>(i)] =
        benefit_mean(cfg, rec.x, rec.treatment) +
        cfg.benefit_sd * rng.next_gaussian();
  }

  benefits = shift_benefits(benefits);
  for (int i = 0; i < cfg.n; ++i) {
    data.records[static_cast<std::size_t>(i)].benefit =
        benefits[static_cast<std::size_t>(i)];
  }
  return data;
}

namespace {

// Alternative decision functions for the robustness scenarios. The active
// coefficients of each template sum to -2 so that the decision value stays
// mean-zero under uniform features, like the baseline.
Eigen::VectorXd theta_template(int which, int d) {
  switch (which) {
    case 0:
      return pad_coefficients({1.0, 1.0, 1.0, -1.8, -2.2}, d);
    case 1:
      return pad_coefficients({1.0, -1.0, -1.0, 1.5, -1.5}, d);
    case 2:
      return pad_coefficients({1.0, -0.5, 0.5, 1.0, 1.5, -2.5, -2.0}, d);
    default:
      throw ConfigError("simgen: unknown decision-function variant");
  }
}

Eigen::VectorXd sparsity_template(int active, int d) {
  switch (active) {
    case 2:
      return pad_coefficients({1.0, 2.0, -4.0}, d);
    case 4:
      return pad_coefficients({1.0, 1.0, 1.0, -1.8, -2.2}, d);
    case 6:
      return pad_coefficients({1.0, 1.0, -1.0, 1.5, -1.5, 1.8, -3.8}, d);
    case 8:
      return pad_coefficients(
          {1.0, 0.5, 0.5, -0.9, -1.1, 0.5, 0.5, -0.9, -1.1}, d);
    default:
      throw ConfigError("simgen: unknown sparsity variant");
  }
}

}  // namespace

SimConfig scenario_variant(const SimConfig& base,
                           const ScenarioVariant& variant) {
  SimConfig out = base;
  if (const auto* size = std::get_if<SizeVariant>(&variant)) {
    if (size->n0 < 1) throw ConfigError("simgen: variant size must be >= 1");
    out.n = size->n0;
  } else if (const auto* theta = std::get_if<ThetaVariant>(&variant)) {
    out.decision_coefficients = theta_template(theta->which, base.d);
  } else if (std::get_if<TruncatedNormalVariant>(&variant)) {
    out.feature_dist = SimConfig::FeatureDist::kTruncatedNormal;
    if (out.tn_means.size() != base.d) {
      out.tn_means = SimConfig::defaults(base.n).tn_means;
    }
  } else if (const auto* sparsity = std::get_if<SparsityVariant>(&variant)) {
    out.decision_coefficients = sparsity_template(sparsity->active, base.d);
  } else {
    throw ConfigError("simgen: unknown scenario variant");
  }
  return out;
}

ScoreSummary summarize_scores(const std::vector<double>& scores) {
  if (scores.empty()) {
    throw DataError("summarize_scores: no scores");
  }
  const auto count = static_cast<double>(scores.size());
  double sum = 0.0;
  for (double s : scores) sum += s;
  const double mean = sum / count;
  double ss = 0.0;
  for (double s : scores) ss += (s - mean) * (s - mean);
  const double sd = scores.size() > 1 ? std::sqrt(ss / (count - 1.0)) : 0.0;
  const double half_width = 1.96 * sd / std::sqrt(count);
  return {mean, mean - half_width, mean + half_width};
}

void ExperimentConfig::validate() const {
  sim.validate();
  if (selected_features < 1 || selected_features > sim.d) {
    throw ConfigError("experiment: selected feature count out of range");
  }
  if (repeats < 1) throw ConfigError("experiment: repeats must be >= 1");
  if (test_size < 1) throw ConfigError("experiment: test size must be >= 1");
  if (threads < 1) throw ConfigError("experiment: threads must be >= 1");
}

namespace {

TrialRecords take_features(const TrialRecords& records, int k) {
  TrialRecords out = records;
  for (TrialRecord& rec : out) {
    rec.x = rec.x.head(k).eval();
  }
  return out;
}

struct RepeatScore {
  double accuracy_percent = 0.0;
  double value = 0.0;
};

RepeatScore run_repeat(const ExperimentConfig& cfg, const GridCell& cell,
                       double gamma, std::size_t cell_index, int repeat,
                       const Rng& base) {
  Rng rng = base.child(salt_pair(cell_index, static_cast<std::uint64_t>(repeat)));
  Rng train_rng = rng.child(1);
  Rng test_rng = rng.child(2);
  Rng fit_rng = rng.child(3);

  SimConfig train_cfg = cfg.sim;
  train_cfg.n = cell.n;
  SimConfig test_cfg = cfg.sim;
  test_cfg.n = cfg.test_size;

  const SimData train = generate(train_cfg, train_rng);
  const SimData test = generate(test_cfg, test_rng);

  OwlConfig owl = cfg.owl;
  owl.gamma = gamma;
  owl.epsilon = cell.epsilon;
  owl.bounds = FeatureBounds::unit(cfg.selected_features);

  const TrialRecords train_sel = take_features(train.records, cfg.selected_features);
  const DpOwlFit fit = fit_dp_owl(train_sel, owl, fit_rng);

  const TrialRecords test_sel = take_features(test.records, cfg.selected_features);
  const Eigen::MatrixXd x_test = preprocess_features(test_sel, owl.bounds);

  int hits = 0;
  for (std::size_t i = 0; i < test_sel.size(); ++i) {
    if (assign(fit.theta_star,
               x_test.row(static_cast<Eigen::Index>(i)).transpose()) ==
        test.optimal[i]) {
      ++hits;
    }
  }
  RepeatScore score;
  score.accuracy_percent =
      100.0 * static_cast<double>(hits) / static_cast<double>(test_sel.size());
  score.value = empirical_value(fit.theta_star, test_sel, x_test);
  return score;
}

double lookup_gamma(const std::vector<CellGamma>& tuned_gammas,
                    const GridCell& cell) {
  for (const CellGamma& entry : tuned_gammas) {
    const bool eps_match =
        entry.cell.epsilon == cell.epsilon ||
        (std::isinf(entry.cell.epsilon) && std::isinf(cell.epsilon));
    if (eps_match && entry.cell.n == cell.n) {
      return entry.gamma;
    }
  }
  std::ostringstream msg;
  msg << "experiment: no tuned gamma for cell (epsilon=" << cell.epsilon
      << ", n=" << cell.n << ")";
  throw ConfigError(msg.str());
}

}  // namespace

ExperimentTable run_experiment(const std::vector<GridCell>& grid,
                               const ExperimentConfig& cfg,
                               const std::vector<CellGamma>& tuned_gammas,
                               const Rng& rng) {
  cfg.validate();
  if (grid.empty()) {
    throw ConfigError("experiment: empty grid");
  }

  std::vector<double> gammas;
  gammas.reserve(grid.size());
  for (const GridCell& cell : grid) {
    gammas.push_back(lookup_gamma(tuned_gammas, cell));
  }

  ExperimentTable table;
  table.cells.resize(grid.size());
  for (std::size_t c = 0; c < grid.size(); ++c) {
    ExperimentCell& cell = table.cells[c];
    cell.epsilon = grid[c].epsilon;
    cell.n = grid[c].n;
    cell.gamma = gammas[c];
    cell.repeats = cfg.repeats;
    cell.acc_scores.assign(static_cast<std::size_t>(cfg.repeats), 0.0);
    cell.val_scores.assign(static_cast<std::size_t>(cfg.repeats), 0.0);
  }

  const std::size_t total = grid.size() * static_cast<std::size_t>(cfg.repeats);
  const auto run_task = [&](std::size_t task) {
    const std::size_t c = task / static_cast<std::size_t>(cfg.repeats);
    const int r = static_cast<int>(task % static_cast<std::size_t>(cfg.repeats));
    const RepeatScore score =
        run_repeat(cfg, grid[c], gammas[c], c, r, rng);
    table.cells[c].acc_scores[static_cast<std::size_t>(r)] = score.accuracy_percent;
    table.cells[c].val_scores[static_cast<std::size_t>(r)] = score.value;
  };

  const int threads = std::min<int>(cfg.threads, static_cast<int>(total));
  if (threads <= 1) {
    for (std::size_t task = 0; task < total; ++task) run_task(task);
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    pool.reserve(static_cast<std::size_t>(threads));
    for (int t = 0; t < threads; ++t) {
      pool.emplace_back([&]() {
        for (;;) {
          const std::size_t task = next.fetch_add(1);
          if (task >= total) return;
          run_task(task);
        }
      });
    }
    for (std::thread& worker : pool) worker.join();
  }

  for (ExperimentCell& cell : table.cells) {
    const ScoreSummary acc = summarize_scores(cell.acc_scores);
    cell.acc_mean = acc.mean;
    cell.acc_lo = acc.lo;
    cell.acc_hi = acc.hi;
    const ScoreSummary val = summarize_scores(cell.val_scores);
    cell.val_mean = val.mean;
    cell.val_lo = val.lo;
    cell.val_hi = val.hi;
  }
  return table;
}

}  // namespace dpwerm

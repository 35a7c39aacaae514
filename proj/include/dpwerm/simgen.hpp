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

#ifndef DPWERM_SIMGEN_HPP_
#define DPWERM_SIMGEN_HPP_

#include <Eigen/Dense>
#include <variant>
#include <vector>

#include "dpwerm/owl.hpp"
#include "dpwerm/rng.hpp"

namespace dpwerm {

// Synthetic two-arm trial. Features are drawn per feature_dist, treatments
// are 1:1 randomized, the optimal treatment is the sign of
// decision_coefficients . (1, x), and the benefit is Gaussian around
// benefit_intercept + benefit_feature_coef * x[benefit_feature_index]
//   + benefit_signal_coef * A * decision_value(x).
struct SimConfig {
  int n = 1000;
  int d = 10;

  // Length d + 1, intercept first. The default has four active features.
  Eigen::VectorXd decision_coefficients;

  enum class FeatureDist { kUniform01, kTruncatedNormal };
  FeatureDist feature_dist = FeatureDist::kUniform01;
  // Truncated-normal parameters (bounds fixed at (0, 1)); means default to
  // an even spread across (0, 1).
  Eigen::VectorXd tn_means;
  double tn_sd = 0.25;

  double benefit_sd = 0.5;  // sigma
  double benefit_intercept = 0.01;
  double benefit_feature_coef = 0.02;
  int benefit_feature_index = 3;  // zero-based
  double benefit_signal_coef = 3.0;

  static SimConfig defaults(int n = 1000);

  void validate() const;
};

// decision_coefficients . (1, x).
double decision_value(const SimConfig& cfg, const Eigen::VectorXd& x);

// Mean benefit for covariates x under the given treatment.
double benefit_mean(const SimConfig& cfg, const Eigen::VectorXd& x,
                    int treatment);

struct SimData {
  TrialRecords records;       // benefits already shifted to be positive
  std::vector<int> optimal;   // sign of the decision value, ties to -1
};

SimData generate(const SimConfig& cfg, Rng& rng);

// Ways an independent tuning dataset may deviate from the protected one.
struct SizeVariant { int n0 = 1000; };
struct ThetaVariant { int which = 0; };  // 0 baseline, 1 and 2 alternatives
struct TruncatedNormalVariant {};
struct SparsityVariant { int active = 4; };  // 2, 4, 6, or 8 active features

using ScenarioVariant = std::variant<SizeVariant, ThetaVariant,
                                     TruncatedNormalVariant, SparsityVariant>;

// Returns `base` with the one varied field replaced.
SimConfig scenario_variant(const SimConfig& base, const ScenarioVariant& variant);

// Mean and 95% confidence interval (1.96 * sample sd / sqrt(count)).
struct ScoreSummary {
  double mean = 0.0;
  double lo = 0.0;
  double hi = 0.0;
};
ScoreSummary summarize_scores(const std::vector<double>& scores);

struct GridCell {
  double epsilon = 0.0;  // +infinity = non-private baseline
  int n = 0;
};

struct CellGamma {
  GridCell cell;
  double gamma = 0.0;
};

struct ExperimentCell {
  double epsilon = 0.0;
  int n = 0;
  double gamma = 0.0;
  int repeats = 0;
  double acc_mean = 0.0, acc_lo = 0.0, acc_hi = 0.0;  // percent
  double val_mean = 0.0, val_lo = 0.0, val_hi = 0.0;
  std::vector<double> acc_scores;  // per repeat, percent
  std::vector<double> val_scores;  // per repeat
};

struct ExperimentTable {
  std::vector<ExperimentCell> cells;
};

struct ExperimentConfig {
  SimConfig sim;  // base generator; n is overridden per cell
  OwlConfig owl;  // gamma and epsilon are overridden per cell
  // The fit uses the first `selected_features` raw covariates plus a bias
  // column; the remaining covariates are treated as known-irrelevant.
  int selected_features = 4;
  int repeats = 200;
  int test_size = 5000;
  int threads = 1;

  void validate() const;
};

// Monte-Carlo harness: per repeat, fresh training and test sets, a DP-OWL
// fit, assignment accuracy against the known optimal treatments, and the
// empirical treatment value on the test set. Cells are aggregated in grid
// order regardless of scheduling.
ExperimentTable run_experiment(const std::vector<GridCell>& grid,
                               const ExperimentConfig& cfg,
                               const std::vector<CellGamma>& tuned_gammas,
                               const Rng& rng);

}  // namespace dpwerm

#endif  // DPWERM_SIMGEN_HPP_

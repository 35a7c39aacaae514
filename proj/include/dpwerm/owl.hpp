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

#ifndef DPWERM_OWL_HPP_
#define DPWERM_OWL_HPP_

#include <Eigen/Dense>
#include <vector>

#include "dpwerm/core.hpp"
#include "dpwerm/privacy.hpp"
#include "dpwerm/solver.hpp"

namespace dpwerm {

// One trial observation: covariates, the treatment actually received, the
// observed benefit, and the probability of receiving that treatment.
struct TrialRecord {
  Eigen::VectorXd x;        // raw features, pre-scaling
  int treatment = 1;        // A in {-1, +1}
  double benefit = 0.0;     // B
  double propensity = 0.5;  // P(A | x), in (0, 1); 0.5 in a 1:1 trial
};

using TrialRecords = std::vector<TrialRecord>;

struct OwlConfig {
  // Regularization constant of the treatment-rule objective, whose
  // regularizer is (gamma/n) * (1/2)||theta||^2 - the 1-strongly-convex
  // form the (C + 2W)/gamma sensitivity is exact for.
  double gamma = 0.0;
  double epsilon = 0.0;  // +infinity sentinel = no privacy (harness only)
  double weight_bound = 30.0;  // W
  double benefit_clip = 15.0;  // benefits above this are clipped before
                               // weighting; prespecified, never data-derived
  double huber_h = 0.5;
  FeatureBounds bounds;  // per raw column; clipping + affine map to [0, 1]

  SensitivitySpec::Mode sensitivity_mode = SensitivitySpec::Mode::kObserved;
  // estimated_large_n knobs; ignored in the other modes.
  double tail_multiplier = 2.5;
  double effective_fraction = 1.0;
  std::optional<double> weight_diff_sd;

  SolverConfig solver;

  void validate() const;
};

// If any benefit is negative, every entry is shifted by |min| + 0.001 so
// that all become strictly positive; otherwise the sequence is unchanged.
std::vector<double> shift_benefits(const std::vector<double>& benefits);

// w_i = min(B_i, benefit_clip) / propensity_i, clipped from above to
// weight_bound. Benefits must already be positive (run shift_benefits
// first).
std::vector<double> compute_weights(const TrialRecords& records,
                                    double weight_bound, double benefit_clip);

// sign(x'theta) with the tie x'theta = 0 assigned to -1.
int assign(const ModelParams& params, const Eigen::VectorXd& x_scaled);

// Inverse-propensity-weighted mean benefit over records whose received
// treatment matches the rule's assignment. Throws DataError when no record
// matches (never returns NaN).
double empirical_value(const ModelParams& params, const TrialRecords& records,
                       const Eigen::MatrixXd& x_scaled);

// Stacks the raw covariate vectors of `records` into a matrix.
Eigen::MatrixXd feature_matrix(const TrialRecords& records);

// clip_to_unit followed by scale_features with a bias column appended; the
// one preprocessing path used for both training and scoring.
Eigen::MatrixXd preprocess_features(const TrialRecords& records,
                                    const FeatureBounds& bounds);

struct DpOwlFit {
  // Raw argmin. Not releasable under a finite budget; the CLI never emits
  // it, the library returns it for testing and for the unlimited sentinel.
  ModelParams theta_hat;
  ModelParams theta_star;  // privatized parameters, safe to release
  double delta_sens = 0.0;
  double epsilon = 0.0;
  double gamma = 0.0;
  double weight_bound = 0.0;
};

// Full pipeline: shift benefits -> weights -> clip/scale features with bias
// -> weighted ERM fit with Huber loss -> sensitivity -> output perturbation.
DpOwlFit fit_dp_owl(const TrialRecords& records, const OwlConfig& cfg,
                    Rng& rng);

}  // namespace dpwerm

#endif  // DPWERM_OWL_HPP_

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

#ifndef DPWERM_MLEARN_HPP_
#define DPWERM_MLEARN_HPP_

#include <Eigen/Dense>
#include <optional>
#include <vector>

#include "dpwerm/owl.hpp"
#include "dpwerm/privacy.hpp"
#include "dpwerm/solver.hpp"

namespace dpwerm {

// For each subject, the indices of its matched opposite-treatment subjects.
struct MatchedSets {
  std::vector<std::vector<int>> sets;
  int match_size = 1;  // requested m; |sets[i]| = m unless the opposite arm
                       // is smaller
};

struct MlearnConfig {
  enum class GKind { kConstantOne, kIdentity };
  enum class Residualizer { kNone, kLinearOls };

  GKind g_kind = GKind::kConstantOne;
  double gamma = 0.0;
  Residualizer residualizer = Residualizer::kNone;
  double huber_h = 0.5;

  // Sensitivity inputs. affected_set_size is |S|, the number of subjects
  // whose residualized benefit can change when one record is altered; it is
  // a declared bound, never computed from the data. sup_g is the supremum
  // of g over benefit differences; defaults exist for g = 1 (1) and for the
  // identity g with the linear residualizer (6), anything else must be
  // supplied.
  int affected_set_size = 1;
  std::optional<double> sup_g;

  // The matched loss multiplies the received treatment by the sign of the
  // benefit difference. One construction uses sign(|Bi - Bj|) instead,
  // which is +1 whenever the benefits differ; this flag switches to it.
  bool sign_of_abs_difference = false;

  double resolved_sup_g() const;
  void validate() const;
};

struct Residualized {
  std::vector<double> values;
  // Set when the OLS design was rank-deficient and a mean-only fit was used.
  bool used_mean_fallback = false;
};

// B~_i = B_i - s(x_i) with s an OLS linear fit of benefit on the raw
// covariates (with intercept), or the identity when the residualizer is
// none. Needs at least d + 2 records for the OLS fit.
Residualized residualize(const TrialRecords& records,
                         MlearnConfig::Residualizer kind);

// m nearest opposite-treatment subjects per subject, Euclidean distance on
// the scaled features, ties broken toward the lower index. Both arms must
// be non-empty.
MatchedSets build_matches(const Eigen::MatrixXd& x_scaled,
                          const std::vector<int>& treatments, int match_size);

// Matched-loss problem after preprocessing.
struct MlearnProblem {
  Eigen::MatrixXd x_scaled;            // n x p, row norms <= 1
  std::vector<int> treatments;         // in {-1, +1}
  std::vector<double> residual_benefits;  // B~

  Eigen::Index n() const { return x_scaled.rows(); }
  Eigen::Index p() const { return x_scaled.cols(); }
  void validate() const;
};

// sum_i sum_{j in M_i} |M_i|^-1 g(|B~_i - B~_j|) huber(z_ij)
//   + gamma ||theta||^2,
// with z_ij = A_i sign(B~_i - B~_j) theta'x_i (or the |.| sign variant).
double mlearn_objective(const Eigen::VectorXd& theta,
                        const MlearnProblem& problem,
                        const MatchedSets& matches, const MlearnConfig& cfg);

Eigen::VectorXd mlearn_gradient(const Eigen::VectorXd& theta,
                                const MlearnProblem& problem,
                                const MatchedSets& matches,
                                const MlearnConfig& cfg);

ModelParams fit_mlearn(const MlearnProblem& problem, const MatchedSets& matches,
                       const MlearnConfig& cfg,
                       const SolverConfig& solver = {});

// 2 |S| sup_g / gamma.
double mlearn_sensitivity(const MlearnConfig& cfg);

// Output perturbation for the matched-loss fit; same mechanism as the
// weighted-ERM release, at the matched-loss sensitivity.
ModelParams privatize_mlearn(const ModelParams& theta_hat, double epsilon,
                             double delta_sens, Rng& rng);

}  // namespace dpwerm

#endif  // DPWERM_MLEARN_HPP_

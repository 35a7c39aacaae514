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

#ifndef DPWERM_TUNER_HPP_
#define DPWERM_TUNER_HPP_

#include <utility>
#include <vector>

#include "dpwerm/owl.hpp"
#include "dpwerm/rng.hpp"

namespace dpwerm {

// Train/validation index draw for one tuning repeat. When the target size n
// exceeds what the independent dataset can spare beyond the minimum
// validation size, the training set is a bootstrap multiset drawn from the
// non-validation records; otherwise plain disjoint subsets are used.
struct TuneSplit {
  std::vector<int> train;  // multiset in the bootstrap branch
  std::vector<int> validation;
};

TuneSplit draw_tune_split(int n0, int n, int min_validation,
                          bool bootstrap_full_size, Rng& rng);

struct TuneConfig {
  int n = 0;             // training size the sensitive fit will use
  double epsilon = 0.0;  // +infinity sentinel allowed
  TrialRecords independent;   // tuning dataset, disjoint from the sensitive one
  std::vector<int> optimal;   // true-optimal treatments for `independent`;
                              // empty when unknown (simulated data only)
  int min_validation = 0;     // m
  std::vector<double> candidates;  // ascending gammas
  int repeats = 1;            // r

  enum class Metric { kAccuracy, kValue };
  Metric metric = Metric::kValue;

  OwlConfig owl;  // template; gamma and epsilon are overridden per candidate

  // Literal reading of the bootstrap branch: draw a training multiset of
  // the independent dataset's own size rather than the target size n.
  bool bootstrap_independent_size = false;

  int threads = 1;

  static std::vector<double> default_candidates();  // {1, 21, 41, ..., 601}

  void validate() const;
};

struct TuneResult {
  double chosen_gamma = 0.0;
  int chosen_index = -1;
  std::vector<double> candidate_gammas;
  std::vector<double> mean_metric;                   // per candidate
  std::vector<std::vector<double>> repeat_metrics;   // [candidate][repeat]
};

// Per candidate gamma: repeat r times (fresh split, DP-OWL fit at this
// epsilon, metric on the validation records), average, and return the
// argmax candidate (first index on ties).
TuneResult tune_gamma(const TuneConfig& cfg, Rng& rng);

// Minimal and maximal gamma whose mean metric is within tol_frac of the
// best candidate's. Input pairs must be ascending in gamma.
std::pair<double, double> robustness_region(
    const std::vector<std::pair<double, double>>& metric_by_gamma,
    double tol_frac);

}  // namespace dpwerm

#endif  // DPWERM_TUNER_HPP_

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

#ifndef DPWERM_PRIVACY_HPP_
#define DPWERM_PRIVACY_HPP_

#include <Eigen/Dense>
#include <cstdint>
#include <optional>
#include <string>

#include "dpwerm/core.hpp"
#include "dpwerm/rng.hpp"

namespace dpwerm {

// How the per-record weights were obtained. The provenance determines the
// constant added to 2W in the l2 global sensitivity of the fitted
// parameters:
//   observed           weights known or predicted from independent data; 0
//   estimated_large_n  weights predicted from the protected data itself,
//                      large-sample regime; tail_multiplier *
//                      effective_fraction^(-1/2) * weight_diff_sd
//   conservative       worst case; n * W
struct SensitivitySpec {
  enum class Mode { kObserved, kEstimatedLargeN, kConservative };

  Mode mode = Mode::kObserved;
  double weight_bound = 0.0;  // W
  double gamma = 0.0;

  // estimated_large_n only. weight_diff_sd defaults to the weight bound,
  // the widest spread possible for weights confined to (0, W].
  double tail_multiplier = 2.5;
  double effective_fraction = 1.0;
  std::optional<double> weight_diff_sd;

  // conservative only.
  std::int64_t n = 0;

  static SensitivitySpec observed(double weight_bound, double gamma);
  static SensitivitySpec estimated_large_n(
      double weight_bound, double gamma, double tail_multiplier,
      double effective_fraction, std::optional<double> weight_diff_sd = {});
  static SensitivitySpec conservative(double weight_bound, double gamma,
                                      std::int64_t n);

  void validate() const;
};

// (C + 2W) / gamma with C per the provenance mode above.
double sensitivity(const SensitivitySpec& spec);

struct PrivacyBudget {
  double epsilon = 0.0;

  // +infinity sentinel: the mechanism becomes the identity. Only experiment
  // harnesses should pass this.
  static PrivacyBudget unlimited();
  bool is_unlimited() const;

  void validate() const;
};

// Standard-Gamma draw (Marsaglia-Tsang squeeze for shape >= 1) divided by
// the rate. Scaling after the draw keeps sequences at different rates
// aligned under a fixed stream: multiplying the rate by c divides the
// sample by c exactly.
double sample_gamma(double shape, double rate, Rng& rng);

// magnitude * z/||z|| with z standard Gaussian: a vector of the given
// magnitude in a uniformly random direction. A zero-norm z is redrawn.
Eigen::VectorXd sphere_noise(Eigen::Index p, double magnitude, Rng& rng);

// Draw from the density proportional to exp(-(epsilon/delta_sens)||e||):
// Gamma(p, epsilon/delta_sens) magnitude, uniform direction.
Eigen::VectorXd sample_sphere_noise(Eigen::Index p, double epsilon,
                                    double delta_sens, Rng& rng);

// Output perturbation at a caller-supplied sensitivity. Refuses to add
// noise twice to the same parameters.
ModelParams privatize_with_sensitivity(const ModelParams& theta_hat,
                                       double epsilon, double delta_sens,
                                       Rng& rng);

// Output perturbation with the sensitivity computed from `spec`.
ModelParams privatize(const ModelParams& theta_hat,
                      const SensitivitySpec& spec, const PrivacyBudget& budget,
                      Rng& rng);

}  // namespace dpwerm

#endif  // DPWERM_PRIVACY_HPP_

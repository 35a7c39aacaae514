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

#include "dpwerm/privacy.hpp"

#include <cmath>
#include <limits>

namespace dpwerm {

SensitivitySpec SensitivitySpec::observed(double weight_bound, double gamma) {
  SensitivitySpec spec;
  spec.mode = Mode::kObserved;
  spec.weight_bound = weight_bound;
  spec.gamma = gamma;
  return spec;
}

SensitivitySpec SensitivitySpec::estimated_large_n(
    double weight_bound, double gamma, double tail_multiplier,
    double effective_fraction, std::optional<double> weight_diff_sd) {
  SensitivitySpec spec;
  spec.mode = Mode::kEstimatedLargeN;
  spec.weight_bound = weight_bound;
  spec.gamma = gamma;
  spec.tail_multiplier = tail_multiplier;
  spec.effective_fraction = effective_fraction;
  spec.weight_diff_sd = weight_diff_sd;
  return spec;
}

SensitivitySpec SensitivitySpec::conservative(double weight_bound,
                                              double gamma, std::int64_t n) {
  SensitivitySpec spec;
  spec.mode = Mode::kConservative;
  spec.weight_bound = weight_bound;
  spec.gamma = gamma;
  spec.n = n;
  return spec;
}

void SensitivitySpec::validate() const {
  if (!(weight_bound > 0.0) || !std::isfinite(weight_bound)) {
    throw ConfigError("sensitivity: weight bound must be a positive real");
  }
  if (!(gamma > 0.0) || !std::isfinite(gamma)) {
    throw ConfigError("sensitivity: gamma must be a positive real");
  }
  if (mode == Mode::kEstimatedLargeN) {
    if (!(tail_multiplier >= 0.0) || !std::isfinite(tail_multiplier)) {
      throw ConfigError("sensitivity: tail multiplier must be >= 0");
    }
    if (!(effective_fraction > 0.0) || !(effective_fraction <= 1.0)) {
      throw ConfigError("sensitivity: effective fraction must lie in (0, 1]");
    }
    if (weight_diff_sd && !(*weight_diff_sd > 0.0)) {
      throw ConfigError("sensitivity: weight-difference sd must be positive");
    }
  }
  if (mode == Mode::kConservative && n < 1) {
    throw ConfigError("sensitivity: conservative mode needs n >= 1");
  }
}

double sensitivity(const SensitivitySpec& spec) {
  spec.validate();
  double c = 0.0;
  switch (spec.mode) {
    case SensitivitySpec::Mode::kObserved:
      c = 0.0;
      break;
    case SensitivitySpec::Mode::kEstimatedLargeN: {
      const double sd = spec.weight_diff_sd.value_or(spec.weight_bound);
      c = spec.tail_multiplier / std::sqrt(spec.effective_fraction) * sd;
      break;
    }
    case SensitivitySpec::Mode::kConservative:
      c = static_cast<double>(spec.n) * spec.weight_bound;
      break;
  }
  return (c + 2.0 * spec.weight_bound) / spec.gamma;
}

PrivacyBudget PrivacyBudget::unlimited() {
  return {std::numeric_limits<double>::infinity()};
}

bool PrivacyBudget::is_unlimited() const { return std::isinf(epsilon); }

void PrivacyBudget::validate() const {
  if (!(epsilon > 0.0) || std::isnan(epsilon)) {
    throw ConfigError("privacy budget: epsilon must be positive");
  }
}

double sample_gamma(double shape, double rate, Rng& rng) {
  if (!(shape >= 1.0)) {
    throw ConfigError("sample_gamma: shape must be >= 1");
  }
  if (!(rate > 0.0)) {
    throw ConfigError("sample_gamma: rate must be positive");
  }
  // Marsaglia & Tsang (2000), valid for shape >= 1.
  const double d = shape - 1.0 / 3.0;
  const double c = 1.0 / std::sqrt(9.0 * d);
  for (;;) {
    double x;
    double v;
    do {
      x = rng.next_gaussian();
      v = 1.0 + c * x;
    } while (v <= 0.0);
    v = v * v * v;
    const double u = rng.next_double();
    const double x2 = x * x;
    if (u < 1.0 - 0.0331 * x2 * x2) {
      return d * v / rate;
    }
    if (std::log(u) < 0.5 * x2 + d * (1.0 - v + std::log(v))) {
      return d * v / rate;
    }
  }
}

Eigen::VectorXd sphere_noise(Eigen::Index p, double magnitude, Rng& rng) {
  if (p < 1) {
    throw ConfigError("sphere_noise: dimension must be >= 1");
  }
  Eigen::VectorXd direction(p);
  double norm = 0.0;
  do {
    for (Eigen::Index i = 0; i < p; ++i) {
      direction[i] = rng.next_gaussian();
    }
    norm = direction.norm();
  } while (norm == 0.0);
  return (magnitude / norm) * direction;
}

Eigen::VectorXd sample_sphere_noise(Eigen::Index p, double epsilon,
                                    double delta_sens, Rng& rng) {
  if (!(epsilon > 0.0) || !std::isfinite(epsilon)) {
    throw ConfigError("sample_sphere_noise: epsilon must be a positive real");
  }
  if (!(delta_sens > 0.0) || !std::isfinite(delta_sens)) {
    throw ConfigError("sample_sphere_noise: sensitivity must be positive");
  }
  const double magnitude =
      sample_gamma(static_cast<double>(p), epsilon / delta_sens, rng);
  return sphere_noise(p, magnitude, rng);
}

ModelParams privatize_with_sensitivity(const ModelParams& theta_hat,
                                       double epsilon, double delta_sens,
                                       Rng& rng) {
  if (theta_hat.privatized) {
    throw std::logic_error(
        "privatize: parameters already carry privacy noise; refusing to add "
        "noise twice");
  }
  if (std::isinf(epsilon) && epsilon > 0.0) {
    return {theta_hat.theta, /*privatized=*/true};
  }
  Eigen::VectorXd noise =
      sample_sphere_noise(theta_hat.theta.size(), epsilon, delta_sens, rng);
  return {theta_hat.theta + noise, /*privatized=*/true};
}

ModelParams privatize(const ModelParams& theta_hat,
                      const SensitivitySpec& spec, const PrivacyBudget& budget,
                      Rng& rng) {
  budget.validate();
  if (budget.is_unlimited()) {
    if (theta_hat.privatized) {
      throw std::logic_error(
          "privatize: parameters already carry privacy noise");
    }
    return {theta_hat.theta, /*privatized=*/true};
  }
  return privatize_with_sensitivity(theta_hat, budget.epsilon,
                                    sensitivity(spec), rng);
}

}  // namespace dpwerm

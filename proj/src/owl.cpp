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

#include "dpwerm/owl.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace dpwerm {

void OwlConfig::validate() const {
  if (!(gamma > 0.0) || !std::isfinite(gamma)) {
    throw ConfigError("owl: gamma must be a positive real");
  }
  if (!(epsilon > 0.0) || std::isnan(epsilon)) {
    throw ConfigError("owl: epsilon must be positive (or inf for no privacy)");
  }
  if (!(weight_bound > 0.0) || !std::isfinite(weight_bound)) {
    throw ConfigError("owl: weight bound must be a positive real");
  }
  if (!(benefit_clip > 0.0) || !std::isfinite(benefit_clip)) {
    throw ConfigError("owl: benefit clip must be a positive real");
  }
  if (!(huber_h > 0.0) || !std::isfinite(huber_h)) {
    throw ConfigError("owl: huber parameter must be a positive real");
  }
  bounds.validate();
  solver.validate();
}

std::vector<double> shift_benefits(const std::vector<double>& benefits) {
  if (benefits.empty()) {
    throw DataError("shift_benefits: empty benefit sequence");
  }
  const double min_b = *std::min_element(benefits.begin(), benefits.end());
  if (!std::isfinite(min_b)) {
    throw DataError("shift_benefits: non-finite benefit");
  }
  if (min_b >= 0.0) {
    return benefits;
  }
  // Grouped as (b - min) + 0.001 so the smallest entry maps to exactly
  // 0.001.
  std::vector<double> out(benefits.size());
  for (std::size_t i = 0; i < benefits.size(); ++i) {
    out[i] = (benefits[i] - min_b) + 0.001;
  }
  return out;
}

std::vector<double> compute_weights(const TrialRecords& records,
                                    double weight_bound, double benefit_clip) {
  std::vector<double> weights(records.size());
  for (std::size_t i = 0; i < records.size(); ++i) {
    const TrialRecord& rec = records[i];
    if (!(rec.benefit > 0.0)) {
      std::ostringstream msg;
      msg << "compute_weights: record " << i << " has non-positive benefit "
          << rec.benefit << "; run shift_benefits first";
      throw DataError(msg.str());
    }
    if (!(rec.propensity > 0.0) || !(rec.propensity < 1.0)) {
      std::ostringstream msg;
      msg << "compute_weights: record " << i << " has propensity "
          << rec.propensity << " outside (0, 1)";
      throw DataError(msg.str());
    }
    const double clipped = std::min(rec.benefit, benefit_clip);
    weights[i] = std::min(clipped / rec.propensity, weight_bound);
  }
  return weights;
}

int assign(const ModelParams& params, const Eigen::VectorXd& x_scaled) {
  if (params.theta.size() != x_scaled.size()) {
    std::ostringstream msg;
    msg << "assign: theta has dimension " << params.theta.size()
        << " but x has " << x_scaled.size();
    throw std::invalid_argument(msg.str());
  }
  return params.theta.dot(x_scaled) > 0.0 ? 1 : -1;
}

double empirical_value(const ModelParams& params, const TrialRecords& records,
                       const Eigen::MatrixXd& x_scaled) {
  if (static_cast<Eigen::Index>(records.size()) != x_scaled.rows()) {
    throw std::invalid_argument(
        "empirical_value: records and scaled features disagree in length");
  }
  double numerator = 0.0;
  double denominator = 0.0;
  for (std::size_t i = 0; i < records.size(); ++i) {
    if (records[i].treatment !=
        assign(params,
               x_scaled.row(static_cast<Eigen::Index>(i)).transpose())) {
      continue;
    }
    numerator += records[i].benefit / records[i].propensity;
    denominator += 1.0 / records[i].propensity;
  }
  if (denominator == 0.0) {
    throw DataError(
        "empirical_value: no record's treatment matches the rule; the value "
        "is undefined on this dataset");
  }
  return numerator / denominator;
}

Eigen::MatrixXd feature_matrix(const TrialRecords& records) {
  if (records.empty()) {
    throw DataError("feature_matrix: no records");
  }
  const Eigen::Index d = records.front().x.size();
  Eigen::MatrixXd raw(static_cast<Eigen::Index>(records.size()), d);
  for (std::size_t i = 0; i < records.size(); ++i) {
    if (records[i].x.size() != d) {
      std::ostringstream msg;
      msg << "feature_matrix: record " << i << " has " << records[i].x.size()
          << " features, expected " << d;
      throw DataError(msg.str());
    }
    raw.row(static_cast<Eigen::Index>(i)) = records[i].x;
  }
  return raw;
}

Eigen::MatrixXd preprocess_features(const TrialRecords& records,
                                    const FeatureBounds& bounds) {
  return scale_features(clip_to_unit(feature_matrix(records), bounds),
                        /*add_bias=*/true);
}

namespace {

SensitivitySpec make_sensitivity_spec(const OwlConfig& cfg, std::size_t n) {
  switch (cfg.sensitivity_mode) {
    case SensitivitySpec::Mode::kObserved:
      return SensitivitySpec::observed(cfg.weight_bound, cfg.gamma);
    case SensitivitySpec::Mode::kEstimatedLargeN:
      return SensitivitySpec::estimated_large_n(
          cfg.weight_bound, cfg.gamma, cfg.tail_multiplier,
          cfg.effective_fraction, cfg.weight_diff_sd);
    case SensitivitySpec::Mode::kConservative:
      return SensitivitySpec::conservative(cfg.weight_bound, cfg.gamma,
                                           static_cast<std::int64_t>(n));
  }
  throw ConfigError("owl: unknown sensitivity mode");
}

}  // namespace

DpOwlFit fit_dp_owl(const TrialRecords& records, const OwlConfig& cfg,
                    Rng& rng) {
  cfg.validate();
  if (records.empty()) {
    throw DataError("fit_dp_owl: no records");
  }
  double min_propensity = 1.0;
  for (std::size_t i = 0; i < records.size(); ++i) {
    const TrialRecord& rec = records[i];
    if (rec.treatment != 1 && rec.treatment != -1) {
      std::ostringstream msg;
      msg << "fit_dp_owl: record " << i << " has treatment " << rec.treatment
          << ", expected -1 or +1";
      throw DataError(msg.str());
    }
    if (!(rec.propensity > 0.0) || !(rec.propensity < 1.0)) {
      std::ostringstream msg;
      msg << "fit_dp_owl: record " << i << " has propensity "
          << rec.propensity << " outside (0, 1)";
      throw DataError(msg.str());
    }
    min_propensity = std::min(min_propensity, rec.propensity);
  }
  // A weight bound below benefit_clip / min propensity silently clips more
  // than the benefit clip declares; require the caller to reconcile them.
  if (cfg.weight_bound * min_propensity + 1e-9 < cfg.benefit_clip) {
    std::ostringstream msg;
    msg << "fit_dp_owl: weight bound " << cfg.weight_bound
        << " is inconsistent with benefit clip " << cfg.benefit_clip
        << " at minimum propensity " << min_propensity << " (need W >= "
        << cfg.benefit_clip / min_propensity << ")";
    throw ConfigError(msg.str());
  }

  std::vector<double> benefits(records.size());
  for (std::size_t i = 0; i < records.size(); ++i) {
    benefits[i] = records[i].benefit;
  }
  benefits = shift_benefits(benefits);

  TrialRecords shifted = records;
  for (std::size_t i = 0; i < shifted.size(); ++i) {
    shifted[i].benefit = benefits[i];
  }
  const std::vector<double> weights =
      compute_weights(shifted, cfg.weight_bound, cfg.benefit_clip);

  Dataset data;
  data.features = preprocess_features(records, cfg.bounds);
  data.labels.resize(static_cast<Eigen::Index>(records.size()));
  data.weights.resize(static_cast<Eigen::Index>(records.size()));
  for (std::size_t i = 0; i < records.size(); ++i) {
    data.labels[static_cast<Eigen::Index>(i)] = records[i].treatment;
    data.weights[static_cast<Eigen::Index>(i)] = weights[i];
  }
  data.weight_bound = cfg.weight_bound;

  LossSpec loss;
  loss.h = cfg.huber_h;
  // The released sensitivity below is (C + 2W)/gamma, the exact parameter
  // sensitivity when the objective's regularizer is (gamma/n) times the
  // 1-strongly-convex (1/2)||theta||^2. fit_werm's squared-norm convention
  // absorbs the 1/2 into its regularization constant.
  ModelParams theta_hat = fit_werm(data, 0.5 * cfg.gamma, loss, cfg.solver);

  const SensitivitySpec spec = make_sensitivity_spec(cfg, records.size());
  const double delta_sens = sensitivity(spec);
  ModelParams theta_star =
      privatize(theta_hat, spec, PrivacyBudget{cfg.epsilon}, rng);

  DpOwlFit fit;
  fit.theta_hat = std::move(theta_hat);
  fit.theta_star = std::move(theta_star);
  fit.delta_sens = delta_sens;
  fit.epsilon = cfg.epsilon;
  fit.gamma = cfg.gamma;
  fit.weight_bound = cfg.weight_bound;
  return fit;
}

}  // namespace dpwerm

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

#include "dpwerm/core.hpp"

#include <cmath>
#include <sstream>
#include <string>

namespace dpwerm {

namespace {

void check_huber_args(double z, double h) {
  if (!std::isfinite(z)) {
    throw std::invalid_argument("huber loss: z must be finite");
  }
  if (!(h > 0.0) || !std::isfinite(h)) {
    throw std::invalid_argument("huber loss: h must be a positive real");
  }
}

}  // namespace

double huber_loss(double z, double h) {
  check_huber_args(z, h);
  if (z > 1.0 + h) return 0.0;
  if (z < 1.0 - h) return 1.0 - z;
  const double t = 1.0 + h - z;
  return t * t / (4.0 * h);
}

double huber_grad(double z, double h) {
  check_huber_args(z, h);
  if (z > 1.0 + h) return 0.0;
  if (z < 1.0 - h) return -1.0;
  return -(1.0 + h - z) / (2.0 * h);
}

void LossSpec::validate() const {
  if (kind != Kind::kHuber) {
    throw ConfigError("loss spec: unsupported loss kind");
  }
  if (!(h > 0.0) || !std::isfinite(h)) {
    throw ConfigError("loss spec: huber parameter h must be positive");
  }
}

void Dataset::validate() const {
  const Eigen::Index rows = features.rows();
  const Eigen::Index cols = features.cols();
  if (rows < 1 || cols < 1) {
    throw DataError("dataset: needs at least one record and one feature");
  }
  if (labels.size() != rows || weights.size() != rows) {
    std::ostringstream msg;
    msg << "dataset: length mismatch (features " << rows << ", labels "
        << labels.size() << ", weights " << weights.size() << ")";
    throw DataError(msg.str());
  }
  if (!(weight_bound > 0.0) || !std::isfinite(weight_bound)) {
    throw DataError("dataset: weight bound must be a positive real");
  }
  for (Eigen::Index i = 0; i < rows; ++i) {
    const double norm = features.row(i).norm();
    if (!(norm <= 1.0 + kRowNormSlack)) {
      std::ostringstream msg;
      msg << "dataset: feature row " << i << " has norm " << norm
          << " > 1; scale features first";
      throw DataError(msg.str());
    }
    const double y = labels[i];
    if (y != 1.0 && y != -1.0) {
      std::ostringstream msg;
      msg << "dataset: label " << i << " is " << y << ", expected -1 or +1";
      throw DataError(msg.str());
    }
    const double w = weights[i];
    if (!(w > 0.0) || !(w <= weight_bound)) {
      std::ostringstream msg;
      msg << "dataset: weight " << i << " is " << w << ", expected in (0, "
          << weight_bound << "]";
      throw DataError(msg.str());
    }
  }
}

FeatureBounds FeatureBounds::unit(Eigen::Index d) {
  FeatureBounds b;
  b.lo = Eigen::VectorXd::Zero(d);
  b.hi = Eigen::VectorXd::Ones(d);
  return b;
}

void FeatureBounds::validate() const {
  if (lo.size() != hi.size() || lo.size() < 1) {
    throw ConfigError("feature bounds: lo/hi must be non-empty and equal length");
  }
  for (Eigen::Index j = 0; j < lo.size(); ++j) {
    if (!std::isfinite(lo[j]) || !std::isfinite(hi[j]) || !(lo[j] < hi[j])) {
      std::ostringstream msg;
      msg << "feature bounds: column " << j << " needs finite lo < hi";
      throw ConfigError(msg.str());
    }
  }
}

Eigen::MatrixXd clip_to_unit(const Eigen::MatrixXd& raw,
                             const FeatureBounds& bounds) {
  bounds.validate();
  if (raw.cols() != bounds.dim()) {
    std::ostringstream msg;
    msg << "clip_to_unit: data has " << raw.cols() << " columns but bounds "
        << bounds.dim();
    throw ConfigError(msg.str());
  }
  Eigen::MatrixXd out(raw.rows(), raw.cols());
  for (Eigen::Index j = 0; j < raw.cols(); ++j) {
    const double lo = bounds.lo[j];
    const double width = bounds.hi[j] - lo;
    for (Eigen::Index i = 0; i < raw.rows(); ++i) {
      const double clipped = std::min(bounds.hi[j], std::max(lo, raw(i, j)));
      out(i, j) = (clipped - lo) / width;
    }
  }
  return out;
}

Eigen::MatrixXd scale_features(const Eigen::MatrixXd& raw, bool add_bias) {
  const Eigen::Index n = raw.rows();
  const Eigen::Index d = raw.cols();
  if (d < 1) {
    throw DataError("scale_features: needs at least one column");
  }
  std::ostringstream offenders;
  int offender_count = 0;
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < d; ++j) {
      const double v = raw(i, j);
      if (!(v >= 0.0 && v <= 1.0)) {
        if (offender_count < 8) {
          offenders << (offender_count ? ", " : "") << "(" << i << "," << j
                    << ")=" << v;
        }
        ++offender_count;
      }
    }
  }
  if (offender_count > 0) {
    std::ostringstream msg;
    msg << "scale_features: " << offender_count
        << " entries outside [0,1]: " << offenders.str()
        << (offender_count > 8 ? ", ..." : "");
    throw DataError(msg.str());
  }

  const Eigen::Index p = add_bias ? d + 1 : d;
  const double inv = 1.0 / std::sqrt(static_cast<double>(p));
  Eigen::MatrixXd out(n, p);
  out.leftCols(d) = raw * inv;
  if (add_bias) {
    out.col(d).setConstant(inv);
  }
  return out;
}

namespace {

void check_werm_args(const Eigen::VectorXd& theta, const Dataset& data,
                     double gamma, const LossSpec& loss) {
  loss.validate();
  if (!(gamma > 0.0) || !std::isfinite(gamma)) {
    throw ConfigError("werm: gamma must be a positive real");
  }
  if (theta.size() != data.p()) {
    std::ostringstream msg;
    msg << "werm: theta has dimension " << theta.size() << " but data has "
        << data.p() << " features";
    throw std::invalid_argument(msg.str());
  }
}

}  // namespace

double werm_objective(const Eigen::VectorXd& theta, const Dataset& data,
                      double gamma, const LossSpec& loss) {
  check_werm_args(theta, data, gamma, loss);
  const auto n = static_cast<double>(data.n());
  const Eigen::VectorXd margins =
      (data.features * theta).cwiseProduct(data.labels);
  double loss_sum = 0.0;
  for (Eigen::Index i = 0; i < data.n(); ++i) {
    loss_sum += data.weights[i] * huber_loss(margins[i], loss.h);
  }
  return loss_sum / n + gamma / n * theta.squaredNorm();
}

Eigen::VectorXd werm_gradient(const Eigen::VectorXd& theta,
                              const Dataset& data, double gamma,
                              const LossSpec& loss) {
  check_werm_args(theta, data, gamma, loss);
  const auto n = static_cast<double>(data.n());
  const Eigen::VectorXd margins =
      (data.features * theta).cwiseProduct(data.labels);
  Eigen::VectorXd coeff(data.n());
  for (Eigen::Index i = 0; i < data.n(); ++i) {
    coeff[i] =
        data.weights[i] * data.labels[i] * huber_grad(margins[i], loss.h) / n;
  }
  return data.features.transpose() * coeff + (2.0 * gamma / n) * theta;
}

}  // namespace dpwerm

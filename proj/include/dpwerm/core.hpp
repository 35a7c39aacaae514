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

#ifndef DPWERM_CORE_HPP_
#define DPWERM_CORE_HPP_

#include <Eigen/Dense>

#include "dpwerm/errors.hpp"

namespace dpwerm {

inline constexpr double kRowNormSlack = 1e-12;

// Smoothed hinge surrogate (Huber loss with smoothing parameter h):
// zero above 1+h, quadratic on |1-z| <= h, linear below 1-h. Convex, C1
// everywhere, and |derivative| <= 1.
double huber_loss(double z, double h);
double huber_grad(double z, double h);

struct LossSpec {
  enum class Kind { kHuber };
  Kind kind = Kind::kHuber;
  double h = 0.5;

  void validate() const;
};

// Feature-label-weight triples for weighted empirical risk minimization.
// Every feature row must have Euclidean norm at most 1 and every weight must
// lie in (0, weight_bound].
struct Dataset {
  Eigen::MatrixXd features;   // n x p
  Eigen::VectorXd labels;     // entries in {-1, +1}
  Eigen::VectorXd weights;    // entries in (0, weight_bound]
  double weight_bound = 0.0;  // W

  Eigen::Index n() const { return features.rows(); }
  Eigen::Index p() const { return features.cols(); }

  // Throws DataError on any invariant violation.
  void validate() const;
};

struct ModelParams {
  Eigen::VectorXd theta;
  bool privatized = false;
};

// Per-column clipping bounds. These must come from prior knowledge or study
// design, never from the data being protected.
struct FeatureBounds {
  Eigen::VectorXd lo;
  Eigen::VectorXd hi;

  static FeatureBounds unit(Eigen::Index d);

  Eigen::Index dim() const { return lo.size(); }
  void validate() const;
};

// Clips each column to [lo, hi] and affinely maps it onto [0, 1].
Eigen::MatrixXd clip_to_unit(const Eigen::MatrixXd& raw,
                             const FeatureBounds& bounds);

// Entries must already lie in [0, 1]; offenders raise DataError naming their
// indices. With add_bias a constant-1 column is appended and every row is
// divided by sqrt(d+1); without it rows are divided by sqrt(d). Either way
// output rows have norm <= 1.
Eigen::MatrixXd scale_features(const Eigen::MatrixXd& raw, bool add_bias);

// (1/n) sum_i w_i * huber(y_i x_i'theta) + (gamma/n) ||theta||^2. The
// squared-norm regularizer keeps the objective strongly convex and
// differentiable everywhere, which the sensitivity bound requires.
double werm_objective(const Eigen::VectorXd& theta, const Dataset& data,
                      double gamma, const LossSpec& loss);

// Analytic gradient of werm_objective:
// (1/n) sum_i w_i y_i huber'(y_i x_i'theta) x_i + (2 gamma / n) theta.
Eigen::VectorXd werm_gradient(const Eigen::VectorXd& theta,
                              const Dataset& data, double gamma,
                              const LossSpec& loss);

}  // namespace dpwerm

#endif  // DPWERM_CORE_HPP_

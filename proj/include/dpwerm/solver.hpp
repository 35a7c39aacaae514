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

#ifndef DPWERM_SOLVER_HPP_
#define DPWERM_SOLVER_HPP_

#include <Eigen/Dense>
#include <functional>
#include <optional>

#include "dpwerm/core.hpp"

namespace dpwerm {

struct SolverConfig {
  double grad_tol = 1e-8;
  int max_iters = 10000;
  // Starting point; zeros when empty.
  std::optional<Eigen::VectorXd> init;
  // Test hook: called after each accepted iterate with (iter, objective,
  // gradient norm).
  std::function<void(int, double, double)> on_iterate;

  void validate() const;
};

struct MinimizeResult {
  Eigen::VectorXd x;
  double objective = 0.0;
  double grad_norm = 0.0;
  int iterations = 0;
};

using ObjectiveFn = std::function<double(const Eigen::VectorXd&)>;
using GradientFn = std::function<Eigen::VectorXd(const Eigen::VectorXd&)>;

// Minimizes a smooth convex function. Search directions come from an L-BFGS
// update (falling back to steepest descent when the quasi-Newton direction
// is not a descent direction); steps are chosen by Armijo backtracking with
// shrink factor 0.5 and sufficient-decrease constant 1e-4, so accepted
// iterates have non-increasing objective values. Fully deterministic.
// Throws ConvergenceError when the gradient-norm tolerance is not reached
// within max_iters.
MinimizeResult minimize(const ObjectiveFn& objective, const GradientFn& gradient,
                        const Eigen::VectorXd& x0, const SolverConfig& cfg);

// Deterministic minimizer for the weighted ERM objective.
ModelParams fit_werm(const Dataset& data, double gamma, const LossSpec& loss,
                     const SolverConfig& cfg = {});

}  // namespace dpwerm

#endif  // DPWERM_SOLVER_HPP_

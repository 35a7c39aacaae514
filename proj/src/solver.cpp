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

#include "dpwerm/solver.hpp"

#include <cmath>
#include <deque>
#include <sstream>

namespace dpwerm {

namespace {

constexpr double kArmijoDecrease = 1e-4;
constexpr double kArmijoShrink = 0.5;
constexpr int kMaxBacktracks = 60;
constexpr std::size_t kLbfgsMemory = 10;

struct CurvaturePair {
  Eigen::VectorXd s;  // x_{k+1} - x_k
  Eigen::VectorXd y;  // g_{k+1} - g_k
  double rho;         // 1 / (y's)
};

// Standard two-loop recursion; the initial Hessian guess is the usual
// (s'y / y'y) scaling from the most recent pair.
Eigen::VectorXd lbfgs_direction(const Eigen::VectorXd& grad,
                                const std::deque<CurvaturePair>& history) {
  Eigen::VectorXd q = -grad;
  if (history.empty()) return q;

  std::vector<double> alpha(history.size());
  for (std::size_t k = history.size(); k-- > 0;) {
    const CurvaturePair& pair = history[k];
    alpha[k] = pair.rho * pair.s.dot(q);
    q -= alpha[k] * pair.y;
  }
  const CurvaturePair& last = history.back();
  q *= last.s.dot(last.y) / last.y.squaredNorm();
  for (std::size_t k = 0; k < history.size(); ++k) {
    const CurvaturePair& pair = history[k];
    const double beta = pair.rho * pair.y.dot(q);
    q += (alpha[k] - beta) * pair.s;
  }
  return q;
}

}  // namespace

void SolverConfig::validate() const {
  if (!(grad_tol > 0.0) || !std::isfinite(grad_tol)) {
    throw ConfigError("solver: grad_tol must be a positive real");
  }
  if (max_iters < 1) {
    throw ConfigError("solver: max_iters must be at least 1");
  }
}

MinimizeResult minimize(const ObjectiveFn& objective, const GradientFn& gradient,
                        const Eigen::VectorXd& x0, const SolverConfig& cfg) {
  cfg.validate();

  Eigen::VectorXd x = x0;
  double fx = objective(x);
  Eigen::VectorXd grad = gradient(x);
  std::deque<CurvaturePair> history;

  int iter = 0;
  for (; iter < cfg.max_iters; ++iter) {
    const double grad_norm = grad.norm();
    if (grad_norm <= cfg.grad_tol) {
      return {x, fx, grad_norm, iter};
    }

    Eigen::VectorXd direction = lbfgs_direction(grad, history);
    double slope = grad.dot(direction);
    bool used_fallback = history.empty();
    if (!(slope < -1e-12 * grad_norm * direction.norm())) {
      direction = -grad;
      slope = -grad_norm * grad_norm;
      used_fallback = true;
      history.clear();
    }

    double step = 1.0;
    bool accepted = false;
    Eigen::VectorXd x_next;
    Eigen::VectorXd grad_next;
    double f_next = fx;
    for (int bt = 0; bt < kMaxBacktracks; ++bt) {
      x_next = x + step * direction;
      f_next = objective(x_next);
      // The f_next < fx clause rejects sub-rounding no-op steps for which
      // the Armijo right-hand side collapses to fx itself.
      if (std::isfinite(f_next) && f_next < fx &&
          f_next <= fx + kArmijoDecrease * step * slope) {
        accepted = true;
        break;
      }
      step *= kArmijoShrink;
    }
    if (accepted) {
      grad_next = gradient(x_next);
    } else {
      // Near the optimum the Armijo decrease falls below what double
      // rounding of the objective can certify. Accept a step that shrinks
      // the gradient norm instead, while not measurably increasing the
      // objective.
      const double f_noise = 1e-12 * (std::abs(fx) + 1.0);
      step = 1.0;
      for (int bt = 0; bt < kMaxBacktracks; ++bt) {
        x_next = x + step * direction;
        f_next = objective(x_next);
        if (std::isfinite(f_next) && f_next <= fx + f_noise &&
            (x_next.array() != x.array()).any()) {
          Eigen::VectorXd candidate = gradient(x_next);
          if (candidate.norm() <= 0.999 * grad_norm) {
            grad_next = std::move(candidate);
            accepted = true;
            break;
          }
        }
        step *= kArmijoShrink;
      }
    }
    if (!accepted) {
      if (!used_fallback) {
        // Quasi-Newton step is unusable at this scale; restart from the
        // steepest-descent model.
        history.clear();
        continue;
      }
      break;
    }
    Eigen::VectorXd s = x_next - x;
    Eigen::VectorXd y = grad_next - grad;
    const double sy = s.dot(y);
    if (sy > 1e-12 * s.norm() * y.norm()) {
      history.push_back({std::move(s), std::move(y), 1.0 / sy});
      if (history.size() > kLbfgsMemory) history.pop_front();
    }

    x.swap(x_next);
    fx = f_next;
    grad.swap(grad_next);
    if (cfg.on_iterate) cfg.on_iterate(iter + 1, fx, grad.norm());
  }

  const double final_norm = grad.norm();
  if (final_norm <= cfg.grad_tol) {
    return {x, fx, final_norm, iter};
  }
  std::ostringstream msg;
  msg << "solver did not reach gradient tolerance " << cfg.grad_tol << " in "
      << iter << " iterations (gradient norm " << final_norm << ")";
  throw ConvergenceError(msg.str(), final_norm, iter);
}

ModelParams fit_werm(const Dataset& data, double gamma, const LossSpec& loss,
                     const SolverConfig& cfg) {
  data.validate();
  loss.validate();
  if (!(gamma > 0.0) || !std::isfinite(gamma)) {
    throw ConfigError("fit_werm: gamma must be a positive real");
  }

  Eigen::VectorXd x0 =
      cfg.init ? *cfg.init : Eigen::VectorXd::Zero(data.p()).eval();
  if (x0.size() != data.p()) {
    throw ConfigError("fit_werm: init vector has the wrong dimension");
  }

  const auto obj = [&](const Eigen::VectorXd& theta) {
    return werm_objective(theta, data, gamma, loss);
  };
  const auto grad = [&](const Eigen::VectorXd& theta) {
    return werm_gradient(theta, data, gamma, loss);
  };
  MinimizeResult result = minimize(obj, grad, x0, cfg);
  return {std::move(result.x), /*privatized=*/false};
}

}  // namespace dpwerm

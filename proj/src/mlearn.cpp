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

#include "dpwerm/mlearn.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace dpwerm {

double MlearnConfig::resolved_sup_g() const {
  if (sup_g) {
    if (!(*sup_g > 0.0) || !std::isfinite(*sup_g)) {
      throw ConfigError("mlearn: sup_g must be a positive real");
    }
    return *sup_g;
  }
  if (g_kind == GKind::kConstantOne) {
    return 1.0;
  }
  if (g_kind == GKind::kIdentity &&
      residualizer == Residualizer::kLinearOls) {
    return 6.0;
  }
  throw ConfigError(
      "mlearn: no default sup_g for the identity g without the linear "
      "residualizer; supply one explicitly");
}

void MlearnConfig::validate() const {
  if (!(gamma > 0.0) || !std::isfinite(gamma)) {
    throw ConfigError("mlearn: gamma must be a positive real");
  }
  if (!(huber_h > 0.0) || !std::isfinite(huber_h)) {
    throw ConfigError("mlearn: huber parameter must be a positive real");
  }
  if (affected_set_size < 1) {
    throw ConfigError("mlearn: affected set size must be >= 1");
  }
  resolved_sup_g();
}

Residualized residualize(const TrialRecords& records,
                         MlearnConfig::Residualizer kind) {
  if (records.empty()) {
    throw DataError("residualize: no records");
  }
  Residualized out;
  out.values.resize(records.size());
  if (kind == MlearnConfig::Residualizer::kNone) {
    for (std::size_t i = 0; i < records.size(); ++i) {
      out.values[i] = records[i].benefit;
    }
    return out;
  }

  const Eigen::Index n = static_cast<Eigen::Index>(records.size());
  const Eigen::Index d = records.front().x.size();
  if (n < d + 2) {
    std::ostringstream msg;
    msg << "residualize: linear fit needs at least " << d + 2
        << " records, got " << n;
    throw DataError(msg.str());
  }
  Eigen::MatrixXd design(n, d + 1);
  Eigen::VectorXd benefit(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    design(i, 0) = 1.0;
    design.row(i).tail(d) = records[static_cast<std::size_t>(i)].x;
    benefit[i] = records[static_cast<std::size_t>(i)].benefit;
  }

  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(design);
  Eigen::VectorXd fitted;
  if (qr.rank() < d + 1) {
    out.used_mean_fallback = true;
    fitted = Eigen::VectorXd::Constant(n, benefit.mean());
  } else {
    fitted = design * qr.solve(benefit);
  }
  for (Eigen::Index i = 0; i < n; ++i) {
    out.values[static_cast<std::size_t>(i)] = benefit[i] - fitted[i];
  }
  return out;
}

MatchedSets build_matches(const Eigen::MatrixXd& x_scaled,
                          const std::vector<int>& treatments, int match_size) {
  const Eigen::Index n = x_scaled.rows();
  if (static_cast<Eigen::Index>(treatments.size()) != n) {
    throw std::invalid_argument(
        "build_matches: treatments and features disagree in length");
  }
  if (match_size < 1) {
    throw ConfigError("build_matches: match size must be >= 1");
  }
  std::vector<int> arm_pos, arm_neg;
  for (Eigen::Index i = 0; i < n; ++i) {
    const int a = treatments[static_cast<std::size_t>(i)];
    if (a == 1) {
      arm_pos.push_back(static_cast<int>(i));
    } else if (a == -1) {
      arm_neg.push_back(static_cast<int>(i));
    } else {
      std::ostringstream msg;
      msg << "build_matches: treatment " << a << " at record " << i
          << ", expected -1 or +1";
      throw DataError(msg.str());
    }
  }
  if (arm_pos.empty() || arm_neg.empty()) {
    throw DataError("build_matches: one treatment arm is empty");
  }

  MatchedSets matches;
  matches.match_size = match_size;
  matches.sets.resize(static_cast<std::size_t>(n));
  for (Eigen::Index i = 0; i < n; ++i) {
    const std::vector<int>& candidates =
        treatments[static_cast<std::size_t>(i)] == 1 ? arm_neg : arm_pos;
    std::vector<std::pair<double, int>> ranked;
    ranked.reserve(candidates.size());
    for (int j : candidates) {
      const double dist2 = (x_scaled.row(i) - x_scaled.row(j)).squaredNorm();
      ranked.emplace_back(dist2, j);
    }
    const std::size_t keep =
        std::min<std::size_t>(ranked.size(), static_cast<std::size_t>(match_size));
    // Lexicographic order on (distance, index) makes the tie rule explicit.
    std::partial_sort(ranked.begin(),
                      ranked.begin() + static_cast<std::ptrdiff_t>(keep),
                      ranked.end());
    std::vector<int>& set = matches.sets[static_cast<std::size_t>(i)];
    set.reserve(keep);
    for (std::size_t k = 0; k < keep; ++k) {
      set.push_back(ranked[k].second);
    }
  }
  return matches;
}

void MlearnProblem::validate() const {
  if (n() < 1 || p() < 1) {
    throw DataError("mlearn: needs at least one record and one feature");
  }
  if (static_cast<Eigen::Index>(treatments.size()) != n() ||
      static_cast<Eigen::Index>(residual_benefits.size()) != n()) {
    throw DataError("mlearn: treatments/benefits disagree with features");
  }
  for (Eigen::Index i = 0; i < n(); ++i) {
    if (!(x_scaled.row(i).norm() <= 1.0 + kRowNormSlack)) {
      std::ostringstream msg;
      msg << "mlearn: scaled feature row " << i << " has norm > 1";
      throw DataError(msg.str());
    }
  }
}

namespace {

void check_mlearn_args(const Eigen::VectorXd& theta,
                       const MlearnProblem& problem,
                       const MatchedSets& matches) {
  if (theta.size() != problem.p()) {
    throw std::invalid_argument("mlearn: theta dimension mismatch");
  }
  if (static_cast<Eigen::Index>(matches.sets.size()) != problem.n()) {
    throw std::invalid_argument("mlearn: matched sets disagree with records");
  }
}

inline double pair_sign(double diff, bool sign_of_abs) {
  if (diff == 0.0) return 0.0;
  return sign_of_abs ? 1.0 : (diff > 0.0 ? 1.0 : -1.0);
}

}  // namespace

double mlearn_objective(const Eigen::VectorXd& theta,
                        const MlearnProblem& problem,
                        const MatchedSets& matches, const MlearnConfig& cfg) {
  check_mlearn_args(theta, problem, matches);
  double total = 0.0;
  for (Eigen::Index i = 0; i < problem.n(); ++i) {
    const std::vector<int>& set = matches.sets[static_cast<std::size_t>(i)];
    if (set.empty()) continue;
    const double inv = 1.0 / static_cast<double>(set.size());
    const double inner = theta.dot(problem.x_scaled.row(i));
    const double bi = problem.residual_benefits[static_cast<std::size_t>(i)];
    const double a = problem.treatments[static_cast<std::size_t>(i)];
    for (int j : set) {
      const double diff = bi - problem.residual_benefits[static_cast<std::size_t>(j)];
      const double g =
          cfg.g_kind == MlearnConfig::GKind::kConstantOne ? 1.0 : std::abs(diff);
      const double z = a * pair_sign(diff, cfg.sign_of_abs_difference) * inner;
      total += inv * g * huber_loss(z, cfg.huber_h);
    }
  }
  return total + cfg.gamma * theta.squaredNorm();
}

Eigen::VectorXd mlearn_gradient(const Eigen::VectorXd& theta,
                                const MlearnProblem& problem,
                                const MatchedSets& matches,
                                const MlearnConfig& cfg) {
  check_mlearn_args(theta, problem, matches);
  Eigen::VectorXd grad = 2.0 * cfg.gamma * theta;
  for (Eigen::Index i = 0; i < problem.n(); ++i) {
    const std::vector<int>& set = matches.sets[static_cast<std::size_t>(i)];
    if (set.empty()) continue;
    const double inv = 1.0 / static_cast<double>(set.size());
    const double inner = theta.dot(problem.x_scaled.row(i));
    const double bi = problem.residual_benefits[static_cast<std::size_t>(i)];
    const double a = problem.treatments[static_cast<std::size_t>(i)];
    double coeff = 0.0;
    for (int j : set) {
      const double diff = bi - problem.residual_benefits[static_cast<std::size_t>(j)];
      const double sign = pair_sign(diff, cfg.sign_of_abs_difference);
      if (sign == 0.0) continue;
      const double g =
          cfg.g_kind == MlearnConfig::GKind::kConstantOne ? 1.0 : std::abs(diff);
      const double z = a * sign * inner;
      coeff += inv * g * huber_grad(z, cfg.huber_h) * a * sign;
    }
    if (coeff != 0.0) {
      grad += coeff * problem.x_scaled.row(i).transpose();
    }
  }
  return grad;
}

ModelParams fit_mlearn(const MlearnProblem& problem, const MatchedSets& matches,
                       const MlearnConfig& cfg, const SolverConfig& solver) {
  problem.validate();
  cfg.validate();
  if (static_cast<Eigen::Index>(matches.sets.size()) != problem.n()) {
    throw DataError("fit_mlearn: matched sets disagree with records");
  }

  Eigen::VectorXd x0 =
      solver.init ? *solver.init : Eigen::VectorXd::Zero(problem.p()).eval();
  const auto obj = [&](const Eigen::VectorXd& theta) {
    return mlearn_objective(theta, problem, matches, cfg);
  };
  const auto grad = [&](const Eigen::VectorXd& theta) {
    return mlearn_gradient(theta, problem, matches, cfg);
  };
  MinimizeResult result = minimize(obj, grad, x0, solver);
  return {std::move(result.x), /*privatized=*/false};
}

double mlearn_sensitivity(const MlearnConfig& cfg) {
  cfg.validate();
  return 2.0 * static_cast<double>(cfg.affected_set_size) *
         cfg.resolved_sup_g() / cfg.gamma;
}

ModelParams privatize_mlearn(const ModelParams& theta_hat, double epsilon,
                             double delta_sens, Rng& rng) {
  return privatize_with_sensitivity(theta_hat, epsilon, delta_sens, rng);
}

}  // namespace dpwerm

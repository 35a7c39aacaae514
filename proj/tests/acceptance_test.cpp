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

// End-to-end acceptance suite. Each test prints one pass/fail line with the
// measured quantity next to its target band. The Monte-Carlo criteria
// re-derive the tuned regularization constant per (epsilon, n) cell with the
// adaptive tuning loop before running the 200-repeat experiment.

#include <algorithm>
#include <cmath>
#include <iostream>
#include <limits>
#include <map>
#include <sstream>
#include <thread>

#include "dpwerm/mlearn.hpp"
#include "dpwerm/owl.hpp"
#include "dpwerm/privacy.hpp"
#include "dpwerm/simgen.hpp"
#include "dpwerm/solver.hpp"
#include "dpwerm/tuner.hpp"
#include "gtest/gtest.h"

namespace dpwerm {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr std::uint64_t kSeed = 20260810;

int worker_threads() {
  const unsigned hw = std::thread::hardware_concurrency();
  return static_cast<int>(std::min(hw == 0 ? 2u : hw, 4u));
}

void report(int criterion, const std::string& detail, bool pass) {
  std::cout << "[criterion " << criterion << "] " << detail << " -> "
            << (pass ? "PASS" : "FAIL") << std::endl;
}

TrialRecords head_features(const TrialRecords& records, int k) {
  TrialRecords out = records;
  for (TrialRecord& rec : out) rec.x = rec.x.head(k).eval();
  return out;
}

// Shared tuned-gamma and experiment-cell cache so overlapping criteria reuse
// the same Monte-Carlo runs. One independent dataset is shared by every
// cell's tuning pass, the way a single public dataset would be reused.
class Bench {
 public:
  static Bench& instance() {
    static Bench bench;
    return bench;
  }

  // The three table-reproduction cells get the full tuning effort; the grid
  // cells use a lighter pass.
  double tuned_gamma(double epsilon, int n, int tune_repeats = 240) {
    const auto key = std::make_pair(epsilon, n);
    const auto it = gammas_.find(key);
    if (it != gammas_.end()) return it->second;

    if (independent_.records.empty()) {
      SimConfig sim = SimConfig::defaults(1000);
      Rng gen_rng = Rng(kSeed, 101).child(1);
      independent_ = generate(sim, gen_rng);
    }

    TuneConfig tune;
    tune.n = n;
    tune.epsilon = epsilon;
    tune.independent = head_features(independent_.records, 4);
    tune.optimal = independent_.optimal;
    tune.min_validation = 500;
    tune.candidates = TuneConfig::default_candidates();
    tune.repeats = tune_repeats;
    tune.metric = TuneConfig::Metric::kAccuracy;
    tune.threads = worker_threads();
    tune.owl.bounds = FeatureBounds::unit(4);

    Rng tune_rng = Rng(kSeed, 101).child(salt_pair(cell_index(epsilon, n), 2));
    const TuneResult result = tune_gamma(tune, tune_rng);
    gammas_[key] = result.chosen_gamma;
    return result.chosen_gamma;
  }

  const ExperimentCell& cell(double epsilon, int n, int tune_repeats = 240) {
    const auto key = std::make_pair(epsilon, n);
    const auto it = cells_.find(key);
    if (it != cells_.end()) return it->second;

    ExperimentConfig cfg;
    cfg.sim = SimConfig::defaults();
    cfg.repeats = 200;
    cfg.test_size = 5000;
    cfg.threads = worker_threads();

    const std::vector<GridCell> grid = {{epsilon, n}};
    const std::vector<CellGamma> gammas = {
        {{epsilon, n}, tuned_gamma(epsilon, n, tune_repeats)}};
    Rng rng(kSeed, 202 + cell_index(epsilon, n));
    const ExperimentTable table = run_experiment(grid, cfg, gammas, rng);
    return cells_.emplace(key, table.cells.front()).first->second;
  }

 private:
  static std::uint64_t cell_index(double epsilon, int n) {
    const std::uint64_t eps_key =
        std::isinf(epsilon) ? 999
                            : static_cast<std::uint64_t>(epsilon * 10.0);
    return eps_key * 100000 + static_cast<std::uint64_t>(n);
  }

  SimData independent_;
  std::map<std::pair<double, int>, double> gammas_;
  std::map<std::pair<double, int>, ExperimentCell> cells_;
};

TEST(Acceptance, C01_TableBaselineNoPrivacy) {
  const ExperimentCell& cell = Bench::instance().cell(kInf, 1000, 1000);
  EXPECT_NEAR(cell.acc_mean, 94.29, 1.5);
  EXPECT_NEAR(cell.val_mean, 10.62, 0.20);
  std::ostringstream detail;
  detail << "epsilon=inf n=1000 gamma=" << cell.gamma << ": accuracy "
         << cell.acc_mean << "% (target 94.29 +/- 1.5), value "
         << cell.val_mean << " (target 10.62 +/- 0.20)";
  report(1, detail.str(), !HasFailure());
}

TEST(Acceptance, C02_TableChanceFloor) {
  const ExperimentCell& cell = Bench::instance().cell(0.1, 200, 1000);
  EXPECT_NEAR(cell.acc_mean, 50.24, 2.0);
  std::ostringstream detail;
  detail << "epsilon=0.1 n=200 gamma=" << cell.gamma << ": accuracy "
         << cell.acc_mean << "% (target 50.24 +/- 2.0)";
  report(2, detail.str(), !HasFailure());
}

TEST(Acceptance, C03_TableMidRegime) {
  const ExperimentCell& cell = Bench::instance().cell(5.0, 1000, 1000);
  EXPECT_NEAR(cell.acc_mean, 84.80, 3.0);
  EXPECT_NEAR(cell.val_mean, 10.31, 0.35);
  std::ostringstream detail;
  detail << "epsilon=5 n=1000 gamma=" << cell.gamma << ": accuracy "
         << cell.acc_mean << "% (target 84.80 +/- 3.0), value "
         << cell.val_mean << " (target 10.31 +/- 0.35)";
  report(3, detail.str(), !HasFailure());
}

TEST(Acceptance, C04_MonotoneTrend) {
  const std::vector<double> epsilons = {0.5, 1.0, 2.0, 5.0};
  const std::vector<int> sizes = {200, 500, 1000};
  std::map<std::pair<double, int>, double> acc;
  for (double eps : epsilons) {
    for (int n : sizes) {
      acc[{eps, n}] = Bench::instance().cell(eps, n).acc_mean;
    }
  }
  const double slack = 1.0;
  for (int n : sizes) {
    for (std::size_t e = 1; e < epsilons.size(); ++e) {
      const double later = acc[{epsilons[e], n}];
      const double earlier = acc[{epsilons[e - 1], n}];
      EXPECT_GE(later + slack, earlier)
          << "accuracy dropped from epsilon " << epsilons[e - 1] << " to "
          << epsilons[e] << " at n " << n;
    }
  }
  for (double eps : epsilons) {
    for (std::size_t s = 1; s < sizes.size(); ++s) {
      const double later = acc[{eps, sizes[s]}];
      const double earlier = acc[{eps, sizes[s - 1]}];
      EXPECT_GE(later + slack, earlier)
          << "accuracy dropped from n " << sizes[s - 1] << " to " << sizes[s]
          << " at epsilon " << eps;
    }
  }
  std::ostringstream detail;
  detail << "grid accuracies (%):";
  for (double eps : epsilons) {
    detail << " eps=" << eps << ":";
    for (int n : sizes) detail << " " << acc[{eps, n}];
  }
  report(4, detail.str(), !HasFailure());
}

TEST(Acceptance, C05_SensitivityAudit) {
  Rng rng(kSeed, 5);
  const LossSpec loss;
  double worst_ratio = 0.0;
  for (int pair = 0; pair < 100; ++pair) {
    const int n = 10 + static_cast<int>(rng.next_double() * 40);
    const int p = 1 + static_cast<int>(rng.next_double() * 4);
    const double weight_bound = 0.5 + 9.5 * rng.next_double();
    const double gamma = 0.3 + 6.0 * rng.next_double();

    Dataset data;
    data.features.resize(n, p);
    data.labels.resize(n);
    data.weights.resize(n);
    data.weight_bound = weight_bound;
    for (int i = 0; i < n; ++i) {
      Eigen::VectorXd row(p);
      for (int j = 0; j < p; ++j) row[j] = 2.0 * rng.next_double() - 1.0;
      const double norm = row.norm();
      if (norm > 1.0) row /= norm;
      data.features.row(i) = row;
      data.labels[i] = rng.next_double() < 0.5 ? -1.0 : 1.0;
      data.weights[i] = weight_bound * (0.02 + 0.98 * rng.next_double());
    }

    Dataset neighbor = data;
    const int victim = static_cast<int>(rng.next_double() * n);
    Eigen::VectorXd row(p);
    for (int j = 0; j < p; ++j) row[j] = 2.0 * rng.next_double() - 1.0;
    if (row.norm() > 1.0) row /= row.norm();
    neighbor.features.row(victim) = row;
    neighbor.labels[victim] = rng.next_double() < 0.5 ? -1.0 : 1.0;
    neighbor.weights[victim] =
        weight_bound * (0.02 + 0.98 * rng.next_double());

    const ModelParams fit_a = fit_werm(data, gamma, loss);
    const ModelParams fit_b = fit_werm(neighbor, gamma, loss);
    const double gap = (fit_a.theta - fit_b.theta).norm();
    const double bound = 2.0 * weight_bound / gamma + 1e-6;
    EXPECT_LE(gap, bound);
    worst_ratio = std::max(worst_ratio, gap / bound);
  }
  std::ostringstream detail;
  detail << "100 neighboring pairs: worst gap/bound ratio " << worst_ratio;
  report(5, detail.str(), !HasFailure());
}

TEST(Acceptance, C06_MechanismDistribution) {
  const int p = 5;
  const double delta_sens = 0.2;
  const double epsilon = 1.0;
  const double rate = epsilon / delta_sens;
  const int draws = 100000;

  Rng rng(kSeed, 6);
  std::vector<double> norms(draws);
  for (int i = 0; i < draws; ++i) {
    norms[i] = sample_sphere_noise(p, epsilon, delta_sens, rng).norm();
  }
  double sum = 0.0;
  for (double v : norms) sum += v;
  const double mean = sum / draws;
  double ss = 0.0;
  for (double v : norms) ss += (v - mean) * (v - mean);
  const double variance = ss / (draws - 1);

  const double true_mean = p / rate;
  const double true_var = p / (rate * rate);
  const double se_mean = std::sqrt(true_var / draws);
  const double se_var =
      std::sqrt((2.0 * p * p + 6.0 * p) / std::pow(rate, 4) / draws);
  EXPECT_NEAR(mean, true_mean, 4.0 * se_mean);
  EXPECT_NEAR(variance, true_var, 4.0 * se_var);
  std::ostringstream detail;
  detail << "norm mean " << mean << " (expect " << true_mean << " +/- "
         << 4.0 * se_mean << "), variance " << variance << " (expect "
         << true_var << " +/- " << 4.0 * se_var << ")";
  report(6, detail.str(), !HasFailure());
}

// Test-local objective evaluator for the grid oracle; shares only the scalar
// loss with the implementation under test.
double oracle_objective(const Eigen::VectorXd& theta, const Dataset& data,
                        double gamma, double h) {
  double loss_sum = 0.0;
  for (Eigen::Index i = 0; i < data.n(); ++i) {
    const double margin = data.labels[i] * data.features.row(i).dot(theta);
    loss_sum += data.weights[i] * huber_loss(margin, h);
  }
  const double n = static_cast<double>(data.n());
  return loss_sum / n + gamma / n * theta.squaredNorm();
}

TEST(Acceptance, C07_SolverGridOracle) {
  Rng rng(kSeed, 7);
  const LossSpec loss;
  double worst_gap = -1.0;

  const auto random_data = [&rng](int n, int p) {
    Dataset data;
    data.features.resize(n, p);
    data.labels.resize(n);
    data.weights.resize(n);
    data.weight_bound = 4.0;
    for (int i = 0; i < n; ++i) {
      Eigen::VectorXd row(p);
      for (int j = 0; j < p; ++j) row[j] = 2.0 * rng.next_double() - 1.0;
      const double norm = row.norm();
      if (norm > 1.0) row /= norm;
      data.features.row(i) = row;
      data.labels[i] = rng.next_double() < 0.5 ? -1.0 : 1.0;
      data.weights[i] = 0.2 + 3.8 * rng.next_double();
    }
    return data;
  };

  for (int trial = 0; trial < 25; ++trial) {
    const Dataset data = random_data(3 + trial % 5, 1);
    const double gamma = 0.3 + 3.0 * rng.next_double();
    double grid_best = std::numeric_limits<double>::infinity();
    for (double t = -5.0; t <= 5.0; t += 1e-4) {
      grid_best = std::min(
          grid_best,
          oracle_objective(Eigen::VectorXd::Constant(1, t), data, gamma,
                           loss.h));
    }
    const ModelParams fit = fit_werm(data, gamma, loss);
    const double at_fit = oracle_objective(fit.theta, data, gamma, loss.h);
    EXPECT_LE(at_fit, grid_best + 1e-6);
    worst_gap = std::max(worst_gap, at_fit - grid_best);
  }

  for (int trial = 0; trial < 25; ++trial) {
    const Dataset data = random_data(4 + trial % 5, 2);
    const double gamma = 0.3 + 3.0 * rng.next_double();
    double grid_best = std::numeric_limits<double>::infinity();
    Eigen::VectorXd point(2);
    for (double a = -5.0; a <= 5.0; a += 1e-2) {
      point[0] = a;
      for (double b = -5.0; b <= 5.0; b += 1e-2) {
        point[1] = b;
        grid_best =
            std::min(grid_best, oracle_objective(point, data, gamma, loss.h));
      }
    }
    const ModelParams fit = fit_werm(data, gamma, loss);
    const double at_fit = oracle_objective(fit.theta, data, gamma, loss.h);
    EXPECT_LE(at_fit, grid_best + 1e-6);
    worst_gap = std::max(worst_gap, at_fit - grid_best);
  }

  std::ostringstream detail;
  detail << "50 instances: worst objective(fit) - grid minimum = "
         << worst_gap << " (must be <= 1e-6)";
  report(7, detail.str(), !HasFailure());
}

TEST(Acceptance, C08_GradientSuites) {
  const double step = 1e-6;
  double worst_rel = 0.0;

  {
    Rng rng(kSeed, 81);
    const LossSpec loss;
    for (int trial = 0; trial < 100; ++trial) {
      const int n = 3 + static_cast<int>(rng.next_double() * 12);
      const int p = 1 + static_cast<int>(rng.next_double() * 4);
      Dataset data;
      data.features.resize(n, p);
      data.labels.resize(n);
      data.weights.resize(n);
      data.weight_bound = 6.0;
      for (int i = 0; i < n; ++i) {
        Eigen::VectorXd row(p);
        for (int j = 0; j < p; ++j) row[j] = 2.0 * rng.next_double() - 1.0;
        const double norm = row.norm();
        if (norm > 1.0) row /= norm * (1.0 + rng.next_double());
        data.features.row(i) = row;
        data.labels[i] = rng.next_double() < 0.5 ? -1.0 : 1.0;
        data.weights[i] = 0.1 + 5.9 * rng.next_double();
      }
      const double gamma = 0.2 + 4.0 * rng.next_double();
      Eigen::VectorXd theta(p);
      for (int j = 0; j < p; ++j) theta[j] = 2.0 * rng.next_gaussian();

      const Eigen::VectorXd analytic = werm_gradient(theta, data, gamma, loss);
      Eigen::VectorXd numeric(p);
      for (int j = 0; j < p; ++j) {
        Eigen::VectorXd hi = theta, lo = theta;
        hi[j] += step;
        lo[j] -= step;
        numeric[j] = (werm_objective(hi, data, gamma, loss) -
                      werm_objective(lo, data, gamma, loss)) /
                     (2.0 * step);
      }
      const double rel =
          (analytic - numeric).norm() / std::max(1.0, analytic.norm());
      EXPECT_LT(rel, 1e-6);
      worst_rel = std::max(worst_rel, rel);
    }
  }

  {
    Rng rng(kSeed, 82);
    for (int trial = 0; trial < 100; ++trial) {
      const int n = 4 + static_cast<int>(rng.next_double() * 10);
      const int p = 1 + static_cast<int>(rng.next_double() * 3);
      MlearnProblem problem;
      problem.x_scaled.resize(n, p);
      problem.treatments.resize(static_cast<std::size_t>(n));
      problem.residual_benefits.resize(static_cast<std::size_t>(n));
      for (int i = 0; i < n; ++i) {
        Eigen::VectorXd row(p);
        for (int j = 0; j < p; ++j) row[j] = rng.next_double();
        row /= std::max(1.0, row.norm() + 0.1);
        problem.x_scaled.row(i) = row;
        problem.treatments[static_cast<std::size_t>(i)] = i % 2 == 0 ? 1 : -1;
        problem.residual_benefits[static_cast<std::size_t>(i)] =
            2.0 * rng.next_gaussian();
      }
      const MatchedSets matches =
          build_matches(problem.x_scaled, problem.treatments, 2);
      MlearnConfig cfg;
      cfg.gamma = 0.2 + 2.0 * rng.next_double();
      cfg.g_kind = trial % 2 == 0 ? MlearnConfig::GKind::kConstantOne
                                  : MlearnConfig::GKind::kIdentity;
      if (cfg.g_kind == MlearnConfig::GKind::kIdentity) cfg.sup_g = 6.0;
      Eigen::VectorXd theta(p);
      for (int j = 0; j < p; ++j) theta[j] = rng.next_gaussian();

      const Eigen::VectorXd analytic =
          mlearn_gradient(theta, problem, matches, cfg);
      Eigen::VectorXd numeric(p);
      for (int j = 0; j < p; ++j) {
        Eigen::VectorXd hi = theta, lo = theta;
        hi[j] += step;
        lo[j] -= step;
        numeric[j] = (mlearn_objective(hi, problem, matches, cfg) -
                      mlearn_objective(lo, problem, matches, cfg)) /
                     (2.0 * step);
      }
      const double rel =
          (analytic - numeric).norm() / std::max(1.0, analytic.norm());
      EXPECT_LT(rel, 1e-6);
      worst_rel = std::max(worst_rel, rel);
    }
  }

  std::ostringstream detail;
  detail << "200 finite-difference checks: worst relative error " << worst_rel
         << " (must be < 1e-6)";
  report(8, detail.str(), !HasFailure());
}

TEST(Acceptance, C09_MlearnSensitivity) {
  bool all_exact = true;
  for (double gamma : {1.0, 5.0, 10.0, 12.0, 250.0}) {
    MlearnConfig constant;
    constant.gamma = gamma;
    EXPECT_DOUBLE_EQ(mlearn_sensitivity(constant), 2.0 / gamma);
    all_exact = all_exact && mlearn_sensitivity(constant) == 2.0 / gamma;

    MlearnConfig identity;
    identity.g_kind = MlearnConfig::GKind::kIdentity;
    identity.residualizer = MlearnConfig::Residualizer::kLinearOls;
    identity.gamma = gamma;
    EXPECT_DOUBLE_EQ(mlearn_sensitivity(identity), 12.0 / gamma);
    all_exact = all_exact && mlearn_sensitivity(identity) == 12.0 / gamma;
  }
  std::ostringstream detail;
  detail << "matched-loss sensitivities equal 2/gamma and 12/gamma exactly: "
         << (all_exact ? "yes" : "no");
  report(9, detail.str(), !HasFailure());
}

TEST(Acceptance, C10_TunerRobustness) {
  const double epsilon = 5.0;
  const int n = 500;
  const int repeats = 200;
  const SimConfig base = SimConfig::defaults(1000);

  const auto tune_on = [&](const SimConfig& sim, std::uint64_t salt) {
    Rng rng(kSeed, 1000 + salt);
    Rng gen_rng = rng.child(1);
    SimConfig generator = sim;
    const SimData data = generate(generator, gen_rng);

    TuneConfig cfg;
    cfg.n = n;
    cfg.epsilon = epsilon;
    cfg.independent = head_features(data.records, 4);
    cfg.optimal = data.optimal;
    cfg.min_validation = std::max(1, sim.n / 5);
    cfg.candidates = TuneConfig::default_candidates();
    cfg.repeats = repeats;
    cfg.metric = TuneConfig::Metric::kAccuracy;
    cfg.threads = worker_threads();
    cfg.owl.bounds = FeatureBounds::unit(4);

    Rng tune_rng = rng.child(2);
    return tune_gamma(cfg, tune_rng);
  };

  const TuneResult baseline = tune_on(base, 0);
  std::vector<std::pair<double, double>> sweep;
  for (std::size_t i = 0; i < baseline.candidate_gammas.size(); ++i) {
    sweep.emplace_back(baseline.candidate_gammas[i], baseline.mean_metric[i]);
  }
  const auto region = robustness_region(sweep, 0.05);

  const std::vector<std::pair<std::string, ScenarioVariant>> variants = {
      {"n0=100", SizeVariant{100}},
      {"n0=2500", SizeVariant{2500}},
      {"theta1", ThetaVariant{1}},
      {"truncated-normal", TruncatedNormalVariant{}},
      {"active=2", SparsityVariant{2}},
      {"active=8", SparsityVariant{8}},
  };

  int inside = 0;
  std::ostringstream detail;
  detail << "baseline region [" << region.first << ", " << region.second
         << "]; chosen:";
  std::uint64_t salt = 1;
  for (const auto& [name, variant] : variants) {
    const SimConfig varied = scenario_variant(base, variant);
    const TuneResult result = tune_on(varied, salt++);
    const bool in_region = result.chosen_gamma >= region.first &&
                           result.chosen_gamma <= region.second;
    inside += in_region ? 1 : 0;
    detail << " " << name << "=" << result.chosen_gamma
           << (in_region ? "(in)" : "(out)");
  }
  EXPECT_GE(inside, 4);
  detail << "; " << inside << "/6 inside (need >= 4)";
  report(10, detail.str(), !HasFailure());
}

TEST(Acceptance, C11_CaseStudyArithmetic) {
  bool all_exact = true;
  for (double gamma : {30.0, 50.0, 90.0, 150.0}) {
    const double delta = sensitivity(SensitivitySpec::observed(8.0, gamma));
    EXPECT_DOUBLE_EQ(delta, 16.0 / gamma);
    all_exact = all_exact && delta == 16.0 / gamma;
  }

  // Constant propensity: the ratio estimator reduces to the plain mean of
  // benefits over rule-concordant records.
  Rng rng(kSeed, 11);
  for (int trial = 0; trial < 20; ++trial) {
    const int n = 5 + static_cast<int>(rng.next_double() * 30);
    TrialRecords records;
    Eigen::MatrixXd x(n, 2);
    for (int i = 0; i < n; ++i) {
      TrialRecord rec;
      rec.x = Eigen::Vector2d(rng.next_double(), rng.next_double());
      rec.treatment = rng.next_double() < 0.5 ? -1 : 1;
      rec.benefit = 0.5 + 5.0 * rng.next_double();
      rec.propensity = 0.5;
      x.row(i) = rec.x;
      records.push_back(rec);
    }
    Eigen::VectorXd theta(2);
    theta << rng.next_gaussian(), rng.next_gaussian();
    const ModelParams params{theta, true};

    double mean = 0.0;
    int matched = 0;
    for (int i = 0; i < n; ++i) {
      if (records[static_cast<std::size_t>(i)].treatment ==
          assign(params, x.row(i).transpose())) {
        mean += records[static_cast<std::size_t>(i)].benefit;
        ++matched;
      }
    }
    if (matched == 0) continue;
    mean /= matched;
    EXPECT_NEAR(empirical_value(params, records, x), mean, 1e-12);
  }

  std::ostringstream detail;
  detail << "sensitivity(observed, W=8) equals 16/gamma exactly for gamma in "
            "{30,50,90,150}: "
         << (all_exact ? "yes" : "no")
         << "; constant-propensity value equals plain matched mean";
  report(11, detail.str(), !HasFailure());
}

}  // namespace
}  // namespace dpwerm

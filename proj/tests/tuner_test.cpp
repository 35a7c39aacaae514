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

#include "dpwerm/tuner.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>

#include "dpwerm/simgen.hpp"
#include "gtest/gtest.h"

namespace dpwerm {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

TEST(DrawTuneSplit, DisjointBranchWhenIndependentIsLarge) {
  Rng rng(3);
  for (int trial = 0; trial < 50; ++trial) {
    const TuneSplit split = draw_tune_split(100, 40, 30, false, rng);
    EXPECT_EQ(split.train.size(), 40u);
    EXPECT_EQ(split.validation.size(), 60u);
    std::set<int> train(split.train.begin(), split.train.end());
    EXPECT_EQ(train.size(), split.train.size());  // no duplicates
    for (int v : split.validation) {
      EXPECT_EQ(train.count(v), 0u);
    }
  }
}

TEST(DrawTuneSplit, BootstrapBranchExcludesValidation) {
  Rng rng(5);
  for (int trial = 0; trial < 50; ++trial) {
    const TuneSplit split = draw_tune_split(100, 300, 40, false, rng);
    EXPECT_EQ(split.validation.size(), 40u);
    EXPECT_EQ(split.train.size(), 300u);  // multiset of the target size
    std::set<int> held(split.validation.begin(), split.validation.end());
    for (int t : split.train) {
      EXPECT_EQ(held.count(t), 0u);
    }
  }
}

TEST(DrawTuneSplit, LiteralBootstrapUsesIndependentSize) {
  Rng rng(7);
  const TuneSplit split = draw_tune_split(100, 300, 40, true, rng);
  EXPECT_EQ(split.train.size(), 100u);
}

TuneConfig simulated_tune_config(int n0, int n, double epsilon, Rng& rng) {
  SimConfig sim = SimConfig::defaults(n0);
  Rng gen = rng.child(1);
  SimData data = generate(sim, gen);

  TuneConfig cfg;
  cfg.n = n;
  cfg.epsilon = epsilon;
  cfg.optimal = data.optimal;
  cfg.min_validation = std::max(1, n0 / 5);
  cfg.repeats = 10;
  cfg.metric = TuneConfig::Metric::kAccuracy;
  cfg.owl.bounds = FeatureBounds::unit(4);

  cfg.independent.reserve(data.records.size());
  for (TrialRecord rec : data.records) {
    rec.x = rec.x.head(4).eval();
    cfg.independent.push_back(std::move(rec));
  }
  return cfg;
}

TEST(TuneGamma, SingleCandidateAlwaysChosen) {
  Rng rng(11);
  TuneConfig cfg = simulated_tune_config(200, 100, kInf, rng);
  cfg.candidates = {50.0};
  cfg.repeats = 2;
  Rng tune_rng = rng.child(2);
  const TuneResult result = tune_gamma(cfg, tune_rng);
  EXPECT_DOUBLE_EQ(result.chosen_gamma, 50.0);
  EXPECT_EQ(result.chosen_index, 0);
}

TEST(TuneGamma, ReasonableGammaBeatsDegenerateOne) {
  Rng rng(13);
  TuneConfig cfg = simulated_tune_config(400, 200, kInf, rng);
  // 1e9 collapses theta toward zero, leaving the tie-rule baseline.
  cfg.candidates = {21.0, 1e9};
  cfg.repeats = 20;
  Rng tune_rng = rng.child(2);
  const TuneResult result = tune_gamma(cfg, tune_rng);
  EXPECT_DOUBLE_EQ(result.chosen_gamma, 21.0);
  EXPECT_GT(result.mean_metric[0], result.mean_metric[1]);
}

TEST(TuneGamma, DeterministicUnderFixedSeed) {
  Rng rng(17);
  TuneConfig cfg = simulated_tune_config(300, 150, 5.0, rng);
  cfg.candidates = {21.0, 201.0, 401.0};
  cfg.repeats = 5;
  Rng tune_a = rng.child(2);
  Rng tune_b = rng.child(2);
  const TuneResult a = tune_gamma(cfg, tune_a);
  const TuneResult b = tune_gamma(cfg, tune_b);
  EXPECT_EQ(a.chosen_index, b.chosen_index);
  ASSERT_EQ(a.repeat_metrics.size(), b.repeat_metrics.size());
  for (std::size_t i = 0; i < a.repeat_metrics.size(); ++i) {
    EXPECT_EQ(a.repeat_metrics[i], b.repeat_metrics[i]);
  }
}

TEST(TuneGamma, ThreadedRunMatchesSerial) {
  Rng rng(19);
  TuneConfig cfg = simulated_tune_config(300, 150, 5.0, rng);
  cfg.candidates = {21.0, 201.0};
  cfg.repeats = 6;
  Rng serial_rng = rng.child(2);
  const TuneResult serial = tune_gamma(cfg, serial_rng);
  cfg.threads = 4;
  Rng parallel_rng = rng.child(2);
  const TuneResult parallel = tune_gamma(cfg, parallel_rng);
  for (std::size_t i = 0; i < serial.repeat_metrics.size(); ++i) {
    EXPECT_EQ(serial.repeat_metrics[i], parallel.repeat_metrics[i]);
  }
  EXPECT_EQ(serial.chosen_index, parallel.chosen_index);
}

TEST(TuneGamma, TieBreaksTowardSmallerIndex) {
  Rng rng(23);
  // Two enormous candidates produce identical chance-level fits; the first
  // must win the argmax.
  TuneConfig cfg = simulated_tune_config(200, 100, kInf, rng);
  cfg.candidates = {1e9, 2e9};
  cfg.repeats = 3;
  Rng tune_rng = rng.child(2);
  const TuneResult result = tune_gamma(cfg, tune_rng);
  if (result.mean_metric[0] == result.mean_metric[1]) {
    EXPECT_EQ(result.chosen_index, 0);
  }
}

TEST(TuneGamma, ConfigValidation) {
  Rng rng(29);
  TuneConfig cfg = simulated_tune_config(100, 50, 1.0, rng);
  cfg.candidates = {10.0};

  TuneConfig bad_m = cfg;
  bad_m.min_validation = 100;
  Rng r1 = rng.child(3);
  EXPECT_THROW(tune_gamma(bad_m, r1), ConfigError);

  TuneConfig no_truth = cfg;
  no_truth.optimal.clear();
  no_truth.metric = TuneConfig::Metric::kAccuracy;
  Rng r2 = rng.child(4);
  EXPECT_THROW(tune_gamma(no_truth, r2), ConfigError);

  TuneConfig unsorted = cfg;
  unsorted.candidates = {10.0, 5.0};
  Rng r3 = rng.child(5);
  EXPECT_THROW(tune_gamma(unsorted, r3), ConfigError);
}

TEST(TuneGamma, ValueMetricWorksWithoutTruth) {
  Rng rng(31);
  TuneConfig cfg = simulated_tune_config(200, 100, kInf, rng);
  cfg.optimal.clear();
  cfg.metric = TuneConfig::Metric::kValue;
  cfg.candidates = {21.0, 1e9};
  cfg.repeats = 20;
  Rng tune_rng = rng.child(2);
  const TuneResult result = tune_gamma(cfg, tune_rng);
  EXPECT_DOUBLE_EQ(result.chosen_gamma, 21.0);
}

TEST(RobustnessRegion, AllEqualCoversFullRange) {
  const auto region = robustness_region(
      {{1.0, 0.5}, {2.0, 0.5}, {3.0, 0.5}}, 0.05);
  EXPECT_DOUBLE_EQ(region.first, 1.0);
  EXPECT_DOUBLE_EQ(region.second, 3.0);
}

TEST(RobustnessRegion, ThresholdedWindow) {
  const auto region = robustness_region(
      {{1.0, 0.60}, {2.0, 0.80}, {3.0, 0.79}, {4.0, 0.70}}, 0.05);
  EXPECT_DOUBLE_EQ(region.first, 2.0);
  EXPECT_DOUBLE_EQ(region.second, 3.0);
}

TEST(RobustnessRegion, SinglePoint) {
  const auto region = robustness_region({{7.0, 0.9}}, 0.05);
  EXPECT_DOUBLE_EQ(region.first, 7.0);
  EXPECT_DOUBLE_EQ(region.second, 7.0);
}

TEST(RobustnessRegion, RejectsUnsortedInput) {
  EXPECT_THROW(robustness_region({{2.0, 0.5}, {1.0, 0.5}}, 0.05), ConfigError);
  EXPECT_THROW(robustness_region({}, 0.05), ConfigError);
  EXPECT_THROW(robustness_region({{1.0, 0.5}}, 0.0), ConfigError);
}

// Self-consistency: with no privacy noise and a clean simulated independent
// dataset, the tuner's pick lies inside the 5% robustness region of its own
// sweep.
TEST(TuneGamma, ChoiceLandsInsideOwnRobustnessRegion) {
  Rng rng(37);
  TuneConfig cfg = simulated_tune_config(500, 200, kInf, rng);
  cfg.candidates = {1.0, 61.0, 121.0, 241.0, 481.0};
  cfg.repeats = 15;
  Rng tune_rng = rng.child(2);
  const TuneResult result = tune_gamma(cfg, tune_rng);
  std::vector<std::pair<double, double>> sweep;
  for (std::size_t i = 0; i < result.candidate_gammas.size(); ++i) {
    sweep.emplace_back(result.candidate_gammas[i], result.mean_metric[i]);
  }
  const auto region = robustness_region(sweep, 0.05);
  EXPECT_GE(result.chosen_gamma, region.first);
  EXPECT_LE(result.chosen_gamma, region.second);
}

}  // namespace
}  // namespace dpwerm

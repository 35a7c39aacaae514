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
#include <atomic>
#include <cmath>
#include <numeric>
#include <sstream>
#include <thread>

namespace dpwerm {

namespace {

// Partial Fisher-Yates: the first `k` entries of a fresh index permutation.
std::vector<int> sample_without_replacement(int n, int k, Rng& rng) {
  std::vector<int> indices(static_cast<std::size_t>(n));
  std::iota(indices.begin(), indices.end(), 0);
  for (int i = 0; i < k; ++i) {
    const int j =
        i + static_cast<int>(rng.next_double() * static_cast<double>(n - i));
    std::swap(indices[static_cast<std::size_t>(i)],
              indices[static_cast<std::size_t>(j)]);
  }
  indices.resize(static_cast<std::size_t>(k));
  return indices;
}

}  // namespace

TuneSplit draw_tune_split(int n0, int n, int min_validation,
                          bool bootstrap_full_size, Rng& rng) {
  TuneSplit split;
  if (n > n0 - min_validation) {
    // Validation first, then bootstrap the training multiset from the rest;
    // validation records never enter training.
    split.validation = sample_without_replacement(n0, min_validation, rng);
    std::vector<bool> held(static_cast<std::size_t>(n0), false);
    for (int idx : split.validation) held[static_cast<std::size_t>(idx)] = true;
    std::vector<int> rest;
    rest.reserve(static_cast<std::size_t>(n0 - min_validation));
    for (int i = 0; i < n0; ++i) {
      if (!held[static_cast<std::size_t>(i)]) rest.push_back(i);
    }
    const int train_size = bootstrap_full_size ? n0 : n;
    split.train.reserve(static_cast<std::size_t>(train_size));
    for (int i = 0; i < train_size; ++i) {
      const auto pick = static_cast<std::size_t>(
          rng.next_double() * static_cast<double>(rest.size()));
      split.train.push_back(rest[std::min(pick, rest.size() - 1)]);
    }
  } else {
    split.train = sample_without_replacement(n0, n, rng);
    std::vector<bool> taken(static_cast<std::size_t>(n0), false);
    for (int idx : split.train) taken[static_cast<std::size_t>(idx)] = true;
    split.validation.reserve(static_cast<std::size_t>(n0 - n));
    for (int i = 0; i < n0; ++i) {
      if (!taken[static_cast<std::size_t>(i)]) split.validation.push_back(i);
    }
  }
  return split;
}

std::vector<double> TuneConfig::default_candidates() {
  std::vector<double> out;
  for (double g = 1.0; g <= 601.0; g += 20.0) out.push_back(g);
  return out;
}

void TuneConfig::validate() const {
  const int n0 = static_cast<int>(independent.size());
  if (n0 < 2) {
    throw ConfigError("tune: independent dataset needs at least 2 records");
  }
  if (min_validation < 1 || min_validation >= n0) {
    throw ConfigError(
        "tune: minimum validation size must satisfy 0 < m < n0");
  }
  if (n < 1) {
    throw ConfigError("tune: target training size must be >= 1");
  }
  if (repeats < 1) {
    throw ConfigError("tune: repeats must be >= 1");
  }
  if (candidates.empty()) {
    throw ConfigError("tune: candidate gamma set is empty");
  }
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    if (!(candidates[i] > 0.0)) {
      throw ConfigError("tune: candidate gammas must be positive");
    }
    if (i > 0 && !(candidates[i] > candidates[i - 1])) {
      throw ConfigError("tune: candidate gammas must be strictly ascending");
    }
  }
  if (metric == Metric::kAccuracy &&
      optimal.size() != independent.size()) {
    throw ConfigError(
        "tune: the accuracy metric needs true-optimal treatments for the "
        "independent dataset (simulated data); use the value metric "
        "otherwise");
  }
  if (threads < 1) {
    throw ConfigError("tune: threads must be >= 1");
  }
}

namespace {

double score_candidate_repeat(const TuneConfig& cfg, double gamma,
                              std::size_t candidate_index, int repeat,
                              Rng& base) {
  Rng rng = base.child(salt_pair(candidate_index, static_cast<std::uint64_t>(repeat)));
  Rng split_rng = rng.child(1);
  Rng fit_rng = rng.child(2);

  const int n0 = static_cast<int>(cfg.independent.size());
  const TuneSplit split =
      draw_tune_split(n0, cfg.n, cfg.min_validation,
                      cfg.bootstrap_independent_size, split_rng);

  TrialRecords train;
  train.reserve(split.train.size());
  for (int idx : split.train) {
    train.push_back(cfg.independent[static_cast<std::size_t>(idx)]);
  }

  OwlConfig owl = cfg.owl;
  owl.gamma = gamma;
  owl.epsilon = cfg.epsilon;
  const DpOwlFit fit = fit_dp_owl(train, owl, fit_rng);

  TrialRecords validation;
  validation.reserve(split.validation.size());
  for (int idx : split.validation) {
    validation.push_back(cfg.independent[static_cast<std::size_t>(idx)]);
  }
  const Eigen::MatrixXd x_valid = preprocess_features(validation, owl.bounds);

  if (cfg.metric == TuneConfig::Metric::kAccuracy) {
    int hits = 0;
    for (std::size_t v = 0; v < validation.size(); ++v) {
      const int truth =
          cfg.optimal[static_cast<std::size_t>(split.validation[v])];
      if (assign(fit.theta_star,
                 x_valid.row(static_cast<Eigen::Index>(v)).transpose()) ==
          truth) {
        ++hits;
      }
    }
    return static_cast<double>(hits) / static_cast<double>(validation.size());
  }
  return empirical_value(fit.theta_star, validation, x_valid);
}

}  // namespace

TuneResult tune_gamma(const TuneConfig& cfg, Rng& rng) {
  cfg.validate();
  cfg.owl.bounds.validate();

  const std::size_t k = cfg.candidates.size();
  TuneResult result;
  result.candidate_gammas = cfg.candidates;
  result.mean_metric.assign(k, 0.0);
  result.repeat_metrics.assign(
      k, std::vector<double>(static_cast<std::size_t>(cfg.repeats), 0.0));

  const std::size_t total = k * static_cast<std::size_t>(cfg.repeats);
  const int threads = std::min<int>(cfg.threads, static_cast<int>(total));
  if (threads <= 1) {
    for (std::size_t i = 0; i < k; ++i) {
      for (int j = 0; j < cfg.repeats; ++j) {
        result.repeat_metrics[i][static_cast<std::size_t>(j)] =
            score_candidate_repeat(cfg, cfg.candidates[i], i, j, rng);
      }
    }
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    pool.reserve(static_cast<std::size_t>(threads));
    for (int t = 0; t < threads; ++t) {
      pool.emplace_back([&]() {
        for (;;) {
          const std::size_t task = next.fetch_add(1);
          if (task >= total) return;
          const std::size_t i = task / static_cast<std::size_t>(cfg.repeats);
          const int j = static_cast<int>(task % static_cast<std::size_t>(cfg.repeats));
          result.repeat_metrics[i][static_cast<std::size_t>(j)] =
              score_candidate_repeat(cfg, cfg.candidates[i], i, j, rng);
        }
      });
    }
    for (std::thread& worker : pool) worker.join();
  }

  // Stable by-index summation keeps the aggregate independent of scheduling.
  for (std::size_t i = 0; i < k; ++i) {
    double sum = 0.0;
    for (double v : result.repeat_metrics[i]) sum += v;
    result.mean_metric[i] = sum / static_cast<double>(cfg.repeats);
  }

  std::size_t best = 0;
  for (std::size_t i = 1; i < k; ++i) {
    if (result.mean_metric[i] > result.mean_metric[best]) best = i;
  }
  result.chosen_index = static_cast<int>(best);
  result.chosen_gamma = cfg.candidates[best];
  return result;
}

std::pair<double, double> robustness_region(
    const std::vector<std::pair<double, double>>& metric_by_gamma,
    double tol_frac) {
  if (metric_by_gamma.empty()) {
    throw ConfigError("robustness_region: empty input");
  }
  if (!(tol_frac > 0.0) || !(tol_frac < 1.0)) {
    throw ConfigError("robustness_region: tolerance fraction must be in (0,1)");
  }
  double best = metric_by_gamma.front().second;
  for (std::size_t i = 1; i < metric_by_gamma.size(); ++i) {
    if (!(metric_by_gamma[i].first > metric_by_gamma[i - 1].first)) {
      throw ConfigError("robustness_region: gammas must be ascending");
    }
    best = std::max(best, metric_by_gamma[i].second);
  }
  const double threshold = (1.0 - tol_frac) * best;
  double lo = 0.0;
  double hi = 0.0;
  bool found = false;
  for (const auto& [gamma, metric] : metric_by_gamma) {
    if (metric >= threshold) {
      if (!found) {
        lo = gamma;
        found = true;
      }
      hi = gamma;
    }
  }
  return {lo, hi};
}

}  // namespace dpwerm

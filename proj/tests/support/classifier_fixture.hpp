// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The logitctl Authors

#pragma once

// Synthetic data and numeric checks for the failure classifier.

#include <algorithm>
#include <cmath>
#include <random>
#include <vector>

#include "logitctl/drift.hpp"

namespace logitctl::testing {

/// Points in [0,1]^7 labeled by a fixed hyperplane, with a margin band
/// removed so the set is strictly separable.
inline std::vector<TrainingExample> separable_fixture(std::size_t n, std::uint64_t seed) {
  const FeatureArray w{1.5, -2.0, 3.0, 1.0, 0.5, -1.0, 2.0};
  const double b = -2.0;
  std::mt19937_64 rng(seed);
  std::vector<TrainingExample> out;
  while (out.size() < n) {
    FeatureArray x{};
    for (double& v : x) v = uniform01(rng);
    double m = b;
    for (std::size_t i = 0; i < kFeatureCount; ++i) m += w[i] * x[i];
    if (std::abs(m) < 0.25) continue;
    out.push_back({DriftFeatures::from_array(x), m > 0 ? 1 : 0});
  }
  return out;
}

/// Random features with labels drawn independently of them.
inline std::vector<TrainingExample> noisy_fixture(std::size_t n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::vector<TrainingExample> out;
  for (std::size_t i = 0; i < n; ++i) {
    FeatureArray x{};
    for (double& v : x) v = uniform01(rng);
    out.push_back({DriftFeatures::from_array(x), uniform01(rng) < 0.5 ? 1 : 0});
  }
  return out;
}

inline double relative_error(double a, double b) {
  return std::abs(a - b) / std::max({std::abs(a), std::abs(b), 1e-8});
}

/// Worst relative error between the analytic gradient and central finite
/// differences over `points` random parameter vectors.
inline double worst_gradient_error(int points, std::uint64_t seed, double l2 = 1e-3) {
  std::mt19937_64 rng(seed);
  const auto data = noisy_fixture(64, seed ^ 0x9e37u);
  const double h = 1e-5;
  double worst = 0.0;
  for (int p = 0; p < points; ++p) {
    FailureClassifier c;
    for (double& w : c.weights) w = (uniform01(rng) - 0.5) * 4.0;
    c.bias = (uniform01(rng) - 0.5) * 4.0;
    const auto [gw, gb] = logistic_gradient(c, data, l2);
    for (std::size_t i = 0; i <= kFeatureCount; ++i) {
      FailureClassifier up = c, down = c;
      double& u = i < kFeatureCount ? up.weights[i] : up.bias;
      double& d = i < kFeatureCount ? down.weights[i] : down.bias;
      u += h;
      d -= h;
      const double fd = (logistic_loss(up, data, l2) - logistic_loss(down, data, l2)) / (2 * h);
      const double an = i < kFeatureCount ? gw[i] : gb;
      worst = std::max(worst, relative_error(an, fd));
    }
  }
  return worst;
}

/// True when every consecutive loss in the history is <= the previous one.
inline bool non_increasing(const std::vector<double>& losses) {
  for (std::size_t i = 1; i < losses.size(); ++i) {
    if (losses[i] > losses[i - 1]) return false;
  }
  return true;
}

}  // namespace logitctl::testing

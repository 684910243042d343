// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The logitctl Authors

#pragma once

/**
 * @file drift.hpp
 * @brief Per-step drift features, the heuristic drift score, the logistic
 *        failure classifier and its trainer, and the combined risk signal.
 *
 * Feature order is fixed (the classifier weight vector indexes it):
 *
 *   0 entropy_norm          H / ln|V|
 *   1 max_prob
 *   2 invalid_mass          probability outside the allowlist
 *   3 argmax_inadmissible   0 or 1
 *   4 steps_since_progress  min(steps, 16) / 16
 *   5 corrections_norm      corrections / max_corrections
 *   6 is_structural         0 or 1
 */

#include <array>
#include <cstddef>
#include <istream>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "logitctl/contract.hpp"
#include "logitctl/logit_core.hpp"

namespace logitctl {

inline constexpr std::size_t kFeatureCount = 7;
inline constexpr int kFeatureVersion = 1;
inline constexpr int kProgressCap = 16;

using FeatureArray = std::array<double, kFeatureCount>;

struct DriftFeatures {
  double entropy_norm = 0.0;
  double max_prob = 0.0;
  double invalid_mass = 0.0;
  double argmax_inadmissible = 0.0;
  double steps_since_progress = 0.0;
  double corrections_norm = 0.0;
  double is_structural = 0.0;

  FeatureArray as_array() const;
  static DriftFeatures from_array(const FeatureArray& a);
  bool operator==(const DriftFeatures&) const = default;
};

struct FailureClassifier {
  FeatureArray weights{};
  double bias = 0.0;
};

/// Combination weights for the heuristic score. Their sum should be <= 1.
struct HeuristicWeights {
  double w_mass = 0.6;
  double w_argmax = 0.3;
  double w_entropy = 0.1;
};

DriftFeatures extract_features(const ProbDistribution& dist, const ContractState& state,
                               const TokenSet& allowed, int steps_since_progress, int corrections,
                               int max_corrections, std::size_t vocab_size);

/// clip(w_mass*invalid_mass + w_argmax*argmax_inadmissible
///      + w_entropy*entropy_norm*is_structural, 0, 1)
double heuristic_drift(const DriftFeatures& f, const HeuristicWeights& w);

/// Logistic model output sigma(w . f + b).
double failure_prob(const FailureClassifier& c, const DriftFeatures& f);

/// rho = max(D, F).
double risk(double drift, double failure);

// ----------------------------------------------------------------------------
// Training

struct TrainingExample {
  DriftFeatures features;
  int label = 0;  // 1 = the run violated the contract
};

struct TrainHyper {
  double learning_rate = 0.5;
  int epochs = 400;
  double l2 = 1e-4;
};

struct TrainResult {
  FailureClassifier model;
  double final_loss = 0.0;
  std::vector<double> loss_history;  // loss before each epoch, then the final loss
  bool degenerate = false;           // only one label present
};

/// mean logistic loss + l2 * |w|^2 (bias is not regularized).
double logistic_loss(const FailureClassifier& c, std::span<const TrainingExample> data, double l2);

/// Analytic gradient of logistic_loss: (d/dw, d/db).
std::pair<FeatureArray, double> logistic_gradient(const FailureClassifier& c,
                                                  std::span<const TrainingExample> data,
                                                  double l2);

/// Full-batch gradient descent from zero initialization. Deterministic.
/// Throws InvalidInput for an empty dataset.
TrainResult train_classifier(std::span<const TrainingExample> data, const TrainHyper& hyper);

double accuracy(const FailureClassifier& c, std::span<const TrainingExample> data);

// ----------------------------------------------------------------------------
// Weak labeling of trajectory logs

struct LabeledDataset {
  std::vector<TrainingExample> examples;
  std::vector<std::string> run_ids;  // parallel to examples
  std::size_t runs = 0;
  std::size_t skipped_lines = 0;
  std::vector<std::string> warnings;
};

/// Reads JSON-lines trajectory logs. Every step of a run gets the run's
/// terminal label: 1 if the final text fails validation, else 0. When `spec`
/// is given and the terminal record carries "text", the text is re-validated;
/// otherwise the recorded "valid" flag is used. Malformed lines are skipped
/// and counted; steps of runs without a terminal record are dropped.
LabeledDataset label_trajectories(std::istream& logs, const ContractSpec* spec = nullptr);

/// Stable 80/20 split key: true for the held-out 20%.
bool is_held_out(const std::string& run_id);

}  // namespace logitctl

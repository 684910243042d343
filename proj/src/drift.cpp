// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The logitctl Authors

#include "logitctl/drift.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include <json.hpp>

namespace logitctl {

FeatureArray DriftFeatures::as_array() const {
  return {entropy_norm,         max_prob,         invalid_mass, argmax_inadmissible,
          steps_since_progress, corrections_norm, is_structural};
}

DriftFeatures DriftFeatures::from_array(const FeatureArray& a) {
  return {a[0], a[1], a[2], a[3], a[4], a[5], a[6]};
}

DriftFeatures extract_features(const ProbDistribution& dist, const ContractState& state,
                               const TokenSet& allowed, int steps_since_progress, int corrections,
                               int max_corrections, std::size_t vocab_size) {
  DriftFeatures f;
  if (vocab_size > 1) {
    f.entropy_norm = std::clamp(entropy(dist) / std::log(static_cast<double>(vocab_size)), 0.0, 1.0);
  }
  const TokenId top = argmax(dist);
  f.max_prob = dist.probs[static_cast<std::size_t>(top)];
  f.invalid_mass = invalid_mass(dist, allowed);
  f.argmax_inadmissible = contains(allowed, top) ? 0.0 : 1.0;
  f.steps_since_progress =
      static_cast<double>(std::clamp(steps_since_progress, 0, kProgressCap)) / kProgressCap;
  f.corrections_norm =
      max_corrections > 0
          ? std::clamp(static_cast<double>(corrections) / max_corrections, 0.0, 1.0)
          : 0.0;
  f.is_structural = is_structural(state.stage) ? 1.0 : 0.0;
  return f;
}

double heuristic_drift(const DriftFeatures& f, const HeuristicWeights& w) {
  const double d = w.w_mass * f.invalid_mass + w.w_argmax * f.argmax_inadmissible +
                   w.w_entropy * f.entropy_norm * f.is_structural;
  return std::clamp(d, 0.0, 1.0);
}

namespace {

double sigmoid(double z) {
  if (z >= 0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

double softplus(double z) { return std::max(z, 0.0) + std::log1p(std::exp(-std::abs(z))); }

double logit_of(const FailureClassifier& c, const FeatureArray& x) {
  double z = c.bias;
  for (std::size_t i = 0; i < kFeatureCount; ++i) z += c.weights[i] * x[i];
  return z;
}

}  // namespace

double failure_prob(const FailureClassifier& c, const DriftFeatures& f) {
  return sigmoid(logit_of(c, f.as_array()));
}

double risk(double drift, double failure) { return std::max(drift, failure); }

double logistic_loss(const FailureClassifier& c, std::span<const TrainingExample> data, double l2) {
  if (data.empty()) return 0.0;
  double total = 0.0;
  for (const auto& ex : data) {
    const double z = logit_of(c, ex.features.as_array());
    total += softplus(z) - ex.label * z;
  }
  double reg = 0.0;
  for (double w : c.weights) reg += w * w;
  return total / static_cast<double>(data.size()) + l2 * reg;
}

std::pair<FeatureArray, double> logistic_gradient(const FailureClassifier& c,
                                                  std::span<const TrainingExample> data,
                                                  double l2) {
  FeatureArray gw{};
  double gb = 0.0;
  if (data.empty()) return {gw, gb};
  for (const auto& ex : data) {
    const auto x = ex.features.as_array();
    const double err = sigmoid(logit_of(c, x)) - ex.label;
    for (std::size_t i = 0; i < kFeatureCount; ++i) gw[i] += err * x[i];
    gb += err;
  }
  const double n = static_cast<double>(data.size());
  for (std::size_t i = 0; i < kFeatureCount; ++i) gw[i] = gw[i] / n + 2.0 * l2 * c.weights[i];
  return {gw, gb / n};
}

TrainResult train_classifier(std::span<const TrainingExample> data, const TrainHyper& hyper) {
  if (data.empty()) throw InvalidInput("train_classifier: empty dataset");
  TrainResult result;
  const bool any_pos = std::any_of(data.begin(), data.end(), [](const auto& e) { return e.label == 1; });
  const bool any_neg = std::any_of(data.begin(), data.end(), [](const auto& e) { return e.label == 0; });
  result.degenerate = !(any_pos && any_neg);

  FailureClassifier& model = result.model;
  result.loss_history.reserve(static_cast<std::size_t>(std::max(hyper.epochs, 0)) + 1);
  for (int epoch = 0; epoch < hyper.epochs; ++epoch) {
    result.loss_history.push_back(logistic_loss(model, data, hyper.l2));
    const auto [gw, gb] = logistic_gradient(model, data, hyper.l2);
    for (std::size_t i = 0; i < kFeatureCount; ++i) model.weights[i] -= hyper.learning_rate * gw[i];
    model.bias -= hyper.learning_rate * gb;
  }
  result.final_loss = logistic_loss(model, data, hyper.l2);
  result.loss_history.push_back(result.final_loss);
  return result;
}

double accuracy(const FailureClassifier& c, std::span<const TrainingExample> data) {
  if (data.empty()) return 0.0;
  std::size_t correct = 0;
  for (const auto& ex : data) {
    const int predicted = failure_prob(c, ex.features) >= 0.5 ? 1 : 0;
    if (predicted == ex.label) ++correct;
  }
  return static_cast<double>(correct) / static_cast<double>(data.size());
}

// ----------------------------------------------------------------------------
// Trajectory labeling

LabeledDataset label_trajectories(std::istream& logs, const ContractSpec* spec) {
  struct RunSteps {
    std::vector<DriftFeatures> steps;
    std::optional<int> label;
  };
  std::map<std::string, RunSteps> runs;
  std::vector<std::string> order;

  LabeledDataset out;
  std::string line;
  while (std::getline(logs, line)) {
    if (line.empty()) continue;
    auto j = nlohmann::json::parse(line, nullptr, /*allow_exceptions=*/false);
    if (j.is_discarded() || !j.is_object() || !j.contains("run_id") || !j["run_id"].is_string()) {
      ++out.skipped_lines;
      continue;
    }
    const std::string run_id = j["run_id"].get<std::string>();
    auto [it, inserted] = runs.try_emplace(run_id);
    if (inserted) order.push_back(run_id);

    try {
      if (j.contains("valid")) {
        bool valid = j.at("valid").get<bool>();
        if (spec && j.contains("text") && j["text"].is_string()) {
          valid = validate(j["text"].get<std::string>(), *spec).valid;
        }
        it->second.label = valid ? 0 : 1;
      } else {
        const auto& arr = j.at("features");
        if (!arr.is_array() || arr.size() != kFeatureCount) throw std::out_of_range("features arity");
        FeatureArray a{};
        for (std::size_t i = 0; i < kFeatureCount; ++i) a[i] = arr[i].get<double>();
        it->second.steps.push_back(DriftFeatures::from_array(a));
      }
    } catch (const nlohmann::json::exception&) {
      ++out.skipped_lines;
    } catch (const std::out_of_range&) {
      ++out.skipped_lines;
    }
  }

  bool any_pos = false;
  bool any_neg = false;
  for (const auto& id : order) {
    const auto& r = runs[id];
    if (!r.label) continue;
    ++out.runs;
    (*r.label ? any_pos : any_neg) = true;
    for (const auto& f : r.steps) {
      out.examples.push_back({f, *r.label});
      out.run_ids.push_back(id);
    }
  }
  if (out.examples.empty()) out.warnings.emplace_back("no labeled steps in log");
  else if (!(any_pos && any_neg)) out.warnings.emplace_back("only one label present");
  if (out.skipped_lines > 0) {
    out.warnings.push_back("skipped " + std::to_string(out.skipped_lines) + " malformed line(s)");
  }
  return out;
}

bool is_held_out(const std::string& run_id) {
  std::uint64_t h = 1469598103934665603ull;  // FNV-1a
  for (unsigned char c : run_id) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h % 5 == 0;
}

}  // namespace logitctl

#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <fstream>
#include <optional>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "emx/dataset.hpp"
#include "emx/error.hpp"
#include "emx/matcher.hpp"
#include "emx/rng.hpp"
#include "emx/similarity.hpp"

namespace emx {

struct TrainConfig {
  std::uint64_t seed = 0;
  std::size_t epochs = 1500;
  double learning_rate = 0.5;
  double l2 = 1e-4;
  double threshold = 0.5;
};

/// Logistic regression over similarity features of the attribute names the
/// two tables share.
struct BaselineMatcherModel {
  std::vector<std::string> attributes;
  std::vector<double> mean;
  std::vector<double> scale;
  std::vector<double> weights;
  double bias = 0.0;
  double threshold = 0.5;
  TrainConfig training;
  std::optional<double> validation_f1;

  std::size_t feature_count() const { return attributes.size() * kFeaturesPerAttribute + 1; }

  void validate() const {
    const std::size_t d = feature_count();
    if (weights.size() != d || mean.size() != d || scale.size() != d) {
      throw ValidationError("baseline model: weight vector length does not match feature count");
    }
  }

  double score(const RecordPair& p) const {
    auto x = similarity_features(p, attributes);
    double z = bias;
    for (std::size_t j = 0; j < x.size(); ++j) z += weights[j] * (x[j] - mean[j]) / scale[j];
    return 1.0 / (1.0 + std::exp(-z));
  }
};

class BaselineMatcher final : public Matcher {
 public:
  explicit BaselineMatcher(BaselineMatcherModel model) : model_(std::move(model)) { model_.validate(); }

  std::vector<double> predict_batch(std::span<const RecordPair> pairs) const override {
    std::vector<double> out;
    out.reserve(pairs.size());
    for (const auto& p : pairs) out.push_back(model_.score(p));
    return out;
  }

  double threshold() const override { return model_.threshold; }
  const BaselineMatcherModel& model() const { return model_; }

 private:
  BaselineMatcherModel model_;
};

struct BinaryCounts {
  std::size_t tp = 0, fp = 0, fn = 0, tn = 0;
  double f1() const {
    const double denom = 2.0 * tp + fp + fn;
    return denom > 0 ? 2.0 * tp / denom : 0.0;
  }
};

inline BinaryCounts evaluate_split(const Matcher& m, const Dataset& ds, const std::string& split,
                                   std::size_t batch_size = 64) {
  std::vector<RecordPair> pairs;
  const auto& s = ds.split(split);
  pairs.reserve(s.size());
  for (std::size_t i = 0; i < s.size(); ++i) pairs.push_back(ds.pair(split, i));
  auto scores = predict_chunked(m, pairs, batch_size);
  BinaryCounts c;
  for (std::size_t i = 0; i < s.size(); ++i) {
    bool pred = predicts_match(scores[i], m.threshold());
    bool truth = s[i].label == Label::kMatch;
    c.tp += pred && truth;
    c.fp += pred && !truth;
    c.fn += !pred && truth;
    c.tn += !pred && !truth;
  }
  return c;
}

/// Full-batch gradient descent on class-balanced logistic loss with L2.
inline BaselineMatcherModel train_baseline_matcher(const Dataset& ds, const TrainConfig& cfg = {}) {
  if (!(cfg.threshold > 0.0 && cfg.threshold < 1.0)) throw ConfigError("threshold must lie in (0, 1)");
  auto it = ds.splits.find("train");
  if (it == ds.splits.end() || it->second.empty()) throw ConfigError("train split is empty");
  const auto& train = it->second;
  std::size_t positives = 0;
  for (const auto& p : train) positives += p.label == Label::kMatch;
  if (positives == 0 || positives == train.size()) {
    throw ConfigError("train split must contain both matches and non-matches");
  }

  BaselineMatcherModel model;
  if (!ds.table_a.empty() && !ds.table_b.empty()) {
    model.attributes = shared_attribute_names(ds.table_a.front(), ds.table_b.front());
  }
  model.threshold = cfg.threshold;
  model.training = cfg;
  const std::size_t d = model.feature_count();
  const std::size_t n = train.size();

  std::vector<std::vector<double>> x(n);
  std::vector<double> y(n);
  for (std::size_t i = 0; i < n; ++i) {
    x[i] = similarity_features(ds.pair("train", i), model.attributes);
    y[i] = train[i].label == Label::kMatch ? 1.0 : 0.0;
  }
  model.mean.assign(d, 0.0);
  model.scale.assign(d, 0.0);
  for (const auto& row : x) {
    for (std::size_t j = 0; j < d; ++j) model.mean[j] += row[j] / static_cast<double>(n);
  }
  for (const auto& row : x) {
    for (std::size_t j = 0; j < d; ++j) {
      double c = row[j] - model.mean[j];
      model.scale[j] += c * c / static_cast<double>(n);
    }
  }
  for (auto& s : model.scale) s = s > 1e-12 ? std::sqrt(s) : 1.0;
  for (auto& row : x) {
    for (std::size_t j = 0; j < d; ++j) row[j] = (row[j] - model.mean[j]) / model.scale[j];
  }

  const double w_pos = static_cast<double>(n) / (2.0 * static_cast<double>(positives));
  const double w_neg = static_cast<double>(n) / (2.0 * static_cast<double>(n - positives));

  Rng rng(derive_seed(cfg.seed, "baseline-init"));
  model.weights.assign(d, 0.0);
  for (auto& w : model.weights) w = 0.01 * (rng.uniform01() - 0.5);
  model.bias = 0.0;

  std::vector<double> grad(d);
  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    std::fill(grad.begin(), grad.end(), 0.0);
    double grad_b = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      double z = model.bias;
      for (std::size_t j = 0; j < d; ++j) z += model.weights[j] * x[i][j];
      const double p = 1.0 / (1.0 + std::exp(-z));
      const double err = (p - y[i]) * (y[i] > 0.5 ? w_pos : w_neg) / static_cast<double>(n);
      for (std::size_t j = 0; j < d; ++j) grad[j] += err * x[i][j];
      grad_b += err;
    }
    for (std::size_t j = 0; j < d; ++j) {
      model.weights[j] -= cfg.learning_rate * (grad[j] + cfg.l2 * model.weights[j]);
    }
    model.bias -= cfg.learning_rate * grad_b;
  }

  if (ds.splits.count("valid") && !ds.split("valid").empty()) {
    BaselineMatcher m(model);
    model.validation_f1 = evaluate_split(m, ds, "valid").f1();
  }
  return model;
}

inline nlohmann::json to_json(const BaselineMatcherModel& m) {
  nlohmann::json j{{"format", "emx-baseline/1"},
                   {"attributes", m.attributes},
                   {"mean", m.mean},
                   {"scale", m.scale},
                   {"weights", m.weights},
                   {"bias", m.bias},
                   {"threshold", m.threshold},
                   {"training",
                    {{"seed", m.training.seed},
                     {"epochs", m.training.epochs},
                     {"learning_rate", m.training.learning_rate},
                     {"l2", m.training.l2}}}};
  j["validation_f1"] = m.validation_f1 ? nlohmann::json(*m.validation_f1) : nlohmann::json(nullptr);
  return j;
}

inline BaselineMatcherModel baseline_model_from_json(const nlohmann::json& j) {
  if (j.value("format", "") != "emx-baseline/1") throw ValidationError("not an emx-baseline/1 model");
  BaselineMatcherModel m;
  try {
    m.attributes = j.at("attributes").get<std::vector<std::string>>();
    m.mean = j.at("mean").get<std::vector<double>>();
    m.scale = j.at("scale").get<std::vector<double>>();
    m.weights = j.at("weights").get<std::vector<double>>();
    m.bias = j.at("bias").get<double>();
    m.threshold = j.at("threshold").get<double>();
    const auto& t = j.at("training");
    m.training.seed = t.at("seed").get<std::uint64_t>();
    m.training.epochs = t.at("epochs").get<std::size_t>();
    m.training.learning_rate = t.at("learning_rate").get<double>();
    m.training.l2 = t.at("l2").get<double>();
    m.training.threshold = m.threshold;
    if (j.contains("validation_f1") && !j["validation_f1"].is_null()) {
      m.validation_f1 = j["validation_f1"].get<double>();
    }
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("malformed baseline model: ") + e.what());
  }
  m.validate();
  return m;
}

inline void save_baseline_model(const BaselineMatcherModel& m, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw LoadError(path, "cannot write model file");
  out << to_json(m).dump(2) << "\n";
}

inline BaselineMatcherModel load_baseline_model(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw LoadError(path, "cannot open model file");
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("model file is not JSON: ") + e.what());
  }
  return baseline_model_from_json(j);
}

}  // namespace emx

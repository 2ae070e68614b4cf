#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <ostream>
#include <span>
#include <utility>
#include <vector>

#include <json.hpp>

#include "tagforge/dataset.hpp"
#include "tagforge/model.hpp"
#include "tagforge/optim.hpp"
#include "tagforge/rng.hpp"

namespace tagforge {

struct TrainSpec {
  std::size_t epochs = 300;
  std::size_t patience = 10;
  double lr = 0.01;
  double weight_decay = 5e-4;
  std::vector<std::uint64_t> seeds{0, 1, 2, 3, 4};
};

inline void validate(const TrainSpec& s) {
  if (s.epochs == 0) throw ConfigError("train: epochs must be >= 1");
  if (s.patience == 0) throw ConfigError("train: patience must be >= 1");
  if (!(s.lr > 0.0)) throw ConfigError("train: lr must be > 0");
  if (s.weight_decay < 0.0) throw ConfigError("train: weight_decay must be >= 0");
}

struct EpochRecord {
  std::size_t epoch = 0;  // 1-based
  double train_loss = 0.0;
  double val_acc = 0.0;

  bool operator==(const EpochRecord&) const = default;
};

struct RunResult {
  double best_val_acc = 0.0;
  double test_acc_at_best_val = 0.0;
  std::size_t best_epoch = 0;
  std::size_t epochs_ran = 0;
  std::vector<EpochRecord> log;

  std::vector<double> loss_curve() const {
    std::vector<double> out;
    for (const auto& r : log) out.push_back(r.train_loss);
    return out;
  }

  bool operator==(const RunResult&) const = default;
};

/// One JSON object per epoch, keys in the order epoch, train_loss, val_acc.
inline void write_run_log(std::ostream& os, const RunResult& r) {
  for (const auto& e : r.log) {
    nlohmann::ordered_json j;
    j["epoch"] = e.epoch;
    j["train_loss"] = e.train_loss;
    j["val_acc"] = e.val_acc;
    os << j.dump() << '\n';
  }
}

/// Index of the largest entry; ties go to the lowest index.
template <std::floating_point T>
std::size_t argmax(std::span<const T> row) noexcept {
  std::size_t best = 0;
  for (std::size_t c = 1; c < row.size(); ++c)
    if (row[c] > row[best]) best = c;
  return best;
}

/// Fraction of `mask` nodes whose argmax logit equals the label.
template <std::floating_point T>
double accuracy(const Matrix<T>& logits, const LabelVector& labels, std::span<const NodeId> mask) {
  if (mask.empty()) throw DataError("accuracy: empty mask");
  std::size_t correct = 0;
  for (NodeId i : mask)
    if (argmax(logits.row(i)) == labels[i]) ++correct;
  return static_cast<double>(correct) / static_cast<double>(mask.size());
}

/// Eval-mode accuracy of `model` on `mask`.
template <std::floating_point T>
double evaluate(Model<T>& model, const Dataset& ds, std::span<const NodeId> mask) {
  if (mask.empty()) throw DataError("evaluate: empty mask");
  Rng unused(0);
  return accuracy(forward(model, ds, false, unused), ds.labels, mask);
}

/// Full-batch training with early stopping on validation accuracy.
///
/// Each epoch: train-mode forward, cross-entropy on the train mask, backward,
/// Adam step, eval-mode forward, validation accuracy. Training stops after
/// `patience` consecutive epochs without a strict improvement, or after
/// `epochs`. On return the model holds the best-validation parameters and
/// the result reports test accuracy of that snapshot. `seed` drives dropout.
template <std::floating_point T>
RunResult train(Model<T>& model, const Dataset& ds, const SplitMask& split, const TrainSpec& spec,
                std::uint64_t seed) {
  validate(spec);
  validate_split(split, ds.num_nodes());
  if (ds.features.rows() != ds.num_nodes()) throw DataError(ds.name + ": features not loaded");

  const GraphContext ctx(ds.graph);
  const Matrix<T> x = ds.features.cast<T>();
  const auto params = [&] {
    std::vector<Parameter<T>*> out;
    for (auto& [name, p] : model.named_parameters()) out.push_back(p);
    return out;
  }();
  const AdamSpec adam{.lr = spec.lr, .weight_decay = spec.weight_decay};
  AdamState<T> state;
  Rng dropout_rng(derive_seed(seed, 0xD5));
  Rng unused(0);

  model.zero_grad();
  RunResult result;
  std::vector<Matrix<T>> best_params = model.snapshot();
  double best_val = -1.0;
  std::size_t since_best = 0;
  for (std::size_t epoch = 1; epoch <= spec.epochs; ++epoch) {
    const Matrix<T> logits = model.forward(x, ctx, true, dropout_rng);
    const auto [loss, dlogits] = cross_entropy(logits, ds.labels, split.train);
    model.backward(dlogits, ctx);
    adam_step(std::span<Parameter<T>* const>(params), state, adam);

    const Matrix<T> eval_logits = model.forward(x, ctx, false, unused);
    const double val_acc = accuracy(eval_logits, ds.labels, split.val);
    result.log.push_back({epoch, static_cast<double>(loss), val_acc});
    result.epochs_ran = epoch;
    if (val_acc > best_val) {
      best_val = val_acc;
      since_best = 0;
      result.best_epoch = epoch;
      result.best_val_acc = val_acc;
      result.test_acc_at_best_val = accuracy(eval_logits, ds.labels, split.test);
      best_params = model.snapshot();
    } else if (++since_best >= spec.patience) {
      break;
    }
  }
  model.restore(best_params);
  return result;
}

struct Summary {
  double mean = 0.0;
  double std = 0.0;
};

/// Mean and population standard deviation of test accuracy over runs.
inline Summary aggregate(std::span<const RunResult> runs) {
  if (runs.size() < 2) throw ConfigError("aggregate: need at least 2 runs, got " + std::to_string(runs.size()));
  // sorted so the result is bitwise independent of run order
  std::vector<double> acc;
  for (const auto& r : runs) acc.push_back(r.test_acc_at_best_val);
  std::sort(acc.begin(), acc.end());
  double sum = 0.0;
  for (double a : acc) sum += a;
  const double mean = sum / static_cast<double>(acc.size());
  double ss = 0.0;
  for (double a : acc) ss += (a - mean) * (a - mean);
  return {mean, std::sqrt(ss / static_cast<double>(acc.size()))};
}

}  // namespace tagforge

#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "swag/dataset.hpp"
#include "swag/error.hpp"
#include "swag/learners.hpp"
#include "swag/rng.hpp"

namespace swag {

enum class LossKind { Misclassification, CostMatrix };

/// Evaluation loss. A cost matrix is indexed [truth][predicted] by class code.
struct LossSpec {
  LossKind kind = LossKind::Misclassification;
  std::vector<std::vector<double>> cost;

  static LossSpec misclassification() { return {}; }

  static LossSpec cost_matrix(std::vector<std::vector<double>> cost) {
    LossSpec spec{LossKind::CostMatrix, std::move(cost)};
    spec.validate();
    return spec;
  }

  /// Builds a code-ordered cost matrix from one given in `class_order`.
  static LossSpec cost_matrix(const std::vector<std::vector<double>>& cost,
                              const std::vector<std::string>& class_order,
                              const std::vector<std::string>& class_names) {
    if (class_order.size() != class_names.size())
      throw ConfigError("loss.classes", "must list each of the " +
                                            std::to_string(class_names.size()) +
                                            " response classes exactly once");
    std::vector<std::size_t> code_of(class_order.size());
    for (std::size_t i = 0; i < class_order.size(); ++i) {
      auto it = std::find(class_names.begin(), class_names.end(), class_order[i]);
      if (it == class_names.end())
        throw ConfigError("loss.classes", "unknown class '" + class_order[i] + "'");
      code_of[i] = static_cast<std::size_t>(it - class_names.begin());
    }
    auto sorted = code_of;
    std::sort(sorted.begin(), sorted.end());
    if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end())
      throw ConfigError("loss.classes", "duplicate class");
    if (cost.size() != class_order.size())
      throw ConfigError("loss.cost", "matrix must be square over the listed classes");
    std::vector<std::vector<double>> reordered(cost.size(), std::vector<double>(cost.size()));
    for (std::size_t i = 0; i < cost.size(); ++i) {
      if (cost[i].size() != cost.size())
        throw ConfigError("loss.cost", "matrix must be square over the listed classes");
      for (std::size_t j = 0; j < cost.size(); ++j) reordered[code_of[i]][code_of[j]] = cost[i][j];
    }
    return cost_matrix(std::move(reordered));
  }

  void validate() const {
    if (kind == LossKind::Misclassification) {
      if (!cost.empty()) throw ConfigError("loss.cost", "only allowed with kind = cost_matrix");
      return;
    }
    if (cost.empty()) throw ConfigError("loss.cost", "required with kind = cost_matrix");
    for (std::size_t i = 0; i < cost.size(); ++i) {
      if (cost[i].size() != cost.size()) throw ConfigError("loss.cost", "matrix must be square");
      for (std::size_t j = 0; j < cost.size(); ++j) {
        if (!(cost[i][j] >= 0.0) || !std::isfinite(cost[i][j]))
          throw ConfigError("loss.cost", "entries must be finite and >= 0");
        if (i == j && cost[i][j] != 0.0)
          throw ConfigError("loss.cost", "diagonal entries must be 0");
      }
    }
  }

  /// Largest attainable per-instance loss.
  double max_value() const {
    if (kind == LossKind::Misclassification) return 1.0;
    double m = 0.0;
    for (const auto& row : cost)
      for (double c : row) m = std::max(m, c);
    return m;
  }

  friend bool operator==(const LossSpec&, const LossSpec&) = default;
};

inline std::string_view to_string(LossKind kind) {
  return kind == LossKind::Misclassification ? "misclassification" : "cost_matrix";
}

/// r-repeated k-fold protocol.
struct CvProtocol {
  int r = 10;
  int k = 10;
  std::uint64_t seed_base = 0;

  void validate() const {
    if (r < 1) throw ConfigError("swag.r", "repetition count must be >= 1");
    if (k < 2) throw ConfigError("swag.k", "fold count must be >= 2");
  }

  friend bool operator==(const CvProtocol&, const CvProtocol&) = default;
};

/// Mean loss of `predicted` against `truth`.
inline double loss(const std::vector<int>& predicted, const std::vector<int>& truth,
                   const LossSpec& spec) {
  if (predicted.size() != truth.size())
    throw Error(ErrorCode::LengthMismatch, "predicted and truth lengths differ");
  if (truth.empty()) throw Error(ErrorCode::EmptyInput, "loss of an empty label vector");
  if (spec.kind == LossKind::Misclassification) {
    std::size_t wrong = 0;
    for (std::size_t i = 0; i < truth.size(); ++i) wrong += predicted[i] != truth[i];
    return static_cast<double>(wrong) / static_cast<double>(truth.size());
  }
  const auto c = spec.cost.size();
  double total = 0.0;
  for (std::size_t i = 0; i < truth.size(); ++i) {
    if (truth[i] < 0 || predicted[i] < 0 || static_cast<std::size_t>(truth[i]) >= c ||
        static_cast<std::size_t>(predicted[i]) >= c)
      throw Error(ErrorCode::LabelOutOfRange, "label outside the cost matrix");
    total += spec.cost[static_cast<std::size_t>(truth[i])][static_cast<std::size_t>(predicted[i])];
  }
  return total / static_cast<double>(truth.size());
}

/// Fold assignments for every repetition of `protocol`. Repetition j uses the
/// stream derive_seed(seed_base, j).
inline std::vector<FoldAssignment> repeated_folds(const Dataset& data, const CvProtocol& protocol) {
  protocol.validate();
  std::vector<FoldAssignment> out;
  out.reserve(static_cast<std::size_t>(protocol.r));
  for (int j = 0; j < protocol.r; ++j) {
    Rng rng(derive_seed(protocol.seed_base, static_cast<std::uint64_t>(j)));
    out.push_back(stratified_folds(data, protocol.k, rng));
  }
  return out;
}

/// Called with the learner spec each time a model is trained.
using FitObserver = std::function<void(const LearnerSpec&)>;

/// CV error over precomputed fold assignments. Each repetition pools the
/// held-out predictions of its folds (instance-weighted aggregation); the
/// result is the mean over repetitions.
inline double cv_error(const Dataset& data, const LearnerSpec& spec, const MechanismConfig& mech,
                       const std::vector<FoldAssignment>& folds, const LossSpec& loss_spec,
                       const FitObserver& observer = {}) {
  if (folds.empty()) throw Error(ErrorCode::EmptyInput, "no fold assignments");
  const DatasetView view = subset_columns(data, spec);
  const std::vector<int>& truth = data.labels();
  std::vector<int> pooled(data.n());
  double total = 0.0;
  for (std::size_t rep = 0; rep < folds.size(); ++rep) {
    const auto& assignment = folds[rep];
    if (assignment.fold_of.size() != data.n())
      throw Error(ErrorCode::LengthMismatch, "fold assignment length differs from n");
    for (int f = 0; f < assignment.k; ++f) {
      auto held_out = assignment.held_out(f);
      if (held_out.empty()) continue;
      try {
        if (observer) observer(spec);
        FittedModel model = fit(mech, view.with_rows(assignment.training(f)));
        auto predicted = predict(model, view.with_rows(held_out));
        for (std::size_t i = 0; i < held_out.size(); ++i) pooled[held_out[i]] = predicted[i];
      } catch (const Error& e) {
        throw Error(e.code(), std::string(e.what()) + " (learner " + spec.to_string() +
                                  ", repetition " + std::to_string(rep) + ", fold " +
                                  std::to_string(f) + ")");
      }
    }
    total += loss(pooled, truth, loss_spec);
  }
  return total / static_cast<double>(folds.size());
}

/// r-repeated k-fold CV error with fold streams derived from protocol.seed_base.
inline double cv_error(const Dataset& data, const LearnerSpec& spec, const MechanismConfig& mech,
                       const CvProtocol& protocol, const LossSpec& loss_spec,
                       const FitObserver& observer = {}) {
  return cv_error(data, spec, mech, repeated_folds(data, protocol), loss_spec, observer);
}

}  // namespace swag

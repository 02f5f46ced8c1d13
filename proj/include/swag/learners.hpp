#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "swag/dataset.hpp"
#include "swag/error.hpp"
#include "swag/learner_spec.hpp"

namespace swag {

// ---------------------------------------------------------------------------
// Mechanism configuration

enum class MechanismKind { Logistic, LinearSvm, Knn };

inline std::string_view to_string(MechanismKind kind) {
  switch (kind) {
    case MechanismKind::Logistic: return "logistic";
    case MechanismKind::LinearSvm: return "linear_svm";
    case MechanismKind::Knn: return "knn";
  }
  return "unknown";
}

inline MechanismKind parse_mechanism_kind(std::string_view name) {
  if (name == "logistic") return MechanismKind::Logistic;
  if (name == "linear_svm") return MechanismKind::LinearSvm;
  if (name == "knn") return MechanismKind::Knn;
  throw ConfigError("mechanism.kind", "unknown mechanism '" + std::string(name) +
                                          "' (expected logistic, linear_svm or knn)");
}

/// L2-regularized logistic regression, full-batch gradient descent.
struct LogisticParams {
  double lambda = 0.01;
  int max_iters = 500;
  double tol = 1e-6;
};

/// Linear SVM, deterministic full-batch subgradient descent with step 1/(lambda t).
struct LinearSvmParams {
  double lambda = 0.01;
  int epochs = 200;
};

struct KnnParams {
  int k_neighbors = 5;
};

class MechanismConfig {
 public:
  using Params = std::variant<LogisticParams, LinearSvmParams, KnnParams>;

  MechanismConfig() : params_(LogisticParams{}) {}
  MechanismConfig(Params params) : params_(std::move(params)) { validate(); }  // NOLINT

  static MechanismConfig defaults(MechanismKind kind) {
    switch (kind) {
      case MechanismKind::Logistic: return MechanismConfig(LogisticParams{});
      case MechanismKind::LinearSvm: return MechanismConfig(LinearSvmParams{});
      case MechanismKind::Knn: return MechanismConfig(KnnParams{});
    }
    return {};
  }

  MechanismKind kind() const noexcept { return static_cast<MechanismKind>(params_.index()); }
  bool is_linear() const noexcept { return kind() != MechanismKind::Knn; }
  const Params& params() const noexcept { return params_; }

  void validate() const {
    std::visit(
        [](const auto& p) {
          using T = std::decay_t<decltype(p)>;
          if constexpr (std::is_same_v<T, LogisticParams>) {
            if (!(p.lambda >= 0.0) || !std::isfinite(p.lambda))
              throw ConfigError("mechanism.lambda", "must be a finite value >= 0");
            if (p.max_iters < 1) throw ConfigError("mechanism.max_iters", "must be >= 1");
            if (!(p.tol > 0.0)) throw ConfigError("mechanism.tol", "must be > 0");
          } else if constexpr (std::is_same_v<T, LinearSvmParams>) {
            if (!(p.lambda >= 0.0) || !std::isfinite(p.lambda))
              throw ConfigError("mechanism.lambda", "must be a finite value >= 0");
            if (p.epochs < 1) throw ConfigError("mechanism.epochs", "must be >= 1");
          } else {
            if (p.k_neighbors < 1) throw ConfigError("mechanism.k_neighbors", "must be >= 1");
          }
        },
        params_);
  }

  friend bool operator==(const MechanismConfig& a, const MechanismConfig& b) {
    return std::visit(
        [&](const auto& pa) {
          using T = std::decay_t<decltype(pa)>;
          const auto* pb = std::get_if<T>(&b.params_);
          if (!pb) return false;
          if constexpr (std::is_same_v<T, LogisticParams>)
            return pa.lambda == pb->lambda && pa.max_iters == pb->max_iters && pa.tol == pb->tol;
          else if constexpr (std::is_same_v<T, LinearSvmParams>)
            return pa.lambda == pb->lambda && pa.epochs == pb->epochs;
          else
            return pa.k_neighbors == pb->k_neighbors;
        },
        a.params_);
  }

 private:
  Params params_;
};

// ---------------------------------------------------------------------------
// Fitted models

/// Per-column affine map to zero mean and unit variance, estimated on a
/// training split. Constant columns keep scale 1.
struct Standardizer {
  Eigen::RowVectorXd mean;
  Eigen::RowVectorXd scale;

  static Standardizer estimate(const Eigen::MatrixXd& x) {
    Standardizer s;
    const double n = static_cast<double>(x.rows());
    s.mean = x.colwise().sum() / n;
    s.scale.resize(x.cols());
    for (Index j = 0; j < x.cols(); ++j) {
      double var = (x.col(j).array() - s.mean(j)).square().sum() / n;
      double sd = std::sqrt(var);
      s.scale(j) = sd > 1e-12 ? sd : 1.0;
    }
    return s;
  }

  Eigen::MatrixXd apply(const Eigen::MatrixXd& x) const {
    return (x.rowwise() - mean).array().rowwise() / scale.array();
  }
};

struct LinearModel {
  Eigen::VectorXd weights;  // on standardized columns
  double intercept = 0.0;
  int negative_class = 0;   // predicted when the score is <= 0
  int positive_class = 1;
  int iterations = 0;
};

struct KnnModel {
  Eigen::MatrixXd train;  // standardized training rows
  std::vector<int> labels;
  int k_neighbors = 1;
  int class_count = 0;
};

struct FittedModel {
  MechanismKind kind = MechanismKind::Logistic;
  LearnerSpec spec;
  Standardizer standardizer;
  std::variant<LinearModel, KnnModel> params;

  const LinearModel* linear() const { return std::get_if<LinearModel>(&params); }
  const KnnModel* knn() const { return std::get_if<KnnModel>(&params); }
};

// ---------------------------------------------------------------------------
// Regularized logistic loss. Labels are +1/-1.

/// mean_i log(1 + exp(-y_i (x_i w + b))) + lambda/2 |w|^2
inline double logistic_objective(const Eigen::MatrixXd& x, const Eigen::VectorXd& y,
                                 const Eigen::VectorXd& w, double b, double lambda) {
  Eigen::ArrayXd margin = y.array() * ((x * w).array() + b);
  double loss = 0.0;
  for (Index i = 0; i < margin.size(); ++i) {
    double m = margin(i);
    loss += m > 0 ? std::log1p(std::exp(-m)) : -m + std::log1p(std::exp(m));
  }
  return loss / static_cast<double>(x.rows()) + 0.5 * lambda * w.squaredNorm();
}

struct LogisticGradient {
  Eigen::VectorXd weights;
  double intercept = 0.0;

  double norm() const { return std::sqrt(weights.squaredNorm() + intercept * intercept); }
};

inline LogisticGradient logistic_gradient(const Eigen::MatrixXd& x, const Eigen::VectorXd& y,
                                          const Eigen::VectorXd& w, double b, double lambda) {
  const double n = static_cast<double>(x.rows());
  Eigen::ArrayXd margin = y.array() * ((x * w).array() + b);
  // d/dm log(1+exp(-m)) = -sigmoid(-m)
  Eigen::ArrayXd sig(margin.size());
  for (Index i = 0; i < margin.size(); ++i) {
    double m = margin(i);
    sig(i) = m >= 0 ? std::exp(-m) / (1.0 + std::exp(-m)) : 1.0 / (1.0 + std::exp(m));
  }
  Eigen::VectorXd s = (-(y.array() * sig)).matrix();
  return {x.transpose() * s / n + lambda * w, s.sum() / n};
}

namespace detail {

struct BinaryCoding {
  int negative_class;
  int positive_class;
  Eigen::VectorXd signs;  // +1 for positive_class, -1 otherwise
};

inline BinaryCoding binary_coding(const std::vector<int>& labels) {
  std::vector<int> present(labels.begin(), labels.end());
  std::sort(present.begin(), present.end());
  present.erase(std::unique(present.begin(), present.end()), present.end());
  if (present.size() < 2)
    throw Error(ErrorCode::DegenerateTraining, "training split contains a single class");
  if (present.size() > 2)
    throw Error(ErrorCode::MulticlassUnsupported,
                "linear mechanisms support binary responses only");
  BinaryCoding out{present[0], present[1], Eigen::VectorXd(static_cast<Index>(labels.size()))};
  for (std::size_t i = 0; i < labels.size(); ++i)
    out.signs(static_cast<Index>(i)) = labels[i] == out.positive_class ? 1.0 : -1.0;
  return out;
}

inline LinearModel fit_logistic(const Eigen::MatrixXd& z, const std::vector<int>& labels,
                                const LogisticParams& params) {
  auto coding = binary_coding(labels);
  const auto& y = coding.signs;
  Eigen::VectorXd w = Eigen::VectorXd::Zero(z.cols());
  double b = 0.0;
  double f = logistic_objective(z, y, w, b, params.lambda);
  double step = 1.0;
  int iter = 0;
  for (; iter < params.max_iters; ++iter) {
    auto g = logistic_gradient(z, y, w, b, params.lambda);
    const double gnorm2 = g.weights.squaredNorm() + g.intercept * g.intercept;
    if (std::sqrt(gnorm2) <= params.tol) break;
    // Armijo backtracking with sufficient-decrease constant 1/2.
    while (true) {
      Eigen::VectorXd w_try = w - step * g.weights;
      double b_try = b - step * g.intercept;
      double f_try = logistic_objective(z, y, w_try, b_try, params.lambda);
      if (f_try <= f - 0.5 * step * gnorm2 || step < 1e-16) {
        w = std::move(w_try);
        b = b_try;
        f = f_try;
        break;
      }
      step *= 0.5;
    }
    step = std::min(step * 2.0, 1e4);
  }
  return {std::move(w), b, coding.negative_class, coding.positive_class, iter};
}

inline LinearModel fit_linear_svm(const Eigen::MatrixXd& z, const std::vector<int>& labels,
                                  const LinearSvmParams& params) {
  auto coding = binary_coding(labels);
  const auto& y = coding.signs;
  const double n = static_cast<double>(z.rows());
  const Index d = z.cols();
  Eigen::VectorXd w = Eigen::VectorXd::Zero(d);
  double b = 0.0;
  Eigen::VectorXd w_avg = Eigen::VectorXd::Zero(d);
  double b_avg = 0.0;
  const int average_from = params.epochs / 2 + 1;
  const double radius = params.lambda > 0 ? 1.0 / std::sqrt(params.lambda) : 0.0;
  for (int t = 1; t <= params.epochs; ++t) {
    Eigen::ArrayXd margin = y.array() * ((z * w).array() + b);
    Eigen::VectorXd active = (margin < 1.0).cast<double>().matrix().cwiseProduct(y);
    Eigen::VectorXd g_w = params.lambda * w - z.transpose() * active / n;
    double g_b = -active.sum() / n;
    const double eta = params.lambda > 0 ? 1.0 / (params.lambda * t) : 1.0 / t;
    w -= eta * g_w;
    b -= eta * g_b;
    if (params.lambda > 0) {
      double norm = w.norm();
      if (norm > radius) w *= radius / norm;
    }
    if (t >= average_from) {
      w_avg += w;
      b_avg += b;
    }
  }
  const double count = static_cast<double>(params.epochs - average_from + 1);
  return {w_avg / count, b_avg / count, coding.negative_class, coding.positive_class,
          params.epochs};
}

}  // namespace detail

/// Trains `config` on the given rows/columns. Deterministic in its inputs.
inline FittedModel fit(const MechanismConfig& config, const DatasetView& train) {
  if (train.n() == 0) throw Error(ErrorCode::EmptyTraining, "training split is empty");
  if (train.p() == 0) throw Error(ErrorCode::EmptyTraining, "training view has no columns");
  Eigen::MatrixXd x = train.matrix();
  std::vector<int> labels = train.labels();

  FittedModel model;
  model.kind = config.kind();
  model.spec = LearnerSpec(train.cols());
  model.standardizer = Standardizer::estimate(x);
  Eigen::MatrixXd z = model.standardizer.apply(x);

  std::visit(
      [&](const auto& p) {
        using T = std::decay_t<decltype(p)>;
        if constexpr (std::is_same_v<T, LogisticParams>) {
          model.params = detail::fit_logistic(z, labels, p);
        } else if constexpr (std::is_same_v<T, LinearSvmParams>) {
          model.params = detail::fit_linear_svm(z, labels, p);
        } else {
          model.params = KnnModel{std::move(z), labels, p.k_neighbors,
                                  static_cast<int>(train.dataset().class_count())};
        }
      },
      config.params());
  return model;
}

/// Labels for raw feature rows whose columns follow model.spec order.
inline std::vector<int> predict(const FittedModel& model, const Eigen::MatrixXd& rows) {
  if (static_cast<std::size_t>(rows.cols()) != model.spec.size())
    throw Error(ErrorCode::WidthMismatch, "row width " + std::to_string(rows.cols()) +
                                              " differs from learner dimension " +
                                              std::to_string(model.spec.size()));
  Eigen::MatrixXd z = model.standardizer.apply(rows);
  std::vector<int> out(static_cast<std::size_t>(rows.rows()));

  if (const auto* lin = model.linear()) {
    Eigen::VectorXd score = z * lin->weights;
    for (Index i = 0; i < z.rows(); ++i)
      out[static_cast<std::size_t>(i)] =
          score(i) + lin->intercept > 0.0 ? lin->positive_class : lin->negative_class;
    return out;
  }

  const auto& knn = *model.knn();
  const Index n_train = knn.train.rows();
  const auto k = static_cast<std::size_t>(std::min<Index>(knn.k_neighbors, n_train));
  std::vector<std::pair<double, Index>> dist(static_cast<std::size_t>(n_train));
  std::vector<int> votes(static_cast<std::size_t>(knn.class_count));
  for (Index i = 0; i < z.rows(); ++i) {
    for (Index t = 0; t < n_train; ++t)
      dist[static_cast<std::size_t>(t)] = {(knn.train.row(t) - z.row(i)).squaredNorm(), t};
    // (distance, training index) ordering breaks distance ties by lower row.
    std::partial_sort(dist.begin(), dist.begin() + static_cast<std::ptrdiff_t>(k), dist.end());
    std::fill(votes.begin(), votes.end(), 0);
    for (std::size_t j = 0; j < k; ++j)
      ++votes[static_cast<std::size_t>(knn.labels[static_cast<std::size_t>(dist[j].second)])];
    // max_element returns the first maximum: vote ties go to the lowest code.
    out[static_cast<std::size_t>(i)] =
        static_cast<int>(std::max_element(votes.begin(), votes.end()) - votes.begin());
  }
  return out;
}

inline std::vector<int> predict(const FittedModel& model, const DatasetView& rows) {
  if (rows.cols() != model.spec.attributes())
    throw Error(ErrorCode::WidthMismatch, "view columns differ from the model's attributes");
  return predict(model, rows.matrix());
}

/// Signs of linear-model weights; absent for knn.
inline std::optional<std::vector<int>> coefficient_signs(const FittedModel& model) {
  const auto* lin = model.linear();
  if (!lin) return std::nullopt;
  std::vector<int> signs(static_cast<std::size_t>(lin->weights.size()));
  for (Index j = 0; j < lin->weights.size(); ++j) {
    double w = lin->weights(j);
    signs[static_cast<std::size_t>(j)] = std::abs(w) < 1e-12 ? 0 : (w > 0 ? 1 : -1);
  }
  return signs;
}

}  // namespace swag

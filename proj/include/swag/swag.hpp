#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <optional>
#include <string>
#include <unordered_set>
#include <vector>

#include "swag/crossval.hpp"
#include "swag/dataset.hpp"
#include "swag/error.hpp"
#include "swag/learner_spec.hpp"
#include "swag/learners.hpp"
#include "swag/parallel.hpp"
#include "swag/rng.hpp"

namespace swag {

// ---------------------------------------------------------------------------
// Types

struct EvaluatedLearner {
  LearnerSpec spec;
  double error = 0.0;
  std::optional<std::vector<int>> signs;

  friend bool operator==(const EvaluatedLearner&, const EvaluatedLearner&) = default;
};

/// One screening step: every evaluated candidate of a dimension (list
/// position is the candidate index), the alpha-quantile of their errors and
/// the candidates at or below it.
struct StepResult {
  std::size_t dimension = 0;
  std::vector<EvaluatedLearner> candidates;
  double q_alpha = 0.0;
  std::vector<EvaluatedLearner> selected;
  std::vector<LearnerSpec> failed;  // fits that raised; excluded from the quantile
  bool exhaustive = false;

  std::vector<double> errors() const {
    std::vector<double> out;
    out.reserve(candidates.size());
    for (const auto& c : candidates) out.push_back(c.error);
    return out;
  }

  friend bool operator==(const StepResult&, const StepResult&) = default;
};

/// Meta-parameters of a run.
struct SwagConfig {
  std::size_t p_max = 3;
  std::size_t m = 100;
  double alpha = 0.05;
  int r = 10;
  int k = 10;
  std::uint64_t seed = 0;
  LossSpec loss;
  MechanismConfig mechanism;
  std::size_t max_generation_attempts_factor = 100;

  /// Dataset-independent checks. Returns advisory warnings.
  std::vector<std::string> validate() const {
    if (p_max < 1) throw ConfigError("swag.p_max", "must be >= 1");
    if (m < 1) throw ConfigError("swag.m", "must be >= 1");
    if (!(alpha > 0.0 && alpha < 1.0)) throw ConfigError("swag.alpha", "must lie in (0, 1)");
    if (r < 1) throw ConfigError("swag.r", "must be >= 1");
    if (k < 2) throw ConfigError("swag.k", "must be >= 2");
    if (max_generation_attempts_factor < 1)
      throw ConfigError("swag.max_generation_attempts_factor", "must be >= 1");
    loss.validate();
    mechanism.validate();
    return {};
  }

  /// Checks against a dataset with p attributes (and n instances, if known).
  std::vector<std::string> validate_for(std::size_t p, std::optional<std::size_t> n = {}) const {
    auto warnings = validate();
    if (p_max >= p)
      throw ConfigError("swag.p_max", "must be < p (p_max=" + std::to_string(p_max) +
                                          ", p=" + std::to_string(p) + ")");
    if (n && static_cast<std::size_t>(k) > *n)
      throw ConfigError("swag.k", "fold count exceeds the instance count");
    if (m < p)
      warnings.push_back("m=" + std::to_string(m) + " < p=" + std::to_string(p) +
                         ": the first step still builds all p one-attribute learners");
    const auto expected_s_star =
        std::max<std::size_t>(1, static_cast<std::size_t>(std::ceil(alpha * static_cast<double>(p) - 1e-9)));
    const double pairs = static_cast<double>(expected_s_star) * static_cast<double>(expected_s_star - 1) / 2.0;
    if (static_cast<double>(m) < pairs)
      warnings.push_back("m=" + std::to_string(m) + " is below C(" +
                         std::to_string(expected_s_star) +
                         ", 2): the two-attribute space of the screened set is not fully explored");
    return warnings;
  }

  /// Upper bound on distinct learners a run may train.
  std::size_t learner_bound(std::size_t p) const { return p + m * (p_max - 1); }

  friend bool operator==(const SwagConfig&, const SwagConfig&) = default;
};

struct SwagLibrary {
  std::vector<StepResult> steps;
  std::vector<std::size_t> s_star;
  SwagConfig config;

  /// Distinct learners trained (successful and failed candidates).
  std::size_t learners_trained() const {
    std::size_t total = 0;
    for (const auto& s : steps) total += s.candidates.size() + s.failed.size();
    return total;
  }

  friend bool operator==(const SwagLibrary&, const SwagLibrary&) = default;
};

struct StepEvent {
  std::size_t dimension = 0;
  std::size_t candidates = 0;
  std::size_t failed = 0;
  double q_alpha = 0.0;
  std::size_t selected = 0;
  bool exhaustive = false;
  double seconds = 0.0;
};

struct RunOptions {
  unsigned workers = 1;
  std::function<void(const StepEvent&)> on_step;
  std::function<void(const std::string&)> on_warning;
  FitObserver on_fit;  // invoked concurrently when workers > 1
};

// ---------------------------------------------------------------------------
// Quantile rule

/// Rank of the alpha-quantile order statistic: max(1, ceil(alpha * len)).
/// A 1e-9 slack absorbs products such as 0.07 * 100 landing just above an integer.
inline std::size_t quantile_rank(std::size_t len, double alpha) {
  const double raw = std::ceil(alpha * static_cast<double>(len) - 1e-9);
  return std::clamp<std::size_t>(raw < 1.0 ? 1 : static_cast<std::size_t>(raw), 1, len);
}

/// Order statistic at quantile_rank(len, alpha) of the ascending errors.
/// Selecting {e <= q} keeps at least that many elements (more under ties).
inline double alpha_quantile(std::vector<double> errors, double alpha) {
  if (errors.empty()) throw Error(ErrorCode::EmptyInput, "quantile of an empty error vector");
  if (!(alpha > 0.0 && alpha < 1.0)) throw ConfigError("alpha", "must lie in (0, 1)");
  const std::size_t rank = quantile_rank(errors.size(), alpha);
  std::nth_element(errors.begin(), errors.begin() + static_cast<std::ptrdiff_t>(rank - 1), errors.end());
  return errors[rank - 1];
}

inline std::vector<EvaluatedLearner> select_at_most(const std::vector<EvaluatedLearner>& candidates,
                                                    double threshold) {
  std::vector<EvaluatedLearner> out;
  for (const auto& c : candidates)
    if (c.error <= threshold) out.push_back(c);
  return out;
}

// ---------------------------------------------------------------------------
// Candidate generation

/// C(n, k), saturating at SIZE_MAX.
inline std::size_t binomial(std::size_t n, std::size_t k) {
  if (k > n) return 0;
  k = std::min(k, n - k);
  // Exact in 128 bits while the value fits 64 bits: result_i = result_{i-1} * (n-k+i) / i.
  unsigned __int128 result = 1;
  for (std::size_t i = 1; i <= k; ++i) {
    result = result * (n - k + i) / i;
    if (result > std::numeric_limits<std::size_t>::max()) return std::numeric_limits<std::size_t>::max();
  }
  return static_cast<std::size_t>(result);
}

/// All size-`dimension` subsets of `pool` (sorted) in lexicographic order.
inline std::vector<LearnerSpec> all_subsets(const std::vector<std::size_t>& pool, std::size_t dimension) {
  std::vector<LearnerSpec> out;
  const std::size_t n = pool.size();
  if (dimension == 0 || dimension > n) return out;
  std::vector<std::size_t> idx(dimension);
  for (std::size_t i = 0; i < dimension; ++i) idx[i] = i;
  while (true) {
    std::vector<std::size_t> attrs(dimension);
    for (std::size_t i = 0; i < dimension; ++i) attrs[i] = pool[idx[i]];
    out.emplace_back(std::move(attrs));
    std::size_t i = dimension;
    while (i > 0 && idx[i - 1] == n - dimension + i - 1) --i;
    if (i == 0) break;
    ++idx[i - 1];
    for (std::size_t j = i; j < dimension; ++j) idx[j] = idx[j - 1] + 1;
  }
  return out;
}

struct GenerationResult {
  std::vector<LearnerSpec> specs;
  bool exhaustive = false;
  std::size_t attempts = 0;
  bool truncated = false;  // attempt cap hit before m distinct specs
};

/// Candidate specs of size `dimension` drawn from s_star. Exhaustive when
/// C(|s_star|, dimension) <= m; otherwise each draw extends a uniformly chosen
/// parent by a uniformly chosen attribute of s_star outside it, keeping unseen
/// unions until m are found or m * attempts_factor draws were made.
inline GenerationResult generate_candidates(const std::vector<std::size_t>& s_star,
                                            const std::vector<LearnerSpec>& parents,
                                            std::size_t dimension, std::size_t m, Rng& rng,
                                            std::size_t attempts_factor = 100) {
  if (dimension < 2) throw Error(ErrorCode::InvalidConfig, "general step needs dimension >= 2");
  if (m < 1) throw ConfigError("swag.m", "must be >= 1");
  if (dimension > s_star.size())
    throw Error(ErrorCode::ImpossibleDimension,
                "no " + std::to_string(dimension) + "-subsets of a screened set of size " +
                    std::to_string(s_star.size()));
  if (!std::is_sorted(s_star.begin(), s_star.end()))
    throw Error(ErrorCode::InvalidConfig, "screened attribute set must be sorted");

  GenerationResult out;
  if (binomial(s_star.size(), dimension) <= m) {
    out.specs = all_subsets(s_star, dimension);
    out.exhaustive = true;
    return out;
  }

  if (parents.empty()) throw Error(ErrorCode::EmptyInput, "no parent learners to extend");
  for (const auto& parent : parents) {
    if (parent.size() + 1 != dimension)
      throw Error(ErrorCode::InvalidConfig, "parent " + parent.to_string() + " has the wrong dimension");
    for (std::size_t a : parent)
      if (!std::binary_search(s_star.begin(), s_star.end(), a))
        throw Error(ErrorCode::InvalidConfig, "parent " + parent.to_string() + " leaves the screened set");
  }

  std::unordered_set<LearnerSpec, LearnerSpecHash> seen;
  std::uniform_int_distribution<std::size_t> pick_parent(0, parents.size() - 1);
  const std::size_t max_attempts = m * attempts_factor;
  std::vector<std::size_t> complement;
  while (out.specs.size() < m && out.attempts < max_attempts) {
    ++out.attempts;
    const LearnerSpec& parent = parents[pick_parent(rng)];
    complement.clear();
    std::set_difference(s_star.begin(), s_star.end(), parent.begin(), parent.end(),
                        std::back_inserter(complement));
    std::uniform_int_distribution<std::size_t> pick_attr(0, complement.size() - 1);
    LearnerSpec child = parent.with(complement[pick_attr(rng)]);
    if (seen.insert(child).second) out.specs.push_back(std::move(child));
  }
  out.truncated = out.specs.size() < m;
  return out;
}

// ---------------------------------------------------------------------------
// Screening steps

/// Fold assignments shared by every candidate of the step at `dimension`.
inline std::vector<FoldAssignment> step_folds(const Dataset& data, const SwagConfig& config,
                                              std::size_t dimension) {
  CvProtocol protocol{config.r, config.k,
                      derive_seed(config.seed ^ kFoldStreamTag, static_cast<std::uint64_t>(dimension))};
  return repeated_folds(data, protocol);
}

/// Evaluates candidate specs concurrently and reduces them by index into a
/// StepResult (quantile and selection included).
inline StepResult evaluate_step(const Dataset& data, const SwagConfig& config, std::size_t dimension,
                                const std::vector<LearnerSpec>& specs, bool exhaustive,
                                const RunOptions& options) {
  const auto folds = step_folds(data, config, dimension);
  const DatasetView all_rows = full_view(data);
  std::vector<std::optional<EvaluatedLearner>> results(specs.size());
  parallel_for(specs.size(), options.workers, [&](std::size_t i) {
    const LearnerSpec& spec = specs[i];
    try {
      EvaluatedLearner learner{spec, cv_error(data, spec, config.mechanism, folds, config.loss, options.on_fit),
                               std::nullopt};
      if (config.mechanism.is_linear()) {
        if (options.on_fit) options.on_fit(spec);
        learner.signs = coefficient_signs(fit(config.mechanism, subset_columns(data, spec)));
      }
      results[i] = std::move(learner);
    } catch (const Error& e) {
      if (e.code() == ErrorCode::IndexOutOfRange) throw;
      results[i].reset();
    }
  });

  StepResult step;
  step.dimension = dimension;
  step.exhaustive = exhaustive;
  for (std::size_t i = 0; i < specs.size(); ++i) {
    if (results[i])
      step.candidates.push_back(std::move(*results[i]));
    else
      step.failed.push_back(specs[i]);
  }
  if (step.candidates.empty())
    throw Error(ErrorCode::AllCandidatesFailed,
                "every candidate of dimension " + std::to_string(dimension) + " failed to train");
  if (!step.failed.empty() && options.on_warning)
    options.on_warning(std::to_string(step.failed.size()) + " candidate(s) of dimension " +
                       std::to_string(dimension) + " failed to train and were excluded");
  step.q_alpha = alpha_quantile(step.errors(), config.alpha);
  step.selected = select_at_most(step.candidates, step.q_alpha);
  return step;
}

struct FirstScreen {
  StepResult step;
  std::vector<std::size_t> s_star;
};

/// One-attribute screening over every attribute; s_star collects the
/// attributes of the selected learners.
inline FirstScreen first_screen(const Dataset& data, const SwagConfig& config,
                                const RunOptions& options = {}) {
  config.validate();
  std::vector<LearnerSpec> specs;
  specs.reserve(data.p());
  for (std::size_t j = 0; j < data.p(); ++j) specs.push_back(LearnerSpec{j});
  FirstScreen out{evaluate_step(data, config, 1, specs, true, options), {}};
  for (const auto& learner : out.step.selected)
    out.s_star.insert(out.s_star.end(), learner.spec.begin(), learner.spec.end());
  std::sort(out.s_star.begin(), out.s_star.end());
  out.s_star.erase(std::unique(out.s_star.begin(), out.s_star.end()), out.s_star.end());
  return out;
}

/// Screening at `dimension` >= 2, extending the previous step's selected specs.
inline StepResult general_screen(const Dataset& data, const SwagConfig& config,
                                 const std::vector<std::size_t>& s_star,
                                 const std::vector<LearnerSpec>& parents, std::size_t dimension,
                                 const RunOptions& options = {}) {
  Rng rng(derive_seed(config.seed ^ kGenerationStreamTag, static_cast<std::uint64_t>(dimension)));
  auto generated = generate_candidates(s_star, parents, dimension, config.m, rng,
                                       config.max_generation_attempts_factor);
  if (generated.truncated && options.on_warning)
    options.on_warning("dimension " + std::to_string(dimension) + ": only " +
                       std::to_string(generated.specs.size()) + " distinct candidates after " +
                       std::to_string(generated.attempts) + " draws (m=" + std::to_string(config.m) + ")");
  return evaluate_step(data, config, dimension, generated.specs, generated.exhaustive, options);
}

/// Greedy dimension-increasing loop: first screen, then general screens for
/// dimensions 2..p_max, each extending the previous selection. Stops early
/// once the screened set is too small for the next dimension.
inline SwagLibrary run_swag(const Dataset& data, const SwagConfig& config, const RunOptions& options = {}) {
  for (const auto& w : config.validate_for(data.p(), data.n()))
    if (options.on_warning) options.on_warning(w);
  if (config.mechanism.is_linear() && data.class_count() > 2)
    throw Error(ErrorCode::MulticlassUnsupported,
                std::string(to_string(config.mechanism.kind())) + " supports binary responses only; the response has " +
                    std::to_string(data.class_count()) + " classes");
  if (config.loss.kind == LossKind::CostMatrix && config.loss.cost.size() != data.class_count())
    throw ConfigError("loss.cost", "matrix size differs from the class count");

  using Clock = std::chrono::steady_clock;
  auto report = [&](const StepResult& step, Clock::time_point start) {
    if (!options.on_step) return;
    options.on_step(StepEvent{step.dimension, step.candidates.size(), step.failed.size(), step.q_alpha,
                              step.selected.size(), step.exhaustive,
                              std::chrono::duration<double>(Clock::now() - start).count()});
  };

  SwagLibrary library;
  library.config = config;
  auto start = Clock::now();
  auto first = first_screen(data, config, options);
  report(first.step, start);
  library.s_star = std::move(first.s_star);
  library.steps.push_back(std::move(first.step));

  for (std::size_t dim = 2; dim <= config.p_max; ++dim) {
    if (dim > library.s_star.size()) break;
    std::vector<LearnerSpec> parents;
    for (const auto& learner : library.steps.back().selected) parents.push_back(learner.spec);
    start = Clock::now();
    auto step = general_screen(data, config, library.s_star, parents, dim, options);
    report(step, start);
    library.steps.push_back(std::move(step));
  }
  return library;
}

}  // namespace swag

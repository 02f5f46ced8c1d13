#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <mutex>
#include <set>

#include "support.hpp"
#include "swag/swag.hpp"

using namespace swag;

namespace {

SwagConfig small_config(MechanismConfig mech = MechanismConfig(KnnParams{1})) {
  SwagConfig c;
  c.p_max = 3;
  c.m = 20;
  c.alpha = 0.2;
  c.r = 2;
  c.k = 4;
  c.seed = 9;
  c.mechanism = mech;
  return c;
}

/// Dataset whose columns listed in `perfect` separate the classes exactly.
Dataset with_perfect_columns(std::size_t n, std::size_t p, const std::vector<std::size_t>& perfect,
                             std::uint64_t seed) {
  Dataset base = fixtures::make_noise(n, p, seed);
  Eigen::MatrixXd x = base.features();
  for (std::size_t j : perfect)
    for (std::size_t i = 0; i < n; ++i)
      x(static_cast<Index>(i), static_cast<Index>(j)) = base.labels()[i] * 10.0 + 0.001 * static_cast<double>(i);
  return Dataset(x, base.labels(), base.class_names(), base.attribute_names());
}

}  // namespace

TEST(AlphaQuantile, RankArithmetic) {
  std::vector<double> tenths{1.0, 0.9, 0.8, 0.7, 0.6, 0.5, 0.4, 0.3, 0.2, 0.1};
  EXPECT_DOUBLE_EQ(alpha_quantile(tenths, 0.2), 0.2);
  EXPECT_EQ(alpha_quantile({0.7}, 0.01), 0.7);
  EXPECT_EQ(alpha_quantile({0.3, 0.3, 0.3}, 0.01), 0.3);
  EXPECT_THROW(alpha_quantile({}, 0.5), Error);
  EXPECT_EQ(quantile_rank(100, 0.07), 7u);
  EXPECT_EQ(quantile_rank(45, 0.05), 3u);
  EXPECT_EQ(quantile_rank(3, 0.001), 1u);
}

TEST(AlphaQuantile, DistinctErrorSelectionSizes) {
  std::vector<EvaluatedLearner> hundred;
  for (std::size_t j = 0; j < 100; ++j) hundred.push_back({LearnerSpec{j}, 0.001 * static_cast<double>((j * 37) % 100), {}});
  std::vector<double> errors;
  for (const auto& l : hundred) errors.push_back(l.error);
  EXPECT_EQ(select_at_most(hundred, alpha_quantile(errors, 0.05)).size(), 5u);

  std::vector<EvaluatedLearner> pairs;
  for (std::size_t i = 0; i < 45; ++i) pairs.push_back({LearnerSpec{i, i + 50}, 0.5 - 0.01 * static_cast<double>(i), {}});
  std::vector<double> pe;
  for (const auto& l : pairs) pe.push_back(l.error);
  EXPECT_EQ(select_at_most(pairs, alpha_quantile(pe, 0.05)).size(), 3u);
}

TEST(Binomial, SmallValuesAndSaturation) {
  EXPECT_EQ(binomial(10, 2), 45u);
  EXPECT_EQ(binomial(3, 4), 0u);
  EXPECT_EQ(binomial(34, 3), 5984u);
  EXPECT_EQ(binomial(15739, 8), std::numeric_limits<std::size_t>::max());
}

TEST(FirstScreen, SingleAttribute) {
  Dataset d = fixtures::make_planted(20, 1, {0}, 1.0, 3);
  auto config = small_config();
  config.alpha = 0.01;
  auto first = first_screen(d, config);
  ASSERT_EQ(first.step.candidates.size(), 1u);
  EXPECT_EQ(first.s_star, std::vector<std::size_t>{0});
}

TEST(FirstScreen, PlantedSeparatorSurvives) {
  Dataset d = with_perfect_columns(60, 30, {17}, 4);
  auto config = small_config();
  config.alpha = 0.05;
  auto first = first_screen(d, config);
  EXPECT_EQ(first.step.candidates.size(), 30u);
  EXPECT_EQ(first.step.candidates[17].error, 0.0);
  EXPECT_TRUE(std::binary_search(first.s_star.begin(), first.s_star.end(), 17u));
  for (std::size_t j = 0; j < 30; ++j) EXPECT_EQ(first.step.candidates[j].spec, LearnerSpec{j});
}

TEST(GenerateCandidates, ExhaustiveIsLexicographic) {
  std::vector<std::size_t> s_star{0, 2, 3, 5, 7, 8, 11, 12, 13, 20};
  Rng rng(1);
  auto out = generate_candidates(s_star, {LearnerSpec{0}}, 2, 100, rng);
  ASSERT_TRUE(out.exhaustive);
  ASSERT_EQ(out.specs.size(), 45u);
  EXPECT_TRUE(std::is_sorted(out.specs.begin(), out.specs.end()));
  EXPECT_EQ(out.specs.front(), (LearnerSpec{0, 2}));
  EXPECT_EQ(out.specs.back(), (LearnerSpec{13, 20}));
}

TEST(GenerateCandidates, SampledAreDistinctSupersetsOfParents) {
  std::vector<std::size_t> s_star{1, 2, 3, 4, 5, 6, 7, 8, 9, 10};
  std::vector<LearnerSpec> parents{LearnerSpec{2}, LearnerSpec{5}, LearnerSpec{9}};
  Rng rng(42);
  auto out = generate_candidates(s_star, parents, 2, 20, rng);
  ASSERT_FALSE(out.exhaustive);
  ASSERT_EQ(out.specs.size(), 20u);
  std::set<LearnerSpec> unique(out.specs.begin(), out.specs.end());
  EXPECT_EQ(unique.size(), 20u);
  for (const auto& s : out.specs) {
    EXPECT_EQ(s.size(), 2u);
    bool extends = std::any_of(parents.begin(), parents.end(), [&](const LearnerSpec& parent) {
      return std::includes(s.begin(), s.end(), parent.begin(), parent.end());
    });
    EXPECT_TRUE(extends) << s.to_string();
  }
  Rng again(42);
  EXPECT_EQ(generate_candidates(s_star, parents, 2, 20, again).specs, out.specs);
}

TEST(GenerateCandidates, ImpossibleDimension) {
  Rng rng(1);
  try {
    generate_candidates({0, 1, 2}, {LearnerSpec{0, 1, 2}}, 4, 10, rng);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::ImpossibleDimension);
  }
}

TEST(GenerateCandidates, AttemptCapTruncates) {
  // A single parent {0} can reach only 9 distinct pairs, fewer than m = 30.
  std::vector<std::size_t> s_star{0, 1, 2, 3, 4, 5, 6, 7, 8, 9};
  Rng rng(5);
  auto out = generate_candidates(s_star, {LearnerSpec{0}}, 2, 30, rng, 10);
  EXPECT_TRUE(out.truncated);
  EXPECT_EQ(out.specs.size(), 9u);
  EXPECT_EQ(out.attempts, 300u);
}

TEST(GeneralScreen, ExhaustiveIndependentOfSeed) {
  Dataset d = fixtures::make_planted(40, 6, {0, 1}, 1.5, 2);
  auto config = small_config();
  config.m = 100;
  std::vector<std::size_t> s_star{0, 1, 3, 4};
  std::vector<LearnerSpec> parents{LearnerSpec{0}, LearnerSpec{1}};
  auto a = general_screen(d, config, s_star, parents, 2);
  config.seed = 1234;
  auto b = general_screen(d, config, s_star, parents, 2);
  ASSERT_EQ(a.candidates.size(), 6u);
  for (std::size_t i = 0; i < a.candidates.size(); ++i) EXPECT_EQ(a.candidates[i].spec, b.candidates[i].spec);
}

TEST(GeneralScreen, SelectionWithinBounds) {
  Dataset d = fixtures::make_planted(40, 8, {0, 1, 2}, 1.0, 8);
  auto config = small_config(MechanismConfig(LogisticParams{}));
  config.m = 10;
  auto step = general_screen(d, config, {0, 1, 2, 3, 4, 5, 6, 7}, {LearnerSpec{0}, LearnerSpec{2}}, 2);
  ASSERT_FALSE(step.candidates.empty());
  double max_error = 0.0;
  for (const auto& c : step.candidates) max_error = std::max(max_error, c.error);
  EXPECT_LE(step.q_alpha, max_error);
  for (const auto& s : step.selected) {
    EXPECT_LE(s.error, step.q_alpha);
    ASSERT_TRUE(s.signs.has_value());
    EXPECT_EQ(s.signs->size(), 2u);
  }
}

TEST(RunSwag, MeterASettingsValidate) {
  SwagConfig c;
  c.p_max = 6;
  c.m = 3984;
  c.alpha = 0.05;
  EXPECT_NO_THROW(c.validate_for(666, 69));
  EXPECT_EQ(c.learner_bound(666), 666u + 3984u * 5u);
}

TEST(RunSwag, ConfigErrorsBeforeTraining) {
  Dataset d = fixtures::make_noise(20, 4, 1);
  auto config = small_config();
  config.p_max = 4;
  EXPECT_THROW(run_swag(d, config), ConfigError);
  config.p_max = 2;
  config.alpha = 1.5;
  EXPECT_THROW(run_swag(d, config), ConfigError);
  config.alpha = 0.2;
  config.k = 21;
  EXPECT_THROW(run_swag(d, config), ConfigError);
}

TEST(RunSwag, StopsWhenScreenedSetIsExhausted) {
  Dataset d = with_perfect_columns(40, 5, {1, 3}, 6);
  auto config = small_config();
  config.p_max = 4;
  config.alpha = 0.4;
  auto library = run_swag(d, config);
  EXPECT_EQ(library.s_star, (std::vector<std::size_t>{1, 3}));
  ASSERT_EQ(library.steps.size(), 2u);
  EXPECT_EQ(library.steps.back().dimension, 2u);
}

TEST(RunSwag, StepInvariantsAndBound) {
  for (std::uint64_t seed = 0; seed < 4; ++seed) {
    Dataset d = fixtures::make_planted(50, 15, {2, 5, 9}, 1.2, seed);
    SwagConfig config = small_config(seed % 2 ? MechanismConfig(LogisticParams{}) : MechanismConfig(KnnParams{3}));
    config.seed = seed;
    config.alpha = 0.3;
    config.m = 15;
    config.p_max = 4;
    std::mutex mutex;
    std::set<LearnerSpec> trained;
    RunOptions options;
    options.workers = 3;
    options.on_fit = [&](const LearnerSpec& s) {
      std::lock_guard lock(mutex);
      trained.insert(s);
    };
    auto library = run_swag(d, config, options);
    EXPECT_LE(trained.size(), config.learner_bound(d.p()));
    EXPECT_EQ(trained.size(), library.learners_trained());
    ASSERT_EQ(library.steps.front().dimension, 1u);
    for (std::size_t s = 0; s < library.steps.size(); ++s) {
      const auto& step = library.steps[s];
      EXPECT_EQ(step.dimension, s + 1);
      std::set<LearnerSpec> unique;
      for (const auto& c : step.candidates) {
        EXPECT_EQ(c.spec.size(), step.dimension);
        unique.insert(c.spec);
        if (step.dimension >= 2)
          for (std::size_t a : c.spec) EXPECT_TRUE(std::binary_search(library.s_star.begin(), library.s_star.end(), a));
      }
      EXPECT_EQ(unique.size(), step.candidates.size());
      EXPECT_EQ(step.selected, select_at_most(step.candidates, step.q_alpha));
      EXPECT_GE(step.selected.size(), quantile_rank(step.candidates.size(), config.alpha));
      if (s > 0 && !step.exhaustive) {
        const auto& parents = library.steps[s - 1].selected;
        for (const auto& c : step.candidates) {
          bool extends = std::any_of(parents.begin(), parents.end(), [&](const EvaluatedLearner& p) {
            return std::includes(c.spec.begin(), c.spec.end(), p.spec.begin(), p.spec.end());
          });
          EXPECT_TRUE(extends);
        }
      }
    }
  }
}

TEST(RunSwag, DeterministicAcrossWorkerCounts) {
  Dataset d = fixtures::make_planted(60, 12, {1, 4}, 1.0, 31);
  SwagConfig config = small_config(MechanismConfig(LogisticParams{}));
  config.m = 12;
  config.alpha = 0.25;
  RunOptions one;
  RunOptions many;
  many.workers = 6;
  auto a = run_swag(d, config, one);
  auto b = run_swag(d, config, many);
  EXPECT_EQ(a, b);
}

TEST(RunSwag, FailedCandidatesAreExcluded) {
  // With k = n for logistic, the lone member of class B leaves a single-class training split.
  Eigen::MatrixXd x(6, 3);
  x << 0, 1, 2, 1, 2, 3, 2, 3, 1, 3, 1, 2, 4, 0, 1, 5, 5, 5;
  Dataset d(x, {0, 0, 0, 0, 0, 1}, {"A", "B"}, {"a", "b", "c"});
  auto config = small_config(MechanismConfig(LogisticParams{}));
  config.p_max = 2;
  config.k = 6;
  config.r = 1;
  try {
    run_swag(d, config);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::AllCandidatesFailed);
  }
}

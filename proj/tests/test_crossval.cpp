#include <gtest/gtest.h>

#include "support.hpp"
#include "swag/crossval.hpp"

using namespace swag;

TEST(Loss, Misclassification) {
  EXPECT_EQ(loss({0, 1, 1}, {0, 1, 1}, LossSpec{}), 0.0);
  EXPECT_EQ(loss({0, 1, 1, 0}, {1, 1, 0, 0}, LossSpec{}), 0.5);
}

TEST(Loss, CostMatrixMean) {
  // Classes A=0, B=1; truth (B, A), predicted (A, A): cost[B][A] = 5, cost[A][A] = 0.
  auto spec = LossSpec::cost_matrix({{0, 1}, {5, 0}});
  EXPECT_DOUBLE_EQ(loss({0, 0}, {1, 0}, spec), 2.5);
  EXPECT_DOUBLE_EQ(spec.max_value(), 5.0);
}

TEST(Loss, CostMatrixInClassOrder) {
  // Written as (B, A) order; resolves to code order (A, B).
  auto spec = LossSpec::cost_matrix({{0, 5}, {1, 0}}, {"B", "A"}, {"A", "B"});
  EXPECT_EQ(spec.cost, (std::vector<std::vector<double>>{{0, 1}, {5, 0}}));
}

TEST(Loss, Errors) {
  EXPECT_THROW(loss({0}, {0, 1}, LossSpec{}), Error);
  auto spec = LossSpec::cost_matrix({{0, 1}, {1, 0}});
  try {
    loss({2}, {0}, spec);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::LabelOutOfRange);
  }
  EXPECT_THROW(LossSpec::cost_matrix({{1, 1}, {1, 0}}), ConfigError);
  EXPECT_THROW(LossSpec::cost_matrix({{0, -1}, {1, 0}}), ConfigError);
}

TEST(CvError, SeparableLeaveOneOutIsZero) {
  Dataset d = fixtures::make_planted(30, 3, {0}, 0.0, 1);
  // Make attribute 0 separate the classes with a margin.
  Eigen::MatrixXd x = d.features();
  for (std::size_t i = 0; i < d.n(); ++i) x(static_cast<Index>(i), 0) = d.labels()[i] * 10.0 + 0.01 * static_cast<double>(i);
  Dataset sep(x, d.labels(), d.class_names(), d.attribute_names());
  double e = cv_error(sep, LearnerSpec{0}, MechanismConfig(KnnParams{1}), CvProtocol{1, 30, 5}, LossSpec{});
  EXPECT_EQ(e, 0.0);
}

TEST(CvError, LeaveOneOutMatchesBruteForceScan) {
  Dataset d = fixtures::make_planted(30, 2, {0}, 1.0, 77);
  double e = cv_error(d, LearnerSpec{0, 1}, MechanismConfig(KnnParams{1}), CvProtocol{1, 30, 9}, LossSpec{});

  // Brute force: standardize on the 29 training rows, nearest neighbor by squared distance.
  std::size_t wrong = 0;
  const auto& x = d.features();
  for (Index q = 0; q < x.rows(); ++q) {
    Eigen::RowVectorXd mean = Eigen::RowVectorXd::Zero(2), sd = Eigen::RowVectorXd::Zero(2);
    for (Index i = 0; i < x.rows(); ++i)
      if (i != q) mean += x.row(i);
    mean /= 29.0;
    for (Index i = 0; i < x.rows(); ++i)
      if (i != q) sd += (x.row(i) - mean).array().square().matrix();
    sd = (sd / 29.0).cwiseSqrt();
    double best = std::numeric_limits<double>::infinity();
    int label = -1;
    for (Index i = 0; i < x.rows(); ++i) {
      if (i == q) continue;
      double dist = ((x.row(i) - x.row(q)).array() / sd.array()).square().sum();
      if (dist < best) {
        best = dist;
        label = d.labels()[static_cast<std::size_t>(i)];
      }
    }
    wrong += label != d.labels()[static_cast<std::size_t>(q)];
  }
  EXPECT_EQ(e, static_cast<double>(wrong) / 30.0);
}

TEST(CvError, RandomLabelsNearChance) {
  Dataset d = fixtures::make_noise(100, 2, 2024);
  double e = cv_error(d, LearnerSpec{0, 1}, MechanismConfig(KnnParams{1}), CvProtocol{10, 10, 3}, LossSpec{});
  EXPECT_GE(e, 0.35);
  EXPECT_LE(e, 0.65);
}

TEST(CvError, RepetitionsAverage) {
  Dataset d = fixtures::make_planted(40, 3, {1}, 1.0, 5);
  CvProtocol two{2, 5, 123};
  auto folds = repeated_folds(d, two);
  const MechanismConfig mech(LogisticParams{});
  double both = cv_error(d, LearnerSpec{0, 1}, mech, two, LossSpec{});
  double first = cv_error(d, LearnerSpec{0, 1}, mech, std::vector<FoldAssignment>{folds[0]}, LossSpec{});
  double second = cv_error(d, LearnerSpec{0, 1}, mech, std::vector<FoldAssignment>{folds[1]}, LossSpec{});
  EXPECT_EQ(both, (first + second) / 2.0);
}

TEST(CvError, BoundedAndReproducible) {
  auto cost = LossSpec::cost_matrix({{0, 1}, {4, 0}});
  for (std::uint64_t seed = 0; seed < 8; ++seed) {
    Dataset d = fixtures::make_planted(37, 3, {0}, 0.5, seed);
    CvProtocol protocol{3, 4, seed};
    for (const auto& mech : {MechanismConfig(LogisticParams{}), MechanismConfig(LinearSvmParams{}),
                             MechanismConfig(KnnParams{3})}) {
      double e = cv_error(d, LearnerSpec{0, 2}, mech, protocol, LossSpec{});
      EXPECT_GE(e, 0.0);
      EXPECT_LE(e, 1.0);
      EXPECT_EQ(e, cv_error(d, LearnerSpec{0, 2}, mech, protocol, LossSpec{}));
      double c = cv_error(d, LearnerSpec{0, 2}, mech, protocol, cost);
      EXPECT_GE(c, 0.0);
      EXPECT_LE(c, 4.0);
    }
  }
}

TEST(CvError, ObserverSeesEveryFit) {
  Dataset d = fixtures::make_noise(20, 2, 1);
  std::size_t fits = 0;
  cv_error(d, LearnerSpec{1}, MechanismConfig(KnnParams{1}), CvProtocol{3, 4, 0}, LossSpec{},
           [&](const LearnerSpec& s) {
             EXPECT_EQ(s, LearnerSpec{1});
             ++fits;
           });
  EXPECT_EQ(fits, 12u);
}

TEST(CvError, FitErrorsCarryCoordinates) {
  // Class B has a single member; some training split lacks it.
  Eigen::MatrixXd x(4, 1);
  x << 0, 1, 2, 3;
  Dataset d(x, {0, 0, 0, 1}, {"A", "B"}, {"x"});
  try {
    cv_error(d, LearnerSpec{0}, MechanismConfig(LogisticParams{}), CvProtocol{1, 4, 0}, LossSpec{});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::DegenerateTraining);
    EXPECT_NE(std::string(e.what()).find("repetition 0"), std::string::npos);
  }
}

#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "neucrowd/errors.hpp"
#include "neucrowd/metrics.hpp"
#include "test_util.hpp"

namespace neucrowd {
namespace {

double brute_auc(const std::vector<double>& s, const std::vector<int>& y) {
  double wins = 0.0;
  double pairs = 0.0;
  for (std::size_t i = 0; i < s.size(); ++i) {
    for (std::size_t j = 0; j < s.size(); ++j) {
      if (y[i] != 1 || y[j] != 0) continue;
      pairs += 1.0;
      wins += s[i] > s[j] ? 1.0 : (s[i] == s[j] ? 0.5 : 0.0);
    }
  }
  return wins / pairs;
}

// Newton's method on the same objective, with the bias as an extra
// unpenalized coordinate.
Eigen::VectorXd newton_logreg(const Eigen::MatrixXd& x, const std::vector<int>& y, double c) {
  const Eigen::Index d = x.rows();
  const double n = static_cast<double>(x.cols());
  Eigen::MatrixXd xa(d + 1, x.cols());
  xa << x, Eigen::RowVectorXd::Ones(x.cols());
  Eigen::VectorXd theta = Eigen::VectorXd::Zero(d + 1);
  Eigen::VectorXd penalty = Eigen::VectorXd::Constant(d + 1, 1.0 / (c * n));
  penalty(d) = 0.0;
  for (int it = 0; it < 100; ++it) {
    const Eigen::VectorXd z = xa.transpose() * theta;
    Eigen::VectorXd p(z.size()), r(z.size());
    for (Eigen::Index i = 0; i < z.size(); ++i) {
      p(i) = 1.0 / (1.0 + std::exp(-z(i)));
      r(i) = p(i) * (1 - p(i));
    }
    Eigen::VectorXd yv(z.size());
    for (Eigen::Index i = 0; i < z.size(); ++i) yv(i) = y[static_cast<std::size_t>(i)];
    const Eigen::VectorXd grad = xa * (p - yv) / n + penalty.cwiseProduct(theta);
    Eigen::MatrixXd hess = xa * r.asDiagonal() * xa.transpose() / n;
    hess.diagonal() += penalty;
    theta -= hess.ldlt().solve(grad);
    if (grad.norm() < 1e-14) break;
  }
  return theta;
}

TEST(Auc, Examples) {
  EXPECT_DOUBLE_EQ(auc(std::vector<double>{0.1, 0.2, 0.8, 0.9}, std::vector<int>{0, 0, 1, 1}), 1.0);
  EXPECT_DOUBLE_EQ(auc(std::vector<double>{1, 1, 1}, std::vector<int>{0, 1, 1}), 0.5);
  EXPECT_DOUBLE_EQ(auc(std::vector<double>{0.9, 0.8, 0.3}, std::vector<int>{1, 0, 1}), 0.5);
  EXPECT_THROW(auc(std::vector<double>{1, 2}, std::vector<int>{1, 1}), UndefinedMetricError);
  EXPECT_THROW(auc(std::vector<double>{1}, std::vector<int>{1, 0}), ShapeError);
}

TEST(Auc, AgreesWithPairCountingAndIsRankInvariant) {
  std::mt19937_64 rng(7);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t n = 2 + rng() % 60;
    std::vector<double> s(n);
    std::vector<int> y(n);
    for (std::size_t i = 0; i < n; ++i) {
      s[i] = static_cast<double>(rng() % 10);
      y[i] = static_cast<int>(rng() % 2);
    }
    y[0] = 0;
    y[1] = 1;
    const double a = auc(s, y);
    EXPECT_NEAR(a, brute_auc(s, y), 1e-12);
    std::vector<double> t(n);
    for (std::size_t i = 0; i < n; ++i) t[i] = std::exp(0.3 * s[i]) - 5.0;
    EXPECT_NEAR(auc(t, y), a, 1e-12);
  }
}

TEST(Accuracy, Examples) {
  EXPECT_DOUBLE_EQ(accuracy(std::vector<int>{1, 0}, std::vector<int>{1, 0}), 1.0);
  EXPECT_DOUBLE_EQ(accuracy(std::vector<int>{1, 0, 1}, std::vector<int>{1, 1, 1}), 2.0 / 3.0);
  EXPECT_DOUBLE_EQ(accuracy(std::vector<int>{0, 1, 0}, std::vector<int>{1, 1, 1}), 1.0 / 3.0);
  EXPECT_THROW(accuracy(std::vector<int>{}, std::vector<int>{}), UsageError);
}

TEST(LogSpacedGrid, Endpoints) {
  const auto g = log_spaced_grid(1e-4, 1e4, 9);
  ASSERT_EQ(g.size(), 9u);
  EXPECT_NEAR(g[0], 1e-4, 1e-18);
  EXPECT_NEAR(g[4], 1.0, 1e-12);
  EXPECT_NEAR(g[8], 1e4, 1e-8);
  EXPECT_THROW(log_spaced_grid(0.0, 1.0, 3), ConfigError);
}

TEST(LogReg, ObjectiveNeverIncreases) {
  std::mt19937_64 rng(1);
  const Eigen::MatrixXd x = testing::random_matrix(4, 80, rng);
  std::vector<int> y(80);
  for (int i = 0; i < 80; ++i) y[static_cast<std::size_t>(i)] = x(0, i) + 0.5 * x(1, i) > 0;
  std::vector<double> trace;
  fit_logreg(x, y, 1.0, {}, &trace);
  ASSERT_GT(trace.size(), 2u);
  for (std::size_t i = 1; i < trace.size(); ++i) EXPECT_LE(trace[i], trace[i - 1] + 1e-15);
}

TEST(LogReg, MatchesNewtonSolution) {
  std::mt19937_64 rng(2);
  for (double c : {0.01, 1.0, 10.0}) {
    const Eigen::MatrixXd x = testing::random_matrix(3, 120, rng);
    std::vector<int> y(120);
    std::bernoulli_distribution coin(0.2);
    for (int i = 0; i < 120; ++i) {
      y[static_cast<std::size_t>(i)] = (x(0, i) - x(2, i) > 0) != coin(rng);
    }
    const LogRegModel m = fit_logreg(x, y, c, {20000, 1e-10});
    const Eigen::VectorXd theta = newton_logreg(x, y, c);
    EXPECT_TRUE(m.converged);
    EXPECT_LT((m.weights - theta.head(3)).cwiseAbs().maxCoeff(), 1e-6);
    EXPECT_NEAR(m.bias, theta(3), 1e-6);
    EXPECT_NEAR(logreg_objective(m.weights, m.bias, x, y, c),
                logreg_objective(theta.head(3), theta(3), x, y, c), 1e-12);
  }
}

TEST(LogReg, SeparableLargeC) {
  std::mt19937_64 rng(3);
  const Eigen::MatrixXd x = testing::random_matrix(2, 60, rng);
  std::vector<int> y(60);
  for (int i = 0; i < 60; ++i) y[static_cast<std::size_t>(i)] = x(0, i) > 0;
  const LogRegModel m = fit_logreg(x, y, 1e4);
  EXPECT_DOUBLE_EQ(accuracy(m.predict(x), y), 1.0);
}

TEST(LogReg, TinyCPredictsMajority) {
  std::mt19937_64 rng(4);
  const Eigen::MatrixXd x = testing::random_matrix(3, 50, rng);
  std::vector<int> y(50, 1);
  for (int i = 0; i < 15; ++i) y[static_cast<std::size_t>(i)] = 0;
  const LogRegModel m = fit_logreg(x, y, 1e-8);
  EXPECT_LT(m.weights.norm(), 1e-6);
  for (int p : m.predict(x)) EXPECT_EQ(p, 1);
}

TEST(LogReg, Errors) {
  const Eigen::MatrixXd x = Eigen::MatrixXd::Ones(2, 3);
  EXPECT_THROW(fit_logreg(x, std::vector<int>{1, 1, 1}, 1.0), DegenerateFitError);
  EXPECT_THROW(fit_logreg(x, std::vector<int>{1, 0, 1}, 0.0), ConfigError);
  EXPECT_THROW(fit_logreg(x, std::vector<int>{1, 0}, 1.0), ShapeError);
}

TEST(TrainLogReg, PicksBestValidationAccuracy) {
  std::mt19937_64 rng(5);
  const Eigen::MatrixXd x = testing::random_matrix(3, 100, rng);
  const Eigen::MatrixXd v = testing::random_matrix(3, 60, rng);
  std::vector<int> y(100), yv(60);
  for (int i = 0; i < 100; ++i) y[static_cast<std::size_t>(i)] = x(1, i) > 0;
  for (int i = 0; i < 60; ++i) yv[static_cast<std::size_t>(i)] = v(1, i) > 0;
  const auto grid = log_spaced_grid(1e-4, 1e4, 9);
  const LogRegModel best = train_logreg(x, y, v, yv, grid);
  double top = -1.0;
  double top_c = 0.0;
  for (double c : grid) {
    const double acc = accuracy(fit_logreg(x, y, c).predict(v), yv);
    if (acc > top) {
      top = acc;
      top_c = c;
    }
  }
  EXPECT_EQ(best.c, top_c);
  EXPECT_EQ(accuracy(best.predict(v), yv), top);
}

}  // namespace
}  // namespace neucrowd

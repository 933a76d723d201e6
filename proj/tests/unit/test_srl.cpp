#include <cmath>
#include <ostream>
#include <random>
#include <string>

#include <gtest/gtest.h>

#include "neucrowd/errors.hpp"
#include "neucrowd/srl.hpp"
#include "test_util.hpp"

namespace neucrowd {
namespace {

TEST(Similarity, Examples) {
  Eigen::VectorXd u(2), v(2);
  u << 0, 0;
  v << 3, 4;
  EXPECT_DOUBLE_EQ(similarity(u, u, 1.0), 1.0);
  EXPECT_DOUBLE_EQ(similarity(u, v, 0.0), -5.0);
  EXPECT_THROW(similarity(u, Eigen::VectorXd::Zero(3), 0.0), ShapeError);
}

TEST(Posterior, UniformWhenEquidistant) {
  const Eigen::VectorXd anchor = Eigen::VectorXd::Zero(2);
  Eigen::MatrixXd cands(2, 4);
  cands << 1, -1, 0, 0,
           0, 0, 1, -1;
  const std::vector<double> a(4, 0.7);
  EXPECT_NEAR(posterior(anchor, cands, a, {}), 0.25, 1e-12);
  const auto rec = tuplet_loss(anchor, cands, a, {});
  EXPECT_NEAR(rec.loss, std::log(4.0), 1e-12);
}

TEST(Posterior, ThreeCandidateSoftmax) {
  // Logits (1, 0, 0): eta = 1, A = 1, C = 1 with distances 0, 1, 1.
  const Eigen::VectorXd anchor = Eigen::VectorXd::Zero(1);
  Eigen::MatrixXd cands(1, 3);
  cands << 0, 1, -1;
  const std::vector<double> a(3, 1.0);
  const SrlHyper h{1.0, 1.0};
  const Eigen::VectorXd logits = candidate_logits(anchor, cands, a, h);
  // The smoothed distance at zero is 1e-6.
  EXPECT_NEAR(logits(0), 1.0, 2e-6);
  EXPECT_NEAR(logits(1), 0.0, 1e-12);
  const double e = std::exp(1.0);
  EXPECT_NEAR(posterior(anchor, cands, a, h), e / (e + 2.0), 2e-6);
}

TEST(Posterior, ConcentratesWithLargeEta) {
  const Eigen::VectorXd anchor = Eigen::VectorXd::Zero(2);
  Eigen::MatrixXd cands(2, 4);
  cands << 0, 5, -5, 0,
           0, 0, 0, 5;
  const std::vector<double> a(4, 1.0);
  EXPECT_GT(posterior(anchor, cands, a, {1.0, 50.0}), 1.0 - 1e-12);
}

TEST(Posterior, NormalizedAndScaleEquivariant) {
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  for (int trial = 0; trial < 200; ++trial) {
    const Eigen::VectorXd anchor = testing::random_matrix(4, 1, rng, 2.0);
    const Eigen::MatrixXd cands = testing::random_matrix(4, 5, rng, 2.0);
    std::vector<double> a(5);
    for (auto& v : a) v = unit(rng);
    const SrlHyper h{unit(rng) * 4 - 2, 0.1 + unit(rng) * 5};
    const Eigen::VectorXd p = candidate_posteriors(anchor, cands, a, h);
    EXPECT_NEAR(p.sum(), 1.0, 1e-12);
    EXPECT_TRUE((p.array() >= 0).all());
    // Doubling eta is the same as doubling every logit.
    const Eigen::VectorXd logits = candidate_logits(anchor, cands, a, h);
    const Eigen::VectorXd l2 = candidate_logits(anchor, cands, a, {h.offset_c, 2 * h.eta});
    EXPECT_LT((l2 - 2 * logits).cwiseAbs().maxCoeff(), 1e-12);
  }
}

TEST(Posterior, ZeroAssuranceCandidateHasZeroLogit) {
  const Eigen::VectorXd anchor = Eigen::VectorXd::Zero(2);
  const Eigen::MatrixXd cands = Eigen::MatrixXd::Constant(2, 3, 10.0);
  const std::vector<double> a{1.0, 0.0, 0.5};
  EXPECT_EQ(candidate_logits(anchor, cands, a, {})(1), 0.0);
}

TEST(Hyper, Validation) {
  EXPECT_THROW((SrlHyper{1.0, 0.0}.validate()), ConfigError);
  EXPECT_THROW((SrlHyper{INFINITY, 1.0}.validate()), ConfigError);
}

TEST(TupletLoss, GradientsMatchFiniteDifferences) {
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> unit(0.05, 1.0);
  for (int trial = 0; trial < 50; ++trial) {
    Eigen::MatrixXd anchor = testing::random_matrix(3, 1, rng);
    Eigen::MatrixXd cands = testing::random_matrix(3, 4, rng);
    std::vector<double> a(4);
    for (auto& v : a) v = unit(rng);
    const SrlHyper h{1.5, 2.0};
    const auto rec = tuplet_loss(anchor.col(0), cands, a, h);
    const auto f = [&] { return tuplet_loss(anchor.col(0), cands, a, h).loss; };
    EXPECT_LT(testing::max_rel_error(rec.anchor_grad, testing::numeric_gradient(anchor, f)), 1e-5);
    EXPECT_LT(testing::max_rel_error(rec.candidate_grads, testing::numeric_gradient(cands, f)),
              1e-5);
  }
}

TEST(TupletLoss, StableForLargeLogits) {
  const Eigen::VectorXd anchor = Eigen::VectorXd::Zero(1);
  Eigen::MatrixXd cands(1, 3);
  cands << 100, 0, 0;
  const std::vector<double> a(3, 1.0);
  const auto rec = tuplet_loss(anchor, cands, a, {0.0, 100.0});
  EXPECT_TRUE(std::isfinite(rec.loss));
  // Negatives sit at the smoothed distance 1e-6, logit -1e-4 each.
  EXPECT_NEAR(rec.loss, 10000.0 - 1e-4 + std::log(2.0), 1e-6);
}

struct BatchCase {
  AnchorMode mode;
  bool in_denominator;
  bool grouped;
};

std::string case_name(const BatchCase& c) {
  const char* modes[] = {"Original", "Robust", "RobustUnnormalized"};
  std::string name = modes[static_cast<int>(c.mode)];
  if (c.in_denominator) name += "AnchorInDenominator";
  if (c.grouped) name += "Grouped";
  return name;
}

void PrintTo(const BatchCase& c, std::ostream* os) { *os << case_name(c); }

class BatchGradient : public ::testing::TestWithParam<BatchCase> {};

TEST_P(BatchGradient, MatchesFiniteDifferences) {
  const BatchCase c = GetParam();
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> unit(0.1, 1.0);
  const int n = 4;
  const int tuplets = 5;
  const std::vector<int> groups{0, 1, 0, 1, 1};
  for (int trial = 0; trial < 10; ++trial) {
    Eigen::MatrixXd members = testing::random_matrix(3, n * tuplets, rng);
    std::vector<double> a(static_cast<std::size_t>(n * tuplets));
    for (auto& v : a) v = unit(rng);
    BatchLossOptions opts;
    opts.anchor_mode = c.mode;
    opts.anchor_in_denominator = c.in_denominator;
    if (c.grouped) opts.anchor_groups = groups;
    const SrlHyper h{1.0, 1.5};
    const auto res = batch_loss(members, n, a, h, opts);
    const auto f = [&] { return batch_loss(members, n, a, h, opts).mean_loss; };
    EXPECT_LT(testing::max_rel_error(res.member_grads, testing::numeric_gradient(members, f)),
              1e-4);
  }
}

INSTANTIATE_TEST_SUITE_P(
    Modes, BatchGradient,
    ::testing::Values(BatchCase{AnchorMode::kOriginal, false, false},
                      BatchCase{AnchorMode::kOriginal, true, false},
                      BatchCase{AnchorMode::kRobust, false, false},
                      BatchCase{AnchorMode::kRobust, false, true},
                      BatchCase{AnchorMode::kRobust, true, true},
                      BatchCase{AnchorMode::kRobustUnnormalized, false, true}),
    [](const auto& info) { return case_name(info.param); });

TEST(BatchLoss, MeanOfTupletLosses) {
  std::mt19937_64 rng(4);
  const Eigen::MatrixXd one = testing::random_matrix(2, 3, rng);
  Eigen::MatrixXd twice(2, 6);
  twice << one, one;
  const std::vector<double> a(6, 1.0);
  BatchLossOptions opts;
  opts.anchor_mode = AnchorMode::kOriginal;
  const double single = batch_loss(one, 3, std::span(a).first(3), {}, opts).mean_loss;
  EXPECT_NEAR(batch_loss(twice, 3, a, {}, opts).mean_loss, single, 1e-14);

  const Eigen::MatrixXd other = testing::random_matrix(2, 3, rng);
  Eigen::MatrixXd mixed(2, 6);
  mixed << one, other;
  const auto res = batch_loss(mixed, 3, a, {}, opts);
  EXPECT_NEAR(res.mean_loss, 0.5 * (res.records[0].loss + res.records[1].loss), 1e-14);
}

TEST(BatchLoss, GroupsShareRobustAnchor) {
  // Two groups far apart: each group's anchor is its own mean.
  Eigen::MatrixXd members(1, 6);
  members << 0, 0.1, 5, 100, 100.1, 95;
  const std::vector<double> a(6, 1.0);
  const std::vector<int> groups{7, 3};
  BatchLossOptions opts;
  opts.anchor_groups = groups;
  const auto grouped = batch_loss(members, 3, a, {}, opts);
  BatchLossOptions orig;
  orig.anchor_mode = AnchorMode::kOriginal;
  const auto own = batch_loss(members, 3, a, {}, orig);
  EXPECT_NEAR(grouped.mean_loss, own.mean_loss, 1e-12);
}

TEST(BatchLoss, Errors) {
  const Eigen::MatrixXd m = Eigen::MatrixXd::Ones(2, 6);
  const std::vector<double> a(6, 1.0);
  EXPECT_THROW(batch_loss(Eigen::MatrixXd(2, 0), 3, std::span<const double>{}, {}), UsageError);
  EXPECT_THROW(batch_loss(m, 4, a, {}), ShapeError);
  EXPECT_THROW(batch_loss(m, 3, std::span(a).first(5), {}), ShapeError);
  const std::vector<int> groups{0};
  BatchLossOptions opts;
  opts.anchor_groups = groups;
  EXPECT_THROW(batch_loss(m, 3, a, {}, opts), ShapeError);
  const std::vector<double> zero(6, 0.0);
  EXPECT_THROW(batch_loss(m, 3, zero, {}), AnchorDegeneracyError);
}

}  // namespace
}  // namespace neucrowd

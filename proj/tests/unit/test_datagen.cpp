#include <cmath>
#include <numeric>

#include <gtest/gtest.h>

#include "neucrowd/crowd_labels.hpp"
#include "neucrowd/datagen.hpp"
#include "neucrowd/dataset_io.hpp"
#include "neucrowd/errors.hpp"
#include "neucrowd/io_util.hpp"
#include "test_util.hpp"

namespace neucrowd {
namespace {

SynthConfig small_config(std::uint64_t seed) {
  SynthConfig c;
  c.n_features = 20;
  c.train_size = 200;
  c.validation_size = 50;
  c.test_size = 100;
  c.seed = seed;
  return c;
}

double phi(double x) { return std::exp(-0.5 * x * x) / std::sqrt(2.0 * M_PI); }
double cdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

TEST(Hypercube, DeterministicPerSeed) {
  const auto a = generate_synthetic(small_config(3));
  const auto b = generate_synthetic(small_config(3));
  EXPECT_EQ(dataset_to_csv(a.splits.train), dataset_to_csv(b.splits.train));
  EXPECT_EQ(dataset_to_csv(a.splits.test), dataset_to_csv(b.splits.test));
  EXPECT_EQ(a.workers.flip_probs, b.workers.flip_probs);
  const auto c = generate_synthetic(small_config(4));
  EXPECT_NE(dataset_to_csv(a.splits.train), dataset_to_csv(c.splits.train));
}

TEST(Hypercube, SizesShapesAndBalance) {
  const auto data = generate_hypercube_data(small_config(1));
  EXPECT_EQ(data.train.size(), 200u);
  EXPECT_EQ(data.validation.size(), 50u);
  EXPECT_EQ(data.test.size(), 100u);
  EXPECT_EQ(data.train.examples[0].features.size(), 20);
  for (const Dataset* ds : {&data.train, &data.validation, &data.test}) {
    const auto truth = truth_labels(*ds);
    const double ratio =
        std::accumulate(truth.begin(), truth.end(), 0.0) / static_cast<double>(truth.size());
    EXPECT_NEAR(ratio, 0.5, 0.02);
  }
}

// With zero cluster noise every informative coordinate sits on a vertex of
// the first four lexicographic corners; class is the lowest vertex bit.
TEST(Hypercube, ZeroNoisePointsSitOnVertices) {
  SynthConfig c = small_config(2);
  c.cluster_std = 0.0;
  const auto data = generate_hypercube_data(c);
  for (const auto& ex : data.train.examples) {
    for (int f = 0; f < 8; ++f) EXPECT_EQ(ex.features[f], -1.0);
    EXPECT_EQ(ex.features[9], *ex.truth == 1 ? 1.0 : -1.0);
    EXPECT_EQ(std::abs(ex.features[8]), 1.0);
  }
}

TEST(Hypercube, OneInformativeDimension) {
  SynthConfig c = small_config(2);
  c.cluster_std = 0.0;
  c.n_informative = 1;
  c.n_clusters = 2;
  c.clusters_per_class = 1;
  const auto data = generate_hypercube_data(c);
  for (const auto& ex : data.train.examples) {
    EXPECT_EQ(ex.features[0], *ex.truth == 1 ? 1.0 : -1.0);
  }
}

TEST(Hypercube, NoiseFeaturesAreStandardNormal) {
  SynthConfig c = small_config(5);
  c.train_size = 2000;
  const auto data = generate_hypercube_data(c);
  const Eigen::MatrixXd x = feature_matrix(data.train);
  const Eigen::MatrixXd noise = x.bottomRows(10);
  const double mean = noise.mean();
  const double var = (noise.array() - mean).square().mean();
  EXPECT_NEAR(mean, 0.0, 0.02);
  EXPECT_NEAR(var, 1.0, 0.03);
}

TEST(Hypercube, TooFewVerticesIsConfigError) {
  SynthConfig c = small_config(1);
  c.n_informative = 1;
  EXPECT_THROW(generate_hypercube_data(c), ConfigError);
  c = small_config(1);
  c.n_informative = 30;
  EXPECT_THROW(generate_hypercube_data(c), ConfigError);
  c = small_config(1);
  c.train_size = 0;
  EXPECT_THROW(generate_hypercube_data(c), ConfigError);
}

TEST(Workers, WithinBounds) {
  const WorkerDistribution dist;
  for (double p : sample_worker_flip_probs(1000, dist, 7)) {
    EXPECT_GE(p, 0.01);
    EXPECT_LE(p, 0.5);
  }
}

TEST(Workers, MeanMatchesTruncatedNormalClosedForm) {
  const WorkerDistribution dist;
  const auto draws = sample_worker_flip_probs(100000, dist, 11);
  const double alpha = (dist.lower - dist.mean) / dist.stddev;
  const double beta = (dist.upper - dist.mean) / dist.stddev;
  const double z = cdf(beta) - cdf(alpha);
  const double mean = dist.mean + dist.stddev * (phi(alpha) - phi(beta)) / z;
  const double var = dist.stddev * dist.stddev *
                     (1 + (alpha * phi(alpha) - beta * phi(beta)) / z -
                      std::pow((phi(alpha) - phi(beta)) / z, 2));
  const double empirical =
      std::accumulate(draws.begin(), draws.end(), 0.0) / static_cast<double>(draws.size());
  EXPECT_NEAR(empirical, mean, 4.0 * std::sqrt(var / draws.size()));
}

TEST(Workers, DefaultCountIsSeven) { EXPECT_EQ(SynthConfig{}.num_workers, 7); }

TEST(Annotate, ZeroFlipReproducesTruth) {
  const std::vector<int> truth{0, 1, 1, 0, 1};
  const auto labels = annotate(truth, WorkerModel{{0.0, 0.0, 0.0}}, 3);
  for (std::size_t i = 0; i < truth.size(); ++i) {
    for (auto y : labels[i]) EXPECT_EQ(y, truth[i]);
  }
}

TEST(Annotate, FlipFrequencyConvergesToProbability) {
  const std::vector<double> probs{0.05, 0.2, 0.45};
  std::vector<int> truth(10000);
  for (std::size_t i = 0; i < truth.size(); ++i) truth[i] = static_cast<int>(i % 2);
  const auto labels = annotate(truth, WorkerModel{probs}, 9);
  for (std::size_t j = 0; j < probs.size(); ++j) {
    int flips = 0;
    for (std::size_t i = 0; i < truth.size(); ++i) flips += labels[i][j] != truth[i];
    const double rate = flips / static_cast<double>(truth.size());
    const double se = std::sqrt(probs[j] * (1 - probs[j]) / truth.size());
    EXPECT_NEAR(rate, probs[j], 0.01);
    EXPECT_NEAR(rate, probs[j], 3 * se);
  }
}

TEST(Synthetic, KappaNearTableValueAcrossSeeds) {
  double total = 0.0;
  const int seeds = 10;
  for (int s = 1; s <= seeds; ++s) {
    SynthConfig c = small_config(static_cast<std::uint64_t>(s));
    c.train_size = 800;
    total += fleiss_kappa(generate_synthetic(c).splits.train).value;
  }
  EXPECT_NEAR(total / seeds, 0.52, 0.10);
}

TEST(Synthetic, WritesManifestAndSplits) {
  testing::TempDir dir("gen");
  const SynthConfig c = small_config(6);
  const auto data = generate_synthetic(c);
  write_synthetic(data, c, dir.path());
  const DatasetBundle bundle = load_dataset_dir(dir.path());
  EXPECT_EQ(bundle.manifest.seed, 6u);
  EXPECT_EQ(bundle.manifest.num_workers, 7);
  EXPECT_EQ(bundle.manifest.generator["flip_probs"].size(), 7u);
  EXPECT_EQ(dataset_to_csv(bundle.train), dataset_to_csv(data.splits.train));
  ASSERT_TRUE(bundle.test.has_value());
  EXPECT_EQ(truth_labels(*bundle.test), truth_labels(data.splits.test));
}

}  // namespace
}  // namespace neucrowd

#include "neucrowd/datagen.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <string>

#include "neucrowd/errors.hpp"
#include "neucrowd/io_util.hpp"

namespace neucrowd {

namespace {

enum SeedStream : std::uint64_t {
  kTrainStream = 1,
  kValidationStream = 2,
  kTestStream = 3,
  kWorkerStream = 10,
  kAnnotateTrain = 11,
  kAnnotateValidation = 12,
  kAnnotateTest = 13,
};

Dataset sample_split(const SynthConfig& config, Split split, int size, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> standard(0.0, 1.0);
  const double half_side = config.cube_side / 2.0;

  // Balanced classes; within a class, members cycle through its clusters.
  std::vector<int> cluster_of(static_cast<std::size_t>(size));
  const int positives = size / 2;
  const int negatives = size - positives;
  std::size_t slot = 0;
  for (int cls = 0; cls < 2; ++cls) {
    const int count = cls == 0 ? negatives : positives;
    for (int j = 0; j < count; ++j) {
      cluster_of[slot++] = cls + 2 * (j % config.clusters_per_class);
    }
  }
  std::shuffle(cluster_of.begin(), cluster_of.end(), rng);

  Dataset ds;
  ds.split = split;
  ds.num_features = config.n_features;
  ds.num_workers = config.num_workers;
  ds.examples.reserve(static_cast<std::size_t>(size));
  for (int i = 0; i < size; ++i) {
    const int cluster = cluster_of[static_cast<std::size_t>(i)];
    CrowdExample ex;
    ex.features.resize(config.n_features);
    for (int f = 0; f < config.n_informative; ++f) {
      // Bit f (most significant first) of the cluster index picks the side.
      const int bit = (cluster >> (config.n_informative - 1 - f)) & 1;
      const double vertex = bit ? half_side : -half_side;
      ex.features[f] = vertex + config.cluster_std * standard(rng);
    }
    for (int f = config.n_informative; f < config.n_features; ++f) {
      ex.features[f] = standard(rng);
    }
    ex.truth = cluster % 2;
    ds.examples.push_back(std::move(ex));
  }
  return ds;
}

void attach_labels(Dataset& ds, const WorkerModel& workers, std::uint64_t seed) {
  std::vector<int> truth;
  truth.reserve(ds.size());
  for (const auto& ex : ds.examples) truth.push_back(*ex.truth);
  auto labels = annotate(truth, workers, seed);
  for (std::size_t i = 0; i < ds.size(); ++i) ds.examples[i].crowd_labels = std::move(labels[i]);
}

}  // namespace

void SynthConfig::validate() const {
  if (n_features < 1) throw ConfigError("n_features must be positive");
  if (n_informative < 1 || n_informative > n_features) {
    throw ConfigError("n_informative must lie in [1, n_features]");
  }
  if (clusters_per_class < 1 || n_clusters != 2 * clusters_per_class) {
    throw ConfigError("n_clusters must equal 2 * clusters_per_class");
  }
  if (n_informative < 63 && n_clusters > (std::int64_t{1} << n_informative)) {
    throw ConfigError("n_clusters " + std::to_string(n_clusters) + " exceeds the " +
                      std::to_string(std::int64_t{1} << n_informative) +
                      " vertices of a " + std::to_string(n_informative) + "-cube");
  }
  if (!(cube_side > 0.0)) throw ConfigError("cube_side must be positive");
  if (!(cluster_std >= 0.0)) throw ConfigError("cluster_std must be nonnegative");
  if (train_size < 1 || validation_size < 1 || test_size < 1) {
    throw ConfigError("split sizes must be positive");
  }
  if (num_workers < 1) throw ConfigError("num_workers must be positive");
  if (!(workers.lower >= 0.0 && workers.lower <= workers.upper && workers.upper <= 1.0)) {
    throw ConfigError("worker flip bounds must satisfy 0 <= lower <= upper <= 1");
  }
  if (!(workers.stddev >= 0.0)) throw ConfigError("worker stddev must be nonnegative");
}

HypercubeData generate_hypercube_data(const SynthConfig& config) {
  config.validate();
  HypercubeData out;
  out.train = sample_split(config, Split::kTrain, config.train_size,
                           derive_seed(config.seed, kTrainStream));
  out.validation = sample_split(config, Split::kValidation, config.validation_size,
                                derive_seed(config.seed, kValidationStream));
  out.test = sample_split(config, Split::kTest, config.test_size,
                          derive_seed(config.seed, kTestStream));
  return out;
}

std::vector<double> sample_worker_flip_probs(int num_workers, const WorkerDistribution& dist,
                                             std::uint64_t seed) {
  if (num_workers < 1) throw ConfigError("num_workers must be positive");
  if (!(dist.lower <= dist.upper)) throw ConfigError("truncation bounds are inverted");
  std::vector<double> probs;
  probs.reserve(static_cast<std::size_t>(num_workers));
  if (dist.stddev == 0.0) {
    if (dist.mean < dist.lower || dist.mean > dist.upper) {
      throw ConfigError("degenerate worker distribution lies outside its bounds");
    }
    probs.assign(static_cast<std::size_t>(num_workers), dist.mean);
    return probs;
  }
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(dist.mean, dist.stddev);
  constexpr int kMaxTries = 1'000'000;
  for (int j = 0; j < num_workers; ++j) {
    int tries = 0;
    double p = normal(rng);
    while (p < dist.lower || p > dist.upper) {
      if (++tries > kMaxTries) throw ConfigError("truncated normal rejection sampling stalled");
      p = normal(rng);
    }
    probs.push_back(p);
  }
  return probs;
}

std::vector<std::vector<std::uint8_t>> annotate(std::span<const int> truth,
                                                const WorkerModel& workers,
                                                std::uint64_t seed) {
  if (workers.flip_probs.empty()) throw ConfigError("worker model has no workers");
  for (double p : workers.flip_probs) {
    if (!(p >= 0.0 && p <= 1.0)) throw ConfigError("flip probabilities must lie in [0, 1]");
  }
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::vector<std::vector<std::uint8_t>> labels(truth.size());
  for (std::size_t i = 0; i < truth.size(); ++i) {
    if (truth[i] != 0 && truth[i] != 1) throw DataError("truth labels must be 0 or 1");
    auto& row = labels[i];
    row.reserve(workers.flip_probs.size());
    for (double p : workers.flip_probs) {
      const bool flip = unit(rng) < p;
      row.push_back(static_cast<std::uint8_t>(truth[i] ^ static_cast<int>(flip)));
    }
  }
  return labels;
}

SynthDataset generate_synthetic(const SynthConfig& config) {
  SynthDataset out;
  out.splits = generate_hypercube_data(config);
  out.workers.flip_probs = sample_worker_flip_probs(
      config.num_workers, config.workers, derive_seed(config.seed, kWorkerStream));
  attach_labels(out.splits.train, out.workers, derive_seed(config.seed, kAnnotateTrain));
  attach_labels(out.splits.validation, out.workers,
                derive_seed(config.seed, kAnnotateValidation));
  attach_labels(out.splits.test, out.workers, derive_seed(config.seed, kAnnotateTest));
  return out;
}

nlohmann::json synth_config_to_json(const SynthConfig& config) {
  nlohmann::json doc;
  doc["n_features"] = config.n_features;
  doc["n_informative"] = config.n_informative;
  doc["n_clusters"] = config.n_clusters;
  doc["clusters_per_class"] = config.clusters_per_class;
  doc["cube_side"] = config.cube_side;
  doc["cluster_std"] = config.cluster_std;
  doc["sizes"] = {config.train_size, config.validation_size, config.test_size};
  doc["num_workers"] = config.num_workers;
  doc["worker_flip"] = {{"mean", config.workers.mean},
                        {"stddev", config.workers.stddev},
                        {"lower", config.workers.lower},
                        {"upper", config.workers.upper}};
  return doc;
}

void write_synthetic(const SynthDataset& data, const SynthConfig& config,
                     const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  write_dataset_csv(data.splits.train, dir / "train.csv");
  write_dataset_csv(data.splits.validation, dir / "validation.csv");
  write_dataset_csv(data.splits.test, dir / "test.csv");

  DatasetManifest manifest;
  manifest.num_features = config.n_features;
  manifest.num_workers = config.num_workers;
  manifest.split_files = {{"train", "train.csv"},
                          {"validation", "validation.csv"},
                          {"test", "test.csv"}};
  manifest.seed = config.seed;
  // Every split carries crowd labels; downstream test metrics use truth.
  manifest.evaluation_labels = "truth";
  manifest.generator = synth_config_to_json(config);
  manifest.generator["flip_probs"] = data.workers.flip_probs;
  write_manifest(manifest, dir);
}

}  // namespace neucrowd

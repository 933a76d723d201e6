#ifndef NEUCROWD_DATAGEN_HPP_
#define NEUCROWD_DATAGEN_HPP_

#include <cstdint>
#include <span>
#include <vector>

#include <nlohmann/json.hpp>

#include "neucrowd/crowd_labels.hpp"
#include "neucrowd/dataset_io.hpp"

namespace neucrowd {

// Truncated normal used to draw each worker's mislabeling probability.
struct WorkerDistribution {
  double mean = 0.1;
  double stddev = 0.1;
  double lower = 0.01;
  double upper = 0.5;
};

struct SynthConfig {
  int n_features = 1200;
  int n_informative = 10;
  int n_clusters = 4;
  int clusters_per_class = 2;
  double cube_side = 2.0;
  double cluster_std = 1.0;
  int train_size = 800;
  int validation_size = 200;
  int test_size = 500;
  int num_workers = 7;
  WorkerDistribution workers;
  std::uint64_t seed = 0;

  void validate() const;
};

struct WorkerModel {
  std::vector<double> flip_probs;
};

// Truth-labelled splits before annotation (crowd_labels left empty).
struct HypercubeData {
  Dataset train;
  Dataset validation;
  Dataset test;
};

// Gaussian clusters about the lexicographically first n_clusters vertices of
// a hypercube centered at the origin; cluster c belongs to class c % 2. The
// first n_informative features carry the cluster signal, the rest are N(0,1).
HypercubeData generate_hypercube_data(const SynthConfig& config);

// Rejection-sampled truncated normal draws.
std::vector<double> sample_worker_flip_probs(int num_workers,
                                             const WorkerDistribution& dist,
                                             std::uint64_t seed);

// Row i holds every worker's vote for item i: truth XOR Bernoulli(flip_j).
std::vector<std::vector<std::uint8_t>> annotate(std::span<const int> truth,
                                                const WorkerModel& workers,
                                                std::uint64_t seed);

struct SynthDataset {
  HypercubeData splits;  // crowd labels filled in
  WorkerModel workers;
};

// Full synthetic protocol: data, worker draws, and annotation of every split,
// all derived from config.seed.
SynthDataset generate_synthetic(const SynthConfig& config);

// Writes train/validation/test CSVs plus manifest.json into `dir`.
void write_synthetic(const SynthDataset& data, const SynthConfig& config,
                     const std::filesystem::path& dir);

nlohmann::json synth_config_to_json(const SynthConfig& config);

}  // namespace neucrowd

#endif  // NEUCROWD_DATAGEN_HPP_

#ifndef NEUCROWD_SAMPLER_HPP_
#define NEUCROWD_SAMPLER_HPP_

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "neucrowd/nn.hpp"
#include "neucrowd/tuplet.hpp"

namespace neucrowd {

// Tuplet hardness regressor: one weight-shared trunk embeds each of the n raw
// member vectors, and a head maps their concatenation to a scalar score.
struct SamplerNet {
  DenseNet trunk;
  DenseNet head;
  int tuplet_size = 0;
};

// Trunk dims [input_dim, trunk_dims...]; head dims [n * trunk_dims.back(), 1].
SamplerNet init_sampler(int input_dim, std::span<const int> trunk_dims, int tuplet_size,
                        double dropout_rate, std::uint64_t seed, const InitOptions& init = {});

struct HardnessRecord {
  int tuplet_id = 0;
  NTuplet tuplet;
  double score = 0.0;
  std::optional<double> observed_loss;
};

// Eval-mode hardness scores. `features` is p x N over the pool the tuplet
// indices refer to.
std::vector<double> score_tuplets(const SamplerNet& sampler, std::span<const NTuplet> tuplets,
                                  const Eigen::MatrixXd& features);

// Positions in `records` of the top ceil(fraction * count) scores, highest
// first, ties to the lower tuplet id.
std::vector<std::size_t> select_hard(std::span<const HardnessRecord> records, double fraction);

struct SamplerLoss {
  double mse = 0.0;
  Eigen::VectorXd predictions;
  NetGradients trunk_grads;
  NetGradients head_grads;
};

// Mean squared error of the sampler's predictions against `targets`, with
// exact gradients for both sub-networks.
SamplerLoss sampler_loss(const SamplerNet& sampler, std::span<const NTuplet> tuplets,
                         std::span<const double> targets, const Eigen::MatrixXd& features,
                         bool train_mode, std::uint64_t dropout_seed);

struct SamplerOptimizer {
  AdadeltaState trunk;
  AdadeltaState head;
};

SamplerOptimizer make_sampler_optimizer(const SamplerNet& sampler, double rho = 0.95,
                                        double epsilon = 1e-6);

struct SamplerUpdateResult {
  bool applied = false;  // false when no record carried an observed loss
  int count = 0;
  double mse = 0.0;      // before the step
};

// One Adadelta step on the square loss between scores and observed SRL
// losses, over the records that have one. With `rank_targets` the losses are
// replaced by their normalized ranks in [0, 1].
SamplerUpdateResult sampler_update(SamplerNet& sampler, std::span<const HardnessRecord> records,
                                   const Eigen::MatrixXd& features, SamplerOptimizer& optimizer,
                                   double learning_rate, std::uint64_t dropout_seed,
                                   bool rank_targets = false);

// Checkpoint format "neucrowd.sampler" version 1: the trunk and head in the
// network checkpoint layout plus the tuplet size.
nlohmann::json sampler_to_json(const SamplerNet& sampler);
SamplerNet sampler_from_json(const nlohmann::json& doc);
void save_sampler(const SamplerNet& sampler, const std::filesystem::path& path);
SamplerNet load_sampler(const std::filesystem::path& path);

}  // namespace neucrowd

#endif  // NEUCROWD_SAMPLER_HPP_

#ifndef NEUCROWD_TRAINER_HPP_
#define NEUCROWD_TRAINER_HPP_

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

#include "neucrowd/crowd_labels.hpp"
#include "neucrowd/nn.hpp"
#include "neucrowd/sampler.hpp"
#include "neucrowd/tuplet.hpp"

namespace neucrowd {

// Every knob of a training run.
struct RunConfig {
  int n = 5;
  int batch_size = 64;
  int pool_size = 0;  // tuplets drawn per step; 0 = ceil(batch_size / hard_fraction)
  int epochs = 300;
  int steps_per_epoch = 100;  // SRL updates between safety and validation passes
  double learning_rate = 1e-3;
  double dropout = 0.2;
  double delta = 0.0;
  double beta = 2.0;
  double hard_fraction = 1.0 / 3.0;
  double offset_c = 1.0;
  double eta = 1.0;
  int embedding_dim = 64;
  std::vector<int> hidden_dims{128};
  double init_stddev = 0.05;
  double adadelta_rho = 0.95;
  double adadelta_epsilon = 1e-6;
  std::uint64_t seed = 0;

  bool use_sa = true;  // safety-aware sampling
  bool use_ra = true;  // robust anchor
  bool use_sn = true;  // hardness sampling network

  bool normalize_anchor = true;
  // One robust anchor per anchor class in each batch instead of one overall.
  bool anchor_per_class = true;
  bool anchor_in_denominator = false;
  bool sampler_rank_targets = false;
  int safety_every = 1;  // epochs between safety recomputation

  // Off by default: validation AUC of the untrained network can exceed the
  // trained one's for the first hundred or so epochs.
  bool early_stopping = false;
  int patience = 20;
  double validation_c = 1.0;
  int validation_max_iter = 500;

  int threads = 1;  // not part of the reproducibility contract

  int resolved_pool_size() const;
  int selected_per_step() const;
  std::vector<int> srl_dims(int input_dim) const;
  void validate() const;
};

struct EpochRecord {
  int epoch = 0;
  double srl_loss = 0.0;
  std::optional<double> sampler_mse;
  int safe_count = 0;
  int selected_count = 0;
  std::optional<double> val_auc;
  double param_change = 0.0;  // l2 norm of the SRL parameter delta
  double wall_seconds = 0.0;

  // Wall time is left out unless requested so histories compare bytewise.
  nlohmann::json to_json(bool include_wall_time = false) const;
};

struct TrainHistory {
  std::vector<EpochRecord> epochs;
  int best_epoch = -1;  // epoch whose parameters were kept

  std::string to_jsonl() const;
};

struct TrainResult {
  DenseNet srl;
  SamplerNet sampler;
  TrainHistory history;
};

// Called after each epoch; `safety` is null when no report was computed.
using EpochCallback = std::function<void(const EpochRecord&, const SafetyReport* safety)>;

// Joint training of the embedding network and the hardness sampler. With a
// validation set and early_stopping, the parameters with the best validation
// AUC are returned.
TrainResult train(const Dataset& train_set, const Dataset* validation, const RunConfig& config,
                  const EpochCallback& on_epoch = {});

// Eval-mode embeddings, one column per example.
Eigen::MatrixXd embed(const Dataset& dataset, const DenseNet& srl);

}  // namespace neucrowd

#endif  // NEUCROWD_TRAINER_HPP_

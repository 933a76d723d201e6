#include "neucrowd/trainer.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>
#include <random>
#include <sstream>

#include "neucrowd/errors.hpp"
#include "neucrowd/io_util.hpp"
#include "neucrowd/metrics.hpp"
#include "neucrowd/srl.hpp"

namespace neucrowd {

namespace {

enum SeedStream : std::uint64_t {
  kSrlInit = 100,
  kSamplerInit = 101,
  kConstruct = 200,
  kRandomSelect = 201,
  kSrlDropout = 202,
  kSamplerDropout = 203,
};

constexpr int kAnchorRetries = 10;

std::uint64_t step_seed(std::uint64_t seed, SeedStream stream, std::int64_t step) {
  return derive_seed(derive_seed(seed, stream), static_cast<std::uint64_t>(step));
}

double parameter_distance(const DenseNet& a, const DenseNet& b) {
  double sq = 0.0;
  for (std::size_t l = 0; l < a.weights.size(); ++l) {
    sq += (a.weights[l] - b.weights[l]).squaredNorm() + (a.biases[l] - b.biases[l]).squaredNorm();
  }
  return std::sqrt(sq);
}

std::vector<std::size_t> random_selection(std::size_t count, std::size_t keep,
                                          std::uint64_t seed) {
  std::vector<std::size_t> order(count);
  std::iota(order.begin(), order.end(), 0);
  std::mt19937_64 rng(seed);
  std::shuffle(order.begin(), order.end(), rng);
  order.resize(keep);
  std::sort(order.begin(), order.end());
  return order;
}

std::optional<double> validation_auc(const DenseNet& srl, const Eigen::MatrixXd& train_x,
                                     std::span<const int> train_labels,
                                     const Eigen::MatrixXd& val_x, std::span<const int> val_labels,
                                     const RunConfig& config) {
  LogRegOptions opts;
  opts.max_iter = config.validation_max_iter;
  try {
    const LogRegModel model =
        fit_logreg(predict(srl, train_x), train_labels, config.validation_c, opts);
    const Eigen::VectorXd scores = model.decision(predict(srl, val_x));
    return auc(std::vector<double>(scores.data(), scores.data() + scores.size()), val_labels);
  } catch (const DegenerateFitError&) {
    return std::nullopt;
  } catch (const UndefinedMetricError&) {
    return std::nullopt;
  }
}

}  // namespace

int RunConfig::resolved_pool_size() const {
  if (pool_size > 0) return pool_size;
  return static_cast<int>(std::ceil(batch_size / hard_fraction - 1e-9));
}

int RunConfig::selected_per_step() const {
  const int m = resolved_pool_size();
  return std::clamp(static_cast<int>(std::ceil(hard_fraction * m - 1e-9)), 1, m);
}

std::vector<int> RunConfig::srl_dims(int input_dim) const {
  std::vector<int> dims{input_dim};
  dims.insert(dims.end(), hidden_dims.begin(), hidden_dims.end());
  dims.push_back(embedding_dim);
  return dims;
}

void RunConfig::validate() const {
  if (n < 3) throw UsageError("n", "must be at least 3");
  if (batch_size < 1) throw UsageError("batch_size", "must be positive");
  if (pool_size < 0) throw UsageError("pool_size", "must be nonnegative (0 = automatic)");
  if (epochs < 1) throw UsageError("epochs", "must be positive");
  if (steps_per_epoch < 1) throw UsageError("steps_per_epoch", "must be positive");
  if (!(learning_rate > 0.0)) throw UsageError("learning_rate", "must be positive");
  if (!(dropout >= 0.0 && dropout < 1.0)) throw UsageError("dropout", "must lie in [0, 1)");
  if (!std::isfinite(delta)) throw UsageError("delta", "must be finite");
  if (!(beta >= 0.0)) throw UsageError("beta", "must be nonnegative");
  if (!(hard_fraction > 0.0 && hard_fraction <= 1.0)) {
    throw UsageError("hard_fraction", "must lie in (0, 1]");
  }
  if (!std::isfinite(offset_c)) throw UsageError("offset_c", "must be finite");
  if (!(eta > 0.0)) throw UsageError("eta", "must be positive");
  if (embedding_dim < 1) throw UsageError("embedding_dim", "must be positive");
  for (int h : hidden_dims) {
    if (h < 1) throw UsageError("hidden_dims", "entries must be positive");
  }
  if (!(init_stddev >= 0.0)) throw UsageError("init_stddev", "must be nonnegative");
  if (!(adadelta_rho > 0.0 && adadelta_rho < 1.0)) {
    throw UsageError("adadelta_rho", "must lie in (0, 1)");
  }
  if (!(adadelta_epsilon > 0.0)) throw UsageError("adadelta_epsilon", "must be positive");
  if (safety_every < 1) throw UsageError("safety_every", "must be positive");
  if (patience < 1) throw UsageError("patience", "must be positive");
  if (!(validation_c > 0.0)) throw UsageError("validation_c", "must be positive");
  if (validation_max_iter < 1) throw UsageError("validation_max_iter", "must be positive");
  if (resolved_pool_size() < 1) throw UsageError("pool_size", "resolves to an empty pool");
}

nlohmann::json EpochRecord::to_json(bool include_wall_time) const {
  nlohmann::json doc;
  doc["epoch"] = epoch;
  doc["srl_loss"] = srl_loss;
  doc["sampler_mse"] = sampler_mse ? nlohmann::json(*sampler_mse) : nlohmann::json(nullptr);
  doc["safe_count"] = safe_count;
  doc["selected_count"] = selected_count;
  doc["val_auc"] = val_auc ? nlohmann::json(*val_auc) : nlohmann::json(nullptr);
  doc["param_change"] = param_change;
  if (include_wall_time) doc["wall_seconds"] = wall_seconds;
  return doc;
}

std::string TrainHistory::to_jsonl() const {
  std::string out;
  for (const auto& e : epochs) out += e.to_json().dump() + "\n";
  return out;
}

Eigen::MatrixXd embed(const Dataset& dataset, const DenseNet& srl) {
  if (dataset.num_features != srl.input_dim()) {
    throw ShapeError("embed: dataset has " + std::to_string(dataset.num_features) +
                     " features, network expects " + std::to_string(srl.input_dim()));
  }
  return predict(srl, feature_matrix(dataset));
}

TrainResult train(const Dataset& train_set, const Dataset* validation, const RunConfig& config,
                  const EpochCallback& on_epoch) {
  config.validate();
  train_set.validate();
  const Eigen::MatrixXd features = feature_matrix(train_set);
  const std::vector<double> assurance = assurances(train_set);
  const std::vector<int> labels = mle_labels(train_set);
  const int n = config.n;
  const int pool = config.resolved_pool_size();

  // Fails fast on infeasible class sizes.
  std::vector<double> weights(train_set.size(), 1.0);
  construct_tuplets(labels, weights, n, 0, config.seed);

  InitOptions init;
  init.stddev = config.init_stddev;
  TrainResult result;
  result.srl = init_network(config.srl_dims(train_set.num_features), config.dropout,
                            derive_seed(config.seed, kSrlInit), init);
  std::vector<int> trunk_dims(config.hidden_dims);
  trunk_dims.push_back(config.embedding_dim);
  result.sampler = init_sampler(train_set.num_features, trunk_dims, n, config.dropout,
                                derive_seed(config.seed, kSamplerInit), init);
  AdadeltaState srl_opt =
      make_adadelta_state(result.srl, config.adadelta_rho, config.adadelta_epsilon);
  SamplerOptimizer sampler_opt =
      make_sampler_optimizer(result.sampler, config.adadelta_rho, config.adadelta_epsilon);

  const SrlHyper hyper{config.offset_c, config.eta};
  BatchLossOptions loss_opts;
  loss_opts.anchor_mode = !config.use_ra          ? AnchorMode::kOriginal
                          : config.normalize_anchor ? AnchorMode::kRobust
                                                    : AnchorMode::kRobustUnnormalized;
  loss_opts.anchor_in_denominator = config.anchor_in_denominator;

  const bool track_validation = validation != nullptr && validation->size() > 0;
  Eigen::MatrixXd val_features;
  std::vector<int> val_labels;
  if (track_validation) {
    if (validation->num_features != train_set.num_features) {
      throw ShapeError("validation features do not match training features");
    }
    val_features = feature_matrix(*validation);
    val_labels = mle_labels(*validation);
  }

  DenseNet best_srl = result.srl;
  SamplerNet best_sampler = result.sampler;
  double best_auc = -1.0;
  int safe_count = 0;
  bool sampler_trained = false;
  const int k = neighbor_count(config.batch_size);

  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    const auto t0 = std::chrono::steady_clock::now();
    const DenseNet before = result.srl;
    std::optional<SafetyReport> safety;
    if (config.use_sa && epoch % config.safety_every == 0) {
      safety = compute_safety(predict(result.srl, features), labels, assurance, k, config.delta,
                              epoch, config.threads);
      weights = sampling_weights(safety->flags(), config.beta);
      safe_count = safety->safe_count();
    }

    EpochRecord record;
    record.epoch = epoch;
    record.safe_count = config.use_sa ? safe_count : 0;
    double loss_sum = 0.0;
    double mse_sum = 0.0;
    int mse_steps = 0;

    for (int step = 0; step < config.steps_per_epoch; ++step) {
      const std::int64_t global_step =
          static_cast<std::int64_t>(epoch) * config.steps_per_epoch + step;

      std::vector<NTuplet> tuplets;
      std::vector<std::size_t> chosen;
      std::vector<HardnessRecord> hardness;
      BatchLossResult batch;
      Eigen::MatrixXd members;
      std::vector<double> member_assurance;
      std::vector<int> anchor_groups;
      ForwardCache cache;
      for (int attempt = 0;; ++attempt) {
        const std::int64_t draw = global_step + attempt * (std::int64_t{1} << 40);
        tuplets = construct_tuplets(labels, weights, n, pool, step_seed(config.seed, kConstruct, draw));
        hardness.assign(tuplets.size(), {});
        for (std::size_t t = 0; t < tuplets.size(); ++t) {
          hardness[t].tuplet_id = static_cast<int>(t);
          hardness[t].tuplet = tuplets[t];
        }
        const std::size_t keep = static_cast<std::size_t>(config.selected_per_step());
        if (config.use_sn && sampler_trained) {
          const auto scores = score_tuplets(result.sampler, tuplets, features);
          for (std::size_t t = 0; t < tuplets.size(); ++t) hardness[t].score = scores[t];
          chosen = select_hard(hardness, config.hard_fraction);
        } else {
          chosen = random_selection(tuplets.size(), keep,
                                    step_seed(config.seed, kRandomSelect, draw));
        }

        members.resize(features.rows(), static_cast<Eigen::Index>(chosen.size()) * n);
        member_assurance.assign(static_cast<std::size_t>(members.cols()), 0.0);
        for (std::size_t h = 0; h < chosen.size(); ++h) {
          const NTuplet& tup = tuplets[chosen[h]];
          for (int j = 0; j < n; ++j) {
            const auto col = static_cast<Eigen::Index>(h) * n + j;
            members.col(col) = features.col(tup.member(j));
            member_assurance[static_cast<std::size_t>(col)] =
                assurance[static_cast<std::size_t>(tup.member(j))];
          }
        }
        anchor_groups.clear();
        if (config.anchor_per_class) {
          for (std::size_t h : chosen) {
            anchor_groups.push_back(labels[static_cast<std::size_t>(tuplets[h].anchor)]);
          }
        }
        loss_opts.anchor_groups = anchor_groups;
        cache = forward(result.srl, members, true, step_seed(config.seed, kSrlDropout, draw));
        try {
          batch = batch_loss(cache.output, n, member_assurance, hyper, loss_opts);
          break;
        } catch (const AnchorDegeneracyError&) {
          if (attempt + 1 >= kAnchorRetries) throw;
        }
      }

      const BackwardResult grads = backward(result.srl, cache, batch.member_grads, false);
      adadelta_step(result.srl, grads.params, srl_opt, config.learning_rate);
      loss_sum += batch.mean_loss;
      record.selected_count += static_cast<int>(chosen.size());

      if (config.use_sn) {
        std::vector<HardnessRecord> observed;
        observed.reserve(chosen.size());
        for (std::size_t h = 0; h < chosen.size(); ++h) {
          HardnessRecord r = hardness[chosen[h]];
          r.observed_loss = batch.records[h].loss;
          observed.push_back(std::move(r));
        }
        const auto upd = sampler_update(result.sampler, observed, features, sampler_opt,
                                        config.learning_rate,
                                        step_seed(config.seed, kSamplerDropout, global_step),
                                        config.sampler_rank_targets);
        if (upd.applied) {
          sampler_trained = true;
          mse_sum += upd.mse;
          ++mse_steps;
        }
      }
    }

    record.srl_loss = loss_sum / config.steps_per_epoch;
    if (mse_steps > 0) record.sampler_mse = mse_sum / mse_steps;
    record.param_change = parameter_distance(before, result.srl);

    bool stop = false;
    if (track_validation) {
      record.val_auc =
          validation_auc(result.srl, features, labels, val_features, val_labels, config);
      if (record.val_auc && *record.val_auc > best_auc) {
        best_auc = *record.val_auc;
        best_srl = result.srl;
        best_sampler = result.sampler;
        result.history.best_epoch = epoch;
      }
      stop = config.early_stopping && result.history.best_epoch >= 0 &&
             epoch - result.history.best_epoch >= config.patience;
    }
    record.wall_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    result.history.epochs.push_back(record);
    if (on_epoch) on_epoch(record, safety ? &*safety : nullptr);
    if (stop) break;
  }

  if (track_validation && config.early_stopping && result.history.best_epoch >= 0) {
    result.srl = std::move(best_srl);
    result.sampler = std::move(best_sampler);
  } else {
    result.history.best_epoch = static_cast<int>(result.history.epochs.size()) - 1;
  }
  return result;
}

}  // namespace neucrowd

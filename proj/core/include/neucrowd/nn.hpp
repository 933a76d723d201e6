#ifndef NEUCROWD_NN_HPP_
#define NEUCROWD_NN_HPP_

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

namespace neucrowd {

enum class Activation { kIdentity, kRelu, kTanh };

std::string_view to_string(Activation activation);
Activation activation_from_string(std::string_view name);

/// Fully-connected feed-forward network with dropout on hidden activations.
///
/// Layer l maps dims[l] -> dims[l+1] with weights[l] of shape
/// dims[l+1] x dims[l]. Batches are passed column-wise: an input matrix of
/// shape dims[0] x B holds B examples.
struct DenseNet {
  std::vector<int> layer_dims;
  std::vector<Eigen::MatrixXd> weights;
  std::vector<Eigen::VectorXd> biases;
  Activation hidden_activation = Activation::kRelu;
  Activation output_activation = Activation::kIdentity;
  double dropout_rate = 0.0;
  // Bumped by every parameter update; forward caches record it.
  std::uint64_t generation = 0;

  int input_dim() const { return layer_dims.front(); }
  int output_dim() const { return layer_dims.back(); }
  int num_layers() const { return static_cast<int>(weights.size()); }
  std::size_t parameter_count() const;
  void validate() const;
};

struct InitOptions {
  double stddev = 0.05;
  Activation hidden_activation = Activation::kRelu;
  Activation output_activation = Activation::kIdentity;
};

// Weights ~ N(0, stddev^2), biases zero. Throws ConfigError on bad dims or a
// dropout rate outside [0, 1).
DenseNet init_network(std::span<const int> layer_dims, double dropout_rate,
                      std::uint64_t seed, const InitOptions& options = {});

// Everything backward() needs from a forward pass.
struct ForwardCache {
  std::uint64_t generation = 0;
  std::vector<int> layer_dims;
  // layer_inputs[l] is the (post-dropout) input fed to layer l.
  std::vector<Eigen::MatrixXd> layer_inputs;
  std::vector<Eigen::MatrixXd> pre_activations;
  // Inverted-dropout masks (0 or 1/(1-p)) applied after hidden layer l;
  // empty in eval mode or when the rate is zero.
  std::vector<Eigen::MatrixXd> dropout_masks;
  Eigen::MatrixXd output;
};

ForwardCache forward(const DenseNet& net, const Eigen::MatrixXd& inputs,
                     bool train_mode, std::uint64_t dropout_seed);

// Eval-mode forward without a cache.
Eigen::MatrixXd predict(const DenseNet& net, const Eigen::MatrixXd& inputs);

struct NetGradients {
  std::vector<Eigen::MatrixXd> weights;
  std::vector<Eigen::VectorXd> biases;

  static NetGradients zeros_like(const DenseNet& net);
  NetGradients& operator+=(const NetGradients& other);
  double squared_norm() const;
};

struct BackwardResult {
  NetGradients params;
  Eigen::MatrixXd input_grad;
};

// `output_grad` is dLoss/dOutput with the shape of cache.output. Throws
// UsageError if the cache was produced by a different network state.
// Without `want_input_grad` the input gradient is left empty.
BackwardResult backward(const DenseNet& net, const ForwardCache& cache,
                        const Eigen::MatrixXd& output_grad, bool want_input_grad = true);

struct AdadeltaState {
  std::vector<Eigen::MatrixXd> sq_grad_w;
  std::vector<Eigen::VectorXd> sq_grad_b;
  std::vector<Eigen::MatrixXd> sq_update_w;
  std::vector<Eigen::VectorXd> sq_update_b;
  double rho = 0.95;
  double epsilon = 1e-6;
};

AdadeltaState make_adadelta_state(const DenseNet& net, double rho = 0.95,
                                  double epsilon = 1e-6);

// Adadelta recurrence with the resulting step scaled by `learning_rate`.
// The squared-update accumulator tracks the unscaled step.
void adadelta_step(DenseNet& net, const NetGradients& grads,
                   AdadeltaState& state, double learning_rate);

// Checkpoint format "neucrowd.densenet" version 1 (see docs/formats.md).
nlohmann::json network_to_json(const DenseNet& net);
DenseNet network_from_json(const nlohmann::json& doc);
void save_network(const DenseNet& net, const std::filesystem::path& path);
DenseNet load_network(const std::filesystem::path& path);

}  // namespace neucrowd

#endif  // NEUCROWD_NN_HPP_

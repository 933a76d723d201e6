#include "neucrowd/nn.hpp"

#include <cmath>
#include <random>
#include <sstream>

#include "neucrowd/errors.hpp"
#include "neucrowd/io_util.hpp"

namespace neucrowd {

namespace {

constexpr int kCheckpointVersion = 1;
constexpr const char* kCheckpointFormat = "neucrowd.densenet";

std::string dims_string(std::span<const int> dims) {
  std::ostringstream os;
  os << '[';
  for (std::size_t i = 0; i < dims.size(); ++i) os << (i ? "," : "") << dims[i];
  os << ']';
  return os.str();
}

Eigen::MatrixXd apply_activation(Activation act, const Eigen::MatrixXd& z) {
  switch (act) {
    case Activation::kIdentity:
      return z;
    case Activation::kRelu:
      return z.cwiseMax(0.0);
    case Activation::kTanh:
      return z.array().tanh().matrix();
  }
  return z;
}

// Multiplies `grad` in place by the activation derivative evaluated at z.
void apply_activation_grad(Activation act, const Eigen::MatrixXd& z,
                           Eigen::MatrixXd& grad) {
  switch (act) {
    case Activation::kIdentity:
      return;
    case Activation::kRelu:
      grad.array() *= (z.array() > 0.0).cast<double>();
      return;
    case Activation::kTanh:
      grad.array() *= 1.0 - z.array().tanh().square();
      return;
  }
}

void check_grad_shapes(const DenseNet& net, const NetGradients& grads) {
  if (grads.weights.size() != net.weights.size() ||
      grads.biases.size() != net.biases.size()) {
    throw ShapeError("gradient layer count does not match network");
  }
  for (std::size_t l = 0; l < net.weights.size(); ++l) {
    if (grads.weights[l].rows() != net.weights[l].rows() ||
        grads.weights[l].cols() != net.weights[l].cols() ||
        grads.biases[l].size() != net.biases[l].size()) {
      throw ShapeError("gradient shape mismatch at layer " + std::to_string(l));
    }
  }
}

}  // namespace

std::string_view to_string(Activation activation) {
  switch (activation) {
    case Activation::kIdentity:
      return "identity";
    case Activation::kRelu:
      return "relu";
    case Activation::kTanh:
      return "tanh";
  }
  return "identity";
}

Activation activation_from_string(std::string_view name) {
  if (name == "identity") return Activation::kIdentity;
  if (name == "relu") return Activation::kRelu;
  if (name == "tanh") return Activation::kTanh;
  throw ConfigError("unknown activation '" + std::string(name) + "'");
}

std::size_t DenseNet::parameter_count() const {
  std::size_t count = 0;
  for (std::size_t l = 0; l < weights.size(); ++l) {
    count += static_cast<std::size_t>(weights[l].size() + biases[l].size());
  }
  return count;
}

void DenseNet::validate() const {
  if (layer_dims.size() < 2) {
    throw ConfigError("layer_dims needs at least two entries");
  }
  for (int d : layer_dims) {
    if (d <= 0) throw ConfigError("layer_dims must be positive: " + dims_string(layer_dims));
  }
  if (!(dropout_rate >= 0.0 && dropout_rate < 1.0)) {
    throw ConfigError("dropout_rate must lie in [0, 1)");
  }
  if (weights.size() != layer_dims.size() - 1 || biases.size() != weights.size()) {
    throw ShapeError("parameter count does not chain with layer_dims");
  }
  for (std::size_t l = 0; l < weights.size(); ++l) {
    if (weights[l].rows() != layer_dims[l + 1] || weights[l].cols() != layer_dims[l] ||
        biases[l].size() != layer_dims[l + 1]) {
      throw ShapeError("layer " + std::to_string(l) + " does not match layer_dims " +
                       dims_string(layer_dims));
    }
  }
}

DenseNet init_network(std::span<const int> layer_dims, double dropout_rate,
                      std::uint64_t seed, const InitOptions& options) {
  DenseNet net;
  net.layer_dims.assign(layer_dims.begin(), layer_dims.end());
  net.dropout_rate = dropout_rate;
  net.hidden_activation = options.hidden_activation;
  net.output_activation = options.output_activation;
  if (net.layer_dims.size() < 2) {
    throw ConfigError("layer_dims needs at least two entries");
  }
  for (int d : net.layer_dims) {
    if (d <= 0) throw ConfigError("layer_dims must be positive: " + dims_string(layer_dims));
  }
  if (!(options.stddev >= 0.0)) throw ConfigError("init stddev must be nonnegative");

  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, options.stddev);
  for (std::size_t l = 0; l + 1 < net.layer_dims.size(); ++l) {
    Eigen::MatrixXd w(net.layer_dims[l + 1], net.layer_dims[l]);
    // Row-major fill order so the draw sequence matches the checkpoint layout.
    for (Eigen::Index r = 0; r < w.rows(); ++r) {
      for (Eigen::Index c = 0; c < w.cols(); ++c) {
        w(r, c) = options.stddev > 0.0 ? normal(rng) : 0.0;
      }
    }
    net.weights.push_back(std::move(w));
    net.biases.push_back(Eigen::VectorXd::Zero(net.layer_dims[l + 1]));
  }
  net.validate();
  return net;
}

ForwardCache forward(const DenseNet& net, const Eigen::MatrixXd& inputs,
                     bool train_mode, std::uint64_t dropout_seed) {
  if (inputs.rows() != net.input_dim()) {
    throw ShapeError("forward: input has " + std::to_string(inputs.rows()) +
                     " rows, network expects " + std::to_string(net.input_dim()));
  }
  ForwardCache cache;
  cache.generation = net.generation;
  cache.layer_dims = net.layer_dims;
  const int layers = net.num_layers();
  const bool use_dropout = train_mode && net.dropout_rate > 0.0;
  const double keep = 1.0 - net.dropout_rate;

  std::mt19937_64 rng(dropout_seed);
  std::bernoulli_distribution keep_draw(keep);

  Eigen::MatrixXd activation = inputs;
  for (int l = 0; l < layers; ++l) {
    Eigen::MatrixXd z = net.weights[l] * activation;
    z.colwise() += net.biases[l];
    const bool hidden = l + 1 < layers;
    Eigen::MatrixXd a =
        apply_activation(hidden ? net.hidden_activation : net.output_activation, z);
    cache.layer_inputs.push_back(std::move(activation));
    cache.pre_activations.push_back(std::move(z));
    if (hidden && use_dropout) {
      Eigen::MatrixXd mask(a.rows(), a.cols());
      for (Eigen::Index c = 0; c < mask.cols(); ++c) {
        for (Eigen::Index r = 0; r < mask.rows(); ++r) {
          mask(r, c) = keep_draw(rng) ? 1.0 / keep : 0.0;
        }
      }
      a.array() *= mask.array();
      cache.dropout_masks.push_back(std::move(mask));
    } else if (hidden) {
      cache.dropout_masks.emplace_back();
    }
    activation = std::move(a);
  }
  cache.output = std::move(activation);
  return cache;
}

Eigen::MatrixXd predict(const DenseNet& net, const Eigen::MatrixXd& inputs) {
  if (inputs.rows() != net.input_dim()) {
    throw ShapeError("predict: input has " + std::to_string(inputs.rows()) +
                     " rows, network expects " + std::to_string(net.input_dim()));
  }
  Eigen::MatrixXd activation = inputs;
  const int layers = net.num_layers();
  for (int l = 0; l < layers; ++l) {
    Eigen::MatrixXd z = net.weights[l] * activation;
    z.colwise() += net.biases[l];
    activation = apply_activation(
        l + 1 < layers ? net.hidden_activation : net.output_activation, z);
  }
  return activation;
}

NetGradients NetGradients::zeros_like(const DenseNet& net) {
  NetGradients g;
  for (std::size_t l = 0; l < net.weights.size(); ++l) {
    g.weights.push_back(Eigen::MatrixXd::Zero(net.weights[l].rows(), net.weights[l].cols()));
    g.biases.push_back(Eigen::VectorXd::Zero(net.biases[l].size()));
  }
  return g;
}

NetGradients& NetGradients::operator+=(const NetGradients& other) {
  if (other.weights.size() != weights.size()) {
    throw ShapeError("cannot accumulate gradients of different networks");
  }
  for (std::size_t l = 0; l < weights.size(); ++l) {
    weights[l] += other.weights[l];
    biases[l] += other.biases[l];
  }
  return *this;
}

double NetGradients::squared_norm() const {
  double total = 0.0;
  for (std::size_t l = 0; l < weights.size(); ++l) {
    total += weights[l].squaredNorm() + biases[l].squaredNorm();
  }
  return total;
}

BackwardResult backward(const DenseNet& net, const ForwardCache& cache,
                        const Eigen::MatrixXd& output_grad, bool want_input_grad) {
  if (cache.generation != net.generation || cache.layer_dims != net.layer_dims) {
    throw UsageError("backward: cache was produced by a different network state");
  }
  if (output_grad.rows() != cache.output.rows() || output_grad.cols() != cache.output.cols()) {
    throw ShapeError("backward: output_grad shape does not match forward output");
  }
  const int layers = net.num_layers();
  BackwardResult result;
  result.params = NetGradients::zeros_like(net);

  Eigen::MatrixXd grad = output_grad;  // dLoss / d(post-activation of layer l)
  for (int l = layers - 1; l >= 0; --l) {
    const bool hidden = l + 1 < layers;
    if (hidden && cache.dropout_masks[l].size() != 0) {
      grad.array() *= cache.dropout_masks[l].array();
    }
    apply_activation_grad(hidden ? net.hidden_activation : net.output_activation,
                          cache.pre_activations[l], grad);
    result.params.weights[l].noalias() = grad * cache.layer_inputs[l].transpose();
    result.params.biases[l] = grad.rowwise().sum();
    if (l == 0 && !want_input_grad) break;
    grad = net.weights[l].transpose() * grad;
  }
  if (want_input_grad) result.input_grad = std::move(grad);
  return result;
}

AdadeltaState make_adadelta_state(const DenseNet& net, double rho, double epsilon) {
  if (!(rho > 0.0 && rho < 1.0)) throw ConfigError("adadelta rho must lie in (0, 1)");
  if (!(epsilon > 0.0)) throw ConfigError("adadelta epsilon must be positive");
  AdadeltaState state;
  state.rho = rho;
  state.epsilon = epsilon;
  for (std::size_t l = 0; l < net.weights.size(); ++l) {
    state.sq_grad_w.push_back(Eigen::MatrixXd::Zero(net.weights[l].rows(), net.weights[l].cols()));
    state.sq_update_w.push_back(Eigen::MatrixXd::Zero(net.weights[l].rows(), net.weights[l].cols()));
    state.sq_grad_b.push_back(Eigen::VectorXd::Zero(net.biases[l].size()));
    state.sq_update_b.push_back(Eigen::VectorXd::Zero(net.biases[l].size()));
  }
  return state;
}

namespace {

template <typename Param>
void adadelta_update(Param& param, const Param& grad, Param& sq_grad, Param& sq_update,
                     double rho, double eps, double lr) {
  sq_grad.array() = rho * sq_grad.array() + (1.0 - rho) * grad.array().square();
  const auto step = ((sq_update.array() + eps).sqrt() / (sq_grad.array() + eps).sqrt() *
                     grad.array())
                        .eval();
  sq_update.array() = rho * sq_update.array() + (1.0 - rho) * step.square();
  param.array() -= lr * step;
}

}  // namespace

void adadelta_step(DenseNet& net, const NetGradients& grads, AdadeltaState& state,
                   double learning_rate) {
  check_grad_shapes(net, grads);
  if (state.sq_grad_w.size() != net.weights.size()) {
    throw ShapeError("adadelta state does not match network");
  }
  for (std::size_t l = 0; l < net.weights.size(); ++l) {
    if (state.sq_grad_w[l].rows() != net.weights[l].rows() ||
        state.sq_grad_w[l].cols() != net.weights[l].cols() ||
        state.sq_grad_b[l].size() != net.biases[l].size()) {
      throw ShapeError("adadelta state shape mismatch at layer " + std::to_string(l));
    }
    adadelta_update(net.weights[l], grads.weights[l], state.sq_grad_w[l], state.sq_update_w[l],
                    state.rho, state.epsilon, learning_rate);
    adadelta_update(net.biases[l], grads.biases[l], state.sq_grad_b[l], state.sq_update_b[l],
                    state.rho, state.epsilon, learning_rate);
  }
  ++net.generation;
}

nlohmann::json network_to_json(const DenseNet& net) {
  net.validate();
  nlohmann::json doc;
  doc["format"] = kCheckpointFormat;
  doc["version"] = kCheckpointVersion;
  doc["layer_dims"] = net.layer_dims;
  doc["hidden_activation"] = std::string(to_string(net.hidden_activation));
  doc["output_activation"] = std::string(to_string(net.output_activation));
  doc["dropout_rate"] = net.dropout_rate;
  nlohmann::json weights = nlohmann::json::array();
  nlohmann::json biases = nlohmann::json::array();
  for (std::size_t l = 0; l < net.weights.size(); ++l) {
    std::vector<double> flat;
    flat.reserve(static_cast<std::size_t>(net.weights[l].size()));
    for (Eigen::Index r = 0; r < net.weights[l].rows(); ++r) {
      for (Eigen::Index c = 0; c < net.weights[l].cols(); ++c) flat.push_back(net.weights[l](r, c));
    }
    weights.push_back(std::move(flat));
    biases.push_back(std::vector<double>(net.biases[l].data(),
                                         net.biases[l].data() + net.biases[l].size()));
  }
  doc["weights"] = std::move(weights);
  doc["biases"] = std::move(biases);
  return doc;
}

DenseNet network_from_json(const nlohmann::json& doc) {
  try {
    if (doc.at("format").get<std::string>() != kCheckpointFormat) {
      throw DataError("not a neucrowd.densenet checkpoint");
    }
    if (doc.at("version").get<int>() != kCheckpointVersion) {
      throw DataError("unsupported checkpoint version " + doc.at("version").dump());
    }
    DenseNet net;
    net.layer_dims = doc.at("layer_dims").get<std::vector<int>>();
    net.hidden_activation = activation_from_string(doc.at("hidden_activation").get<std::string>());
    net.output_activation = activation_from_string(doc.at("output_activation").get<std::string>());
    net.dropout_rate = doc.at("dropout_rate").get<double>();
    const auto& weights = doc.at("weights");
    const auto& biases = doc.at("biases");
    if (net.layer_dims.size() < 2 || weights.size() != net.layer_dims.size() - 1 ||
        biases.size() != weights.size()) {
      throw DataError("checkpoint layer count does not match layer_dims");
    }
    for (std::size_t l = 0; l < weights.size(); ++l) {
      const auto flat = weights[l].get<std::vector<double>>();
      const auto bias = biases[l].get<std::vector<double>>();
      const int rows = net.layer_dims[l + 1];
      const int cols = net.layer_dims[l];
      if (flat.size() != static_cast<std::size_t>(rows) * cols ||
          bias.size() != static_cast<std::size_t>(rows)) {
        throw DataError("checkpoint array size mismatch at layer " + std::to_string(l));
      }
      Eigen::MatrixXd w(rows, cols);
      for (int r = 0; r < rows; ++r) {
        for (int c = 0; c < cols; ++c) w(r, c) = flat[static_cast<std::size_t>(r) * cols + c];
      }
      net.weights.push_back(std::move(w));
      net.biases.push_back(Eigen::Map<const Eigen::VectorXd>(bias.data(), rows));
    }
    net.validate();
    return net;
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("malformed checkpoint: ") + e.what());
  }
}

void save_network(const DenseNet& net, const std::filesystem::path& path) {
  write_file_atomic(path, network_to_json(net).dump() + "\n");
}

DenseNet load_network(const std::filesystem::path& path) {
  const std::string text = read_file(path);
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw DataError(path.string() + ": " + e.what());
  }
  return network_from_json(doc);
}

}  // namespace neucrowd

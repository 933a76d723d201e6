#include "neucrowd/sampler.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "neucrowd/errors.hpp"
#include "neucrowd/io_util.hpp"

namespace neucrowd {

namespace {

void check_members(std::span<const NTuplet> tuplets, Eigen::Index pool, int n) {
  for (std::size_t t = 0; t < tuplets.size(); ++t) {
    if (tuplets[t].size() != n) {
      throw ShapeError("tuplet " + std::to_string(t) + " has size " +
                       std::to_string(tuplets[t].size()) + ", sampler expects " +
                       std::to_string(n));
    }
    for (int j = 0; j < n; ++j) {
      const int idx = tuplets[t].member(j);
      if (idx < 0 || idx >= pool) {
        throw ShapeError("tuplet member index " + std::to_string(idx) + " outside the pool");
      }
    }
  }
}

Eigen::MatrixXd gather_members(std::span<const NTuplet> tuplets, const Eigen::MatrixXd& features,
                               int n) {
  check_members(tuplets, features.cols(), n);
  Eigen::MatrixXd x(features.rows(), static_cast<Eigen::Index>(tuplets.size()) * n);
  for (std::size_t t = 0; t < tuplets.size(); ++t) {
    for (int j = 0; j < n; ++j) {
      x.col(static_cast<Eigen::Index>(t) * n + j) = features.col(tuplets[t].member(j));
    }
  }
  return x;
}

// h x (T*n) trunk outputs -> (n*h) x T head inputs; column-major storage makes
// this a pure reinterpretation.
Eigen::MatrixXd concat_members(const Eigen::MatrixXd& trunk_out, int n) {
  return Eigen::Map<const Eigen::MatrixXd>(trunk_out.data(), trunk_out.rows() * n,
                                           trunk_out.cols() / n);
}

Eigen::MatrixXd split_members(const Eigen::MatrixXd& head_in_grad, int h) {
  return Eigen::Map<const Eigen::MatrixXd>(head_in_grad.data(), h,
                                           head_in_grad.size() / h);
}

}  // namespace

SamplerNet init_sampler(int input_dim, std::span<const int> trunk_dims, int tuplet_size,
                        double dropout_rate, std::uint64_t seed, const InitOptions& init) {
  if (trunk_dims.empty()) throw ConfigError("sampler trunk needs at least one layer");
  if (tuplet_size < 3) throw ConfigError("tuplet size must be at least 3");
  std::vector<int> dims{input_dim};
  dims.insert(dims.end(), trunk_dims.begin(), trunk_dims.end());
  InitOptions trunk_init = init;
  // The trunk's last layer is hidden within the sampler as a whole.
  trunk_init.output_activation = init.hidden_activation;
  SamplerNet s;
  s.tuplet_size = tuplet_size;
  s.trunk = init_network(dims, dropout_rate, derive_seed(seed, 1), trunk_init);
  const std::vector<int> head_dims{tuplet_size * trunk_dims.back(), 1};
  InitOptions head_init = init;
  head_init.output_activation = Activation::kIdentity;
  s.head = init_network(head_dims, dropout_rate, derive_seed(seed, 2), head_init);
  return s;
}

std::vector<double> score_tuplets(const SamplerNet& sampler, std::span<const NTuplet> tuplets,
                                  const Eigen::MatrixXd& features) {
  if (tuplets.empty()) return {};
  if (features.rows() != sampler.trunk.input_dim()) {
    throw ShapeError("score_tuplets: feature dimension does not match the sampler trunk");
  }
  const int n = sampler.tuplet_size;
  check_members(tuplets, features.cols(), n);
  // Eval-mode trunk outputs depend only on the example, and pool members
  // repeat, so each distinct example goes through the trunk once.
  std::vector<int> distinct;
  distinct.reserve(tuplets.size() * static_cast<std::size_t>(n));
  for (const auto& t : tuplets) {
    for (int j = 0; j < n; ++j) distinct.push_back(t.member(j));
  }
  std::sort(distinct.begin(), distinct.end());
  distinct.erase(std::unique(distinct.begin(), distinct.end()), distinct.end());
  const Eigen::MatrixXd embedded = predict(sampler.trunk, features(Eigen::all, distinct));
  Eigen::MatrixXd trunk_out(embedded.rows(), static_cast<Eigen::Index>(tuplets.size()) * n);
  for (std::size_t t = 0; t < tuplets.size(); ++t) {
    for (int j = 0; j < n; ++j) {
      const auto pos = std::lower_bound(distinct.begin(), distinct.end(), tuplets[t].member(j)) -
                       distinct.begin();
      trunk_out.col(static_cast<Eigen::Index>(t) * n + j) = embedded.col(pos);
    }
  }
  const Eigen::MatrixXd scores = predict(sampler.head, concat_members(trunk_out, n));
  return {scores.data(), scores.data() + scores.size()};
}

std::vector<std::size_t> select_hard(std::span<const HardnessRecord> records, double fraction) {
  if (records.empty()) throw UsageError("select_hard: no records");
  if (!(fraction > 0.0 && fraction <= 1.0)) {
    throw UsageError("hard_fraction", "must lie in (0, 1]");
  }
  const double raw = fraction * static_cast<double>(records.size());
  // Tolerate representation error, e.g. (1/3) * 9.
  auto keep = static_cast<std::size_t>(std::ceil(raw - 1e-9));
  keep = std::clamp<std::size_t>(keep, 1, records.size());

  std::vector<std::size_t> order(records.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (records[a].score != records[b].score) return records[a].score > records[b].score;
    return records[a].tuplet_id < records[b].tuplet_id;
  });
  order.resize(keep);
  return order;
}

SamplerLoss sampler_loss(const SamplerNet& sampler, std::span<const NTuplet> tuplets,
                         std::span<const double> targets, const Eigen::MatrixXd& features,
                         bool train_mode, std::uint64_t dropout_seed) {
  if (tuplets.empty()) throw UsageError("sampler_loss: no tuplets");
  if (targets.size() != tuplets.size()) throw ShapeError("sampler_loss: one target per tuplet");
  if (features.rows() != sampler.trunk.input_dim()) {
    throw ShapeError("sampler_loss: feature dimension does not match the sampler trunk");
  }
  const int n = sampler.tuplet_size;
  const auto count = static_cast<Eigen::Index>(tuplets.size());
  const Eigen::MatrixXd x = gather_members(tuplets, features, n);
  const ForwardCache trunk_cache =
      forward(sampler.trunk, x, train_mode, derive_seed(dropout_seed, 1));
  const ForwardCache head_cache = forward(sampler.head, concat_members(trunk_cache.output, n),
                                          train_mode, derive_seed(dropout_seed, 2));

  SamplerLoss out;
  out.predictions = head_cache.output.row(0).transpose();
  const Eigen::Map<const Eigen::VectorXd> y(targets.data(), count);
  const Eigen::VectorXd residual = out.predictions - y;
  out.mse = residual.squaredNorm() / static_cast<double>(count);
  const Eigen::MatrixXd grad_out = (2.0 / static_cast<double>(count)) * residual.transpose();
  BackwardResult head_back = backward(sampler.head, head_cache, grad_out);
  BackwardResult trunk_back =
      backward(sampler.trunk, trunk_cache,
               split_members(head_back.input_grad, sampler.trunk.output_dim()), false);
  out.head_grads = std::move(head_back.params);
  out.trunk_grads = std::move(trunk_back.params);
  return out;
}

SamplerOptimizer make_sampler_optimizer(const SamplerNet& sampler, double rho, double epsilon) {
  return {make_adadelta_state(sampler.trunk, rho, epsilon),
          make_adadelta_state(sampler.head, rho, epsilon)};
}

SamplerUpdateResult sampler_update(SamplerNet& sampler, std::span<const HardnessRecord> records,
                                   const Eigen::MatrixXd& features, SamplerOptimizer& optimizer,
                                   double learning_rate, std::uint64_t dropout_seed,
                                   bool rank_targets) {
  std::vector<NTuplet> tuplets;
  std::vector<double> targets;
  for (const auto& r : records) {
    if (!r.observed_loss) continue;
    tuplets.push_back(r.tuplet);
    targets.push_back(*r.observed_loss);
  }
  SamplerUpdateResult result;
  result.count = static_cast<int>(tuplets.size());
  if (tuplets.empty()) return result;

  if (rank_targets && targets.size() > 1) {
    std::vector<std::size_t> order(targets.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return targets[a] < targets[b]; });
    std::vector<double> ranks(targets.size());
    const double denom = static_cast<double>(targets.size() - 1);
    for (std::size_t r = 0; r < order.size(); ++r) ranks[order[r]] = static_cast<double>(r) / denom;
    targets = std::move(ranks);
  }

  const SamplerLoss loss = sampler_loss(sampler, tuplets, targets, features, true, dropout_seed);
  adadelta_step(sampler.trunk, loss.trunk_grads, optimizer.trunk, learning_rate);
  adadelta_step(sampler.head, loss.head_grads, optimizer.head, learning_rate);
  result.applied = true;
  result.mse = loss.mse;
  return result;
}

nlohmann::json sampler_to_json(const SamplerNet& sampler) {
  nlohmann::json doc;
  doc["format"] = "neucrowd.sampler";
  doc["version"] = 1;
  doc["tuplet_size"] = sampler.tuplet_size;
  doc["trunk"] = network_to_json(sampler.trunk);
  doc["head"] = network_to_json(sampler.head);
  return doc;
}

SamplerNet sampler_from_json(const nlohmann::json& doc) {
  try {
    if (doc.at("format").get<std::string>() != "neucrowd.sampler") {
      throw DataError("sampler checkpoint has wrong format tag");
    }
    if (doc.at("version").get<int>() != 1) throw DataError("unsupported sampler checkpoint version");
    SamplerNet sampler;
    sampler.tuplet_size = doc.at("tuplet_size").get<int>();
    sampler.trunk = network_from_json(doc.at("trunk"));
    sampler.head = network_from_json(doc.at("head"));
    if (sampler.tuplet_size < 1 ||
        sampler.head.input_dim() != sampler.tuplet_size * sampler.trunk.output_dim() ||
        sampler.head.output_dim() != 1) {
      throw DataError("sampler checkpoint has inconsistent shapes");
    }
    return sampler;
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("malformed sampler checkpoint: ") + e.what());
  }
}

void save_sampler(const SamplerNet& sampler, const std::filesystem::path& path) {
  write_file_atomic(path, sampler_to_json(sampler).dump() + "\n");
}

SamplerNet load_sampler(const std::filesystem::path& path) {
  const auto text = read_file(path);
  try {
    return sampler_from_json(nlohmann::json::parse(text));
  } catch (const nlohmann::json::exception& e) {
    throw DataError(path.string() + ": " + e.what());
  }
}

}  // namespace neucrowd

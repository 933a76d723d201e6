#include "neucrowd/tuplet.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <string>
#include <utility>

#include "neucrowd/errors.hpp"
#include "neucrowd/parallel.hpp"

namespace neucrowd {

int NTuplet::member(int i) const {
  if (i == 0) return anchor;
  if (i == 1) return positive;
  return negatives.at(static_cast<std::size_t>(i - 2));
}

NeighborSplit knn_split(const Eigen::MatrixXd& embeddings, std::span<const int> labels, int i,
                        int k) {
  if (k < 1) throw UsageError("knn_split: k must be at least 1");
  const auto n = static_cast<int>(embeddings.cols());
  if (static_cast<int>(labels.size()) != n) {
    throw ShapeError("knn_split: label count does not match embeddings");
  }
  if (i < 0 || i >= n) throw UsageError("knn_split: index out of range");

  std::vector<std::pair<double, int>> same;
  std::vector<std::pair<double, int>> opposite;
  const auto query = embeddings.col(i);
  for (int j = 0; j < n; ++j) {
    if (j == i) continue;
    const double dist = (embeddings.col(j) - query).squaredNorm();
    (labels[j] == labels[i] ? same : opposite).emplace_back(dist, j);
  }
  auto take = [k](std::vector<std::pair<double, int>>& cands, std::vector<int>& out) {
    const auto keep = std::min<std::size_t>(cands.size(), static_cast<std::size_t>(k));
    std::partial_sort(cands.begin(), cands.begin() + static_cast<std::ptrdiff_t>(keep),
                      cands.end());
    out.reserve(keep);
    for (std::size_t t = 0; t < keep; ++t) out.push_back(cands[t].second);
    return k - static_cast<int>(keep);
  };
  NeighborSplit split;
  split.same_shortfall = take(same, split.same);
  split.opposite_shortfall = take(opposite, split.opposite);
  return split;
}

bool is_safe(std::span<const double> assurances, std::span<const int> same_neighbors,
             std::span<const int> opposite_neighbors, double delta) {
  double same_sum = 0.0;
  double opposite_sum = 0.0;
  for (int p : same_neighbors) same_sum += assurances[static_cast<std::size_t>(p)];
  for (int q : opposite_neighbors) opposite_sum += assurances[static_cast<std::size_t>(q)];
  return same_sum > opposite_sum + delta;
}

int SafetyReport::safe_count() const {
  return static_cast<int>(
      std::count_if(entries.begin(), entries.end(), [](const SafetyEntry& e) { return e.safe; }));
}

std::vector<std::uint8_t> SafetyReport::flags() const {
  std::vector<std::uint8_t> out;
  out.reserve(entries.size());
  for (const auto& e : entries) out.push_back(e.safe ? 1 : 0);
  return out;
}

nlohmann::json SafetyReport::to_json() const {
  nlohmann::json doc;
  doc["iteration"] = iteration;
  doc["k"] = k;
  doc["delta"] = delta;
  doc["safe_count"] = safe_count();
  nlohmann::json rows = nlohmann::json::array();
  for (const auto& e : entries) {
    rows.push_back({{"safe", e.safe},
                    {"same_sum", e.same_sum},
                    {"opposite_sum", e.opposite_sum},
                    {"k_used", e.k_used}});
  }
  doc["examples"] = std::move(rows);
  return doc;
}

int neighbor_count(int batch_size) {
  if (batch_size < 1) throw ConfigError("batch size must be positive");
  // Integer square root; avoids sqrt rounding on perfect squares.
  int k = static_cast<int>(std::sqrt(static_cast<double>(batch_size)));
  while (static_cast<long long>(k + 1) * (k + 1) <= batch_size) ++k;
  while (static_cast<long long>(k) * k > batch_size) --k;
  return std::max(k, 1);
}

SafetyReport compute_safety(const Eigen::MatrixXd& embeddings, std::span<const int> labels,
                            std::span<const double> assurances, int k, double delta,
                            std::int64_t iteration, int threads) {
  const auto n = static_cast<std::size_t>(embeddings.cols());
  if (labels.size() != n || assurances.size() != n) {
    throw ShapeError("compute_safety: labels/assurances must match the embedding count");
  }
  SafetyReport report;
  report.iteration = iteration;
  report.k = k;
  report.delta = delta;
  report.entries.resize(n);
  parallel_for(n, threads, [&](std::size_t i) {
    const auto split = knn_split(embeddings, labels, static_cast<int>(i), k);
    SafetyEntry& e = report.entries[i];
    for (int p : split.same) e.same_sum += assurances[static_cast<std::size_t>(p)];
    for (int q : split.opposite) e.opposite_sum += assurances[static_cast<std::size_t>(q)];
    e.safe = e.same_sum > e.opposite_sum + delta;
    e.k_used = static_cast<int>(std::max(split.same.size(), split.opposite.size()));
  });
  return report;
}

std::vector<double> sampling_weights(std::span<const std::uint8_t> safe_flags, double beta) {
  if (!(beta >= 0.0)) throw ConfigError("beta must be nonnegative");
  std::vector<double> w;
  w.reserve(safe_flags.size());
  for (auto f : safe_flags) w.push_back(1.0 + (f ? beta : 0.0));
  return w;
}

namespace {

// Weighted draw over `candidates`, erasing the chosen entry when `remove` is
// set. Falls back to uniform if all weights are 0.
int draw_weighted(std::vector<int>& candidates, std::span<const double> weights,
                  std::mt19937_64& rng, bool remove) {
  double total = 0.0;
  for (int c : candidates) total += weights[static_cast<std::size_t>(c)];
  std::size_t pick = 0;
  if (total > 0.0) {
    std::uniform_real_distribution<double> unit(0.0, total);
    const double target = unit(rng);
    double acc = 0.0;
    for (std::size_t t = 0; t < candidates.size(); ++t) {
      const double w = weights[static_cast<std::size_t>(candidates[t])];
      if (w <= 0.0) continue;
      pick = t;  // last positive-weight entry absorbs rounding at the top end
      acc += w;
      if (target < acc) break;
    }
  } else {
    std::uniform_int_distribution<std::size_t> uniform(0, candidates.size() - 1);
    pick = uniform(rng);
  }
  const int chosen = candidates[pick];
  if (remove) candidates.erase(candidates.begin() + static_cast<std::ptrdiff_t>(pick));
  return chosen;
}

}  // namespace

std::vector<NTuplet> construct_tuplets(std::span<const int> labels,
                                       std::span<const double> weights, int n, int m,
                                       std::uint64_t seed) {
  if (n < 3) throw ConfigError("tuplet size n must be at least 3");
  if (m < 0) throw ConfigError("tuplet count m must be nonnegative");
  if (labels.size() != weights.size()) {
    throw ShapeError("construct_tuplets: labels and weights differ in length");
  }
  std::vector<int> by_class[2];
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] != 0 && labels[i] != 1) throw DataError("labels must be 0 or 1");
    if (!(weights[i] >= 0.0)) throw ConfigError("sampling weights must be nonnegative");
    by_class[labels[i]].push_back(static_cast<int>(i));
  }
  // A class can host anchors when it has a positive to pair with and the
  // other class can fill the negatives.
  const auto negatives = static_cast<std::size_t>(n - 2);
  std::vector<int> anchors;
  for (int cls = 0; cls < 2; ++cls) {
    if (by_class[cls].size() >= 2 && by_class[1 - cls].size() >= negatives) {
      anchors.insert(anchors.end(), by_class[cls].begin(), by_class[cls].end());
    }
  }
  if (anchors.empty()) {
    const int cls = by_class[0].size() <= by_class[1].size() ? 0 : 1;
    throw ConstructionError("class " + std::to_string(cls) + " has " +
                            std::to_string(by_class[cls].size()) +
                            " members; no class can host a tuplet of size " + std::to_string(n));
  }
  std::sort(anchors.begin(), anchors.end());

  std::mt19937_64 rng(seed);
  std::vector<NTuplet> out;
  out.reserve(static_cast<std::size_t>(m));
  for (int t = 0; t < m; ++t) {
    NTuplet tuplet;
    tuplet.anchor = draw_weighted(anchors, weights, rng, false);
    const int cls = labels[static_cast<std::size_t>(tuplet.anchor)];
    std::vector<int> same = by_class[cls];
    same.erase(std::find(same.begin(), same.end(), tuplet.anchor));
    tuplet.positive = draw_weighted(same, weights, rng, false);
    std::vector<int> others = by_class[1 - cls];
    tuplet.negatives.reserve(static_cast<std::size_t>(n - 2));
    for (int j = 0; j < n - 2; ++j) {
      tuplet.negatives.push_back(draw_weighted(others, weights, rng, true));
    }
    out.push_back(std::move(tuplet));
  }
  return out;
}

Eigen::VectorXd robust_anchor(const Eigen::MatrixXd& anchor_embeddings,
                              std::span<const double> assurances, bool normalize) {
  if (anchor_embeddings.cols() < 1) throw UsageError("robust_anchor needs at least one anchor");
  if (static_cast<Eigen::Index>(assurances.size()) != anchor_embeddings.cols()) {
    throw ShapeError("robust_anchor: one assurance per anchor required");
  }
  double total = 0.0;
  for (double a : assurances) total += a;
  if (total <= 0.0) {
    throw AnchorDegeneracyError("every anchor in the batch has zero assurance");
  }
  // Weights are formed before the sum so a lone anchor, or equal weights,
  // reproduce the embedding or the midpoint exactly.
  Eigen::VectorXd combined = Eigen::VectorXd::Zero(anchor_embeddings.rows());
  for (Eigen::Index j = 0; j < anchor_embeddings.cols(); ++j) {
    const double a = assurances[static_cast<std::size_t>(j)];
    if (a == 0.0) continue;
    combined += (normalize ? a / total : a) * anchor_embeddings.col(j);
  }
  return combined;
}

}  // namespace neucrowd

#ifndef NEUCROWD_TUPLET_HPP_
#define NEUCROWD_TUPLET_HPP_

#include <cstdint>
#include <span>
#include <vector>

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

namespace neucrowd {

// (anchor, positive, negatives...) over indices into a candidate pool.
struct NTuplet {
  int anchor = 0;
  int positive = 0;
  std::vector<int> negatives;

  int size() const { return 2 + static_cast<int>(negatives.size()); }
  // Member i in training order: 0 = anchor, 1 = positive, 2.. = negatives.
  int member(int i) const;
  bool operator==(const NTuplet&) const = default;
};

struct NeighborSplit {
  std::vector<int> same;      // nearest first
  std::vector<int> opposite;  // nearest first
  int same_shortfall = 0;     // k minus the number found
  int opposite_shortfall = 0;
};

// k nearest same-class and opposite-class neighbors of column i of
// `embeddings` (dim x N) under l2, excluding i. Ties go to the lower index.
NeighborSplit knn_split(const Eigen::MatrixXd& embeddings, std::span<const int> labels, int i,
                        int k);

// Same-class assurance mass must beat opposite-class mass by more than delta.
bool is_safe(std::span<const double> assurances, std::span<const int> same_neighbors,
             std::span<const int> opposite_neighbors, double delta);

struct SafetyEntry {
  bool safe = false;
  double same_sum = 0.0;
  double opposite_sum = 0.0;
  int k_used = 0;
};

struct SafetyReport {
  std::int64_t iteration = 0;
  int k = 0;
  double delta = 0.0;
  std::vector<SafetyEntry> entries;

  int safe_count() const;
  std::vector<std::uint8_t> flags() const;
  nlohmann::json to_json() const;
};

// floor(sqrt(batch_size)), at least 1.
int neighbor_count(int batch_size);

SafetyReport compute_safety(const Eigen::MatrixXd& embeddings, std::span<const int> labels,
                            std::span<const double> assurances, int k, double delta,
                            std::int64_t iteration, int threads = 1);

// 1 + beta for safe examples, 1 otherwise.
std::vector<double> sampling_weights(std::span<const std::uint8_t> safe_flags, double beta);

// Draws m tuplets of size n. Anchors are drawn by weight from every class
// that can host a tuplet (two members, and n - 2 in the other class),
// positives by weight from the anchor's class, negatives by weight without
// replacement from the other class. Throws ConstructionError naming the
// smaller class when no class can host one.
std::vector<NTuplet> construct_tuplets(std::span<const int> labels,
                                       std::span<const double> weights, int n, int m,
                                       std::uint64_t seed);

// Assurance-weighted combination of anchor embeddings (columns). Normalized
// mode divides by the assurance total. Throws AnchorDegeneracyError when
// every assurance is zero.
Eigen::VectorXd robust_anchor(const Eigen::MatrixXd& anchor_embeddings,
                              std::span<const double> assurances, bool normalize = true);

}  // namespace neucrowd

#endif  // NEUCROWD_TUPLET_HPP_

#ifndef NEUCROWD_SRL_HPP_
#define NEUCROWD_SRL_HPP_

#include <span>
#include <vector>

#include <Eigen/Dense>

namespace neucrowd {

struct SrlHyper {
  double offset_c = 1.0;  // similarity offset C
  double eta = 1.0;       // softmax scale, > 0

  void validate() const;
};

// C - ||a - b||_2.
double similarity(const Eigen::VectorXd& a, const Eigen::VectorXd& b, double offset_c);

// Candidate logits eta * A_j * (C - ||c_j - anchor||), with the distance
// smoothed as sqrt(||.||^2 + 1e-12).
Eigen::VectorXd candidate_logits(const Eigen::VectorXd& anchor, const Eigen::MatrixXd& candidates,
                                 std::span<const double> assurances, const SrlHyper& hyper);

// Softmax over candidate logits (max-shifted).
Eigen::VectorXd candidate_posteriors(const Eigen::VectorXd& anchor,
                                     const Eigen::MatrixXd& candidates,
                                     std::span<const double> assurances, const SrlHyper& hyper);

// Probability of candidate 0 (the positive) given the anchor.
double posterior(const Eigen::VectorXd& anchor, const Eigen::MatrixXd& candidates,
                 std::span<const double> assurances, const SrlHyper& hyper);

struct TupletLossRecord {
  int tuplet_id = 0;
  double posterior = 0.0;
  double loss = 0.0;                 // -log posterior
  Eigen::MatrixXd candidate_grads;   // dloss/dcandidate, one column each
  Eigen::VectorXd anchor_grad;       // dloss/danchor
};

TupletLossRecord tuplet_loss(const Eigen::VectorXd& anchor, const Eigen::MatrixXd& candidates,
                             std::span<const double> assurances, const SrlHyper& hyper,
                             int tuplet_id = 0);

enum class AnchorMode {
  kOriginal,            // each tuplet keeps its own anchor
  kRobust,              // shared assurance-weighted mean of the group's anchors
  kRobustUnnormalized,  // shared assurance-weighted sum
};

struct BatchLossOptions {
  AnchorMode anchor_mode = AnchorMode::kRobust;
  // Also place the tuplet's own anchor among the softmax candidates.
  bool anchor_in_denominator = false;
  // One group id per tuplet; tuplets in a group share one robust anchor.
  // Empty means the whole batch is a single group.
  std::span<const int> anchor_groups;
};

struct BatchLossResult {
  double mean_loss = 0.0;
  std::vector<TupletLossRecord> records;
  // d(mean_loss)/d(member embedding), same shape as the input.
  Eigen::MatrixXd member_grads;
};

// `members` holds T tuplets of size n laid out column-wise: columns
// [t*n, t*n+n) are (anchor, positive, negatives...). `member_assurances`
// follows the same layout.
BatchLossResult batch_loss(const Eigen::MatrixXd& members, int n,
                           std::span<const double> member_assurances, const SrlHyper& hyper,
                           const BatchLossOptions& options = {});

}  // namespace neucrowd

#endif  // NEUCROWD_SRL_HPP_

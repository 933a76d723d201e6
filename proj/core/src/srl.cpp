#include "neucrowd/srl.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <string>

#include "neucrowd/errors.hpp"
#include "neucrowd/tuplet.hpp"

namespace neucrowd {

namespace {

constexpr double kDistanceSmoothing = 1e-12;

void check_candidates(const Eigen::VectorXd& anchor, const Eigen::MatrixXd& candidates,
                      std::span<const double> assurances) {
  if (candidates.cols() < 1) throw UsageError("need at least one candidate");
  if (candidates.rows() != anchor.size()) {
    throw ShapeError("anchor and candidate embeddings differ in dimension");
  }
  if (static_cast<Eigen::Index>(assurances.size()) != candidates.cols()) {
    throw ShapeError("one assurance per candidate required");
  }
}

Eigen::VectorXd softmax(const Eigen::VectorXd& logits) {
  const double top = logits.maxCoeff();
  Eigen::VectorXd e = (logits.array() - top).exp();
  return e / e.sum();
}

}  // namespace

void SrlHyper::validate() const {
  if (!(eta > 0.0)) throw ConfigError("eta must be positive");
  if (!std::isfinite(offset_c)) throw ConfigError("C must be finite");
}

double similarity(const Eigen::VectorXd& a, const Eigen::VectorXd& b, double offset_c) {
  if (a.size() != b.size()) throw ShapeError("similarity: dimension mismatch");
  return offset_c - (a - b).norm();
}

Eigen::VectorXd candidate_logits(const Eigen::VectorXd& anchor, const Eigen::MatrixXd& candidates,
                                 std::span<const double> assurances, const SrlHyper& hyper) {
  check_candidates(anchor, candidates, assurances);
  Eigen::VectorXd logits(candidates.cols());
  for (Eigen::Index j = 0; j < candidates.cols(); ++j) {
    const double dist =
        std::sqrt((candidates.col(j) - anchor).squaredNorm() + kDistanceSmoothing);
    logits[j] = hyper.eta * assurances[static_cast<std::size_t>(j)] * (hyper.offset_c - dist);
  }
  return logits;
}

Eigen::VectorXd candidate_posteriors(const Eigen::VectorXd& anchor,
                                     const Eigen::MatrixXd& candidates,
                                     std::span<const double> assurances, const SrlHyper& hyper) {
  return softmax(candidate_logits(anchor, candidates, assurances, hyper));
}

double posterior(const Eigen::VectorXd& anchor, const Eigen::MatrixXd& candidates,
                 std::span<const double> assurances, const SrlHyper& hyper) {
  return candidate_posteriors(anchor, candidates, assurances, hyper)[0];
}

TupletLossRecord tuplet_loss(const Eigen::VectorXd& anchor, const Eigen::MatrixXd& candidates,
                             std::span<const double> assurances, const SrlHyper& hyper,
                             int tuplet_id) {
  check_candidates(anchor, candidates, assurances);
  const Eigen::Index k = candidates.cols();
  Eigen::MatrixXd diffs = candidates.colwise() - anchor;
  Eigen::VectorXd dists(k);
  Eigen::VectorXd logits(k);
  for (Eigen::Index j = 0; j < k; ++j) {
    dists[j] = std::sqrt(diffs.col(j).squaredNorm() + kDistanceSmoothing);
    logits[j] = hyper.eta * assurances[static_cast<std::size_t>(j)] * (hyper.offset_c - dists[j]);
  }
  const double top = logits.maxCoeff();
  const Eigen::VectorXd shifted = (logits.array() - top).exp();
  const double denom = shifted.sum();
  const Eigen::VectorXd probs = shifted / denom;

  TupletLossRecord rec;
  rec.tuplet_id = tuplet_id;
  rec.posterior = std::max(probs[0], 1e-300);
  // logsumexp(z) - z_0 == -log p_0, without the cancellation of log(p).
  rec.loss = std::max(0.0, std::log(denom) + top - logits[0]);

  rec.candidate_grads.resize(candidates.rows(), k);
  rec.anchor_grad = Eigen::VectorXd::Zero(anchor.size());
  for (Eigen::Index j = 0; j < k; ++j) {
    const double dz = probs[j] - (j == 0 ? 1.0 : 0.0);
    // dz_j/dc_j = -eta * A_j * (c_j - a) / dist_j
    const double scale = dz * hyper.eta * assurances[static_cast<std::size_t>(j)] / dists[j];
    rec.candidate_grads.col(j) = -scale * diffs.col(j);
    rec.anchor_grad += scale * diffs.col(j);
  }
  return rec;
}

BatchLossResult batch_loss(const Eigen::MatrixXd& members, int n,
                           std::span<const double> member_assurances, const SrlHyper& hyper,
                           const BatchLossOptions& options) {
  hyper.validate();
  if (n < 3) throw ConfigError("tuplet size n must be at least 3");
  if (members.cols() == 0) throw UsageError("batch_loss: empty batch");
  if (members.cols() % n != 0) {
    throw ShapeError("batch_loss: member count is not a multiple of n");
  }
  if (static_cast<Eigen::Index>(member_assurances.size()) != members.cols()) {
    throw ShapeError("batch_loss: one assurance per member required");
  }
  const Eigen::Index tuplets = members.cols() / n;
  const double inv_t = 1.0 / static_cast<double>(tuplets);
  const bool robust = options.anchor_mode != AnchorMode::kOriginal;

  if (!options.anchor_groups.empty() &&
      static_cast<Eigen::Index>(options.anchor_groups.size()) != tuplets) {
    throw ShapeError("batch_loss: one anchor group per tuplet required");
  }
  // group_of[t] indexes into the per-group anchors below.
  std::vector<int> group_of(static_cast<std::size_t>(tuplets), 0);
  std::vector<Eigen::VectorXd> group_anchor;
  std::vector<double> anchor_weights;
  if (robust) {
    std::map<int, int> ids;
    for (Eigen::Index t = 0; t < tuplets && !options.anchor_groups.empty(); ++t) {
      const auto [it, inserted] = ids.emplace(options.anchor_groups[static_cast<std::size_t>(t)],
                                              static_cast<int>(ids.size()));
      group_of[static_cast<std::size_t>(t)] = it->second;
    }
    const int groups = std::max<int>(1, static_cast<int>(ids.size()));
    const bool normalize = options.anchor_mode == AnchorMode::kRobust;
    anchor_weights.assign(static_cast<std::size_t>(tuplets), 0.0);
    for (int g = 0; g < groups; ++g) {
      std::vector<Eigen::Index> cols;
      std::vector<double> a;
      for (Eigen::Index t = 0; t < tuplets; ++t) {
        if (group_of[static_cast<std::size_t>(t)] != g) continue;
        cols.push_back(t);
        a.push_back(member_assurances[static_cast<std::size_t>(t * n)]);
      }
      Eigen::MatrixXd anchors(members.rows(), static_cast<Eigen::Index>(cols.size()));
      for (std::size_t i = 0; i < cols.size(); ++i) {
        anchors.col(static_cast<Eigen::Index>(i)) = members.col(cols[i] * n);
      }
      group_anchor.push_back(robust_anchor(anchors, a, normalize));
      double total = 0.0;
      for (double v : a) total += v;
      for (std::size_t i = 0; i < cols.size(); ++i) {
        anchor_weights[static_cast<std::size_t>(cols[i])] = normalize ? a[i] / total : a[i];
      }
    }
  }

  const int extra = options.anchor_in_denominator ? 1 : 0;
  BatchLossResult result;
  result.member_grads = Eigen::MatrixXd::Zero(members.rows(), members.cols());
  result.records.reserve(static_cast<std::size_t>(tuplets));
  std::vector<Eigen::VectorXd> group_grad(group_anchor.size(),
                                          Eigen::VectorXd::Zero(members.rows()));
  double total_loss = 0.0;

  std::vector<double> cand_assurance(static_cast<std::size_t>(n - 1 + extra));
  Eigen::MatrixXd cands(members.rows(), n - 1 + extra);
  for (Eigen::Index t = 0; t < tuplets; ++t) {
    const Eigen::Index base = t * n;
    for (int j = 1; j < n; ++j) {
      cands.col(j - 1) = members.col(base + j);
      cand_assurance[static_cast<std::size_t>(j - 1)] =
          member_assurances[static_cast<std::size_t>(base + j)];
    }
    if (extra) {
      cands.col(n - 1) = members.col(base);
      cand_assurance[static_cast<std::size_t>(n - 1)] =
          member_assurances[static_cast<std::size_t>(base)];
    }
    const std::size_t g = static_cast<std::size_t>(group_of[static_cast<std::size_t>(t)]);
    const Eigen::VectorXd anchor = robust ? group_anchor[g] : Eigen::VectorXd(members.col(base));
    TupletLossRecord rec =
        tuplet_loss(anchor, cands, cand_assurance, hyper, static_cast<int>(t));
    total_loss += rec.loss;
    for (int j = 1; j < n; ++j) result.member_grads.col(base + j) += inv_t * rec.candidate_grads.col(j - 1);
    if (extra) result.member_grads.col(base) += inv_t * rec.candidate_grads.col(n - 1);
    if (robust) {
      group_grad[g] += inv_t * rec.anchor_grad;
    } else {
      result.member_grads.col(base) += inv_t * rec.anchor_grad;
    }
    result.records.push_back(std::move(rec));
  }
  if (robust) {
    for (Eigen::Index t = 0; t < tuplets; ++t) {
      const auto tt = static_cast<std::size_t>(t);
      result.member_grads.col(t * n) +=
          anchor_weights[tt] * group_grad[static_cast<std::size_t>(group_of[tt])];
    }
  }
  result.mean_loss = total_loss * inv_t;
  return result;
}

}  // namespace neucrowd

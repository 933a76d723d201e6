#include "neucrowd/crowd_labels.hpp"

#include <cmath>
#include <string>

#include "neucrowd/errors.hpp"

namespace neucrowd {

std::string_view to_string(Split split) {
  switch (split) {
    case Split::kTrain:
      return "train";
    case Split::kValidation:
      return "validation";
    case Split::kTest:
      return "test";
  }
  return "train";
}

Split split_from_string(std::string_view name) {
  if (name == "train") return Split::kTrain;
  if (name == "validation") return Split::kValidation;
  if (name == "test") return Split::kTest;
  throw DataError("unknown split '" + std::string(name) + "'");
}

void Dataset::validate() const {
  if (num_workers < 1) throw DataError("dataset needs at least one worker");
  for (std::size_t i = 0; i < examples.size(); ++i) {
    const auto& ex = examples[i];
    if (ex.features.size() != num_features) {
      throw DataError("example " + std::to_string(i) + " has " +
                      std::to_string(ex.features.size()) + " features, expected " +
                      std::to_string(num_features));
    }
    if (static_cast<int>(ex.crowd_labels.size()) != num_workers) {
      throw DataError("example " + std::to_string(i) + " has " +
                      std::to_string(ex.crowd_labels.size()) + " crowd labels, expected " +
                      std::to_string(num_workers));
    }
    for (auto y : ex.crowd_labels) {
      if (y > 1) throw DataError("example " + std::to_string(i) + " has a non-binary crowd label");
    }
    if (ex.truth && *ex.truth != 0 && *ex.truth != 1) {
      throw DataError("example " + std::to_string(i) + " has a non-binary truth label");
    }
  }
}

namespace {

int positive_votes(std::span<const std::uint8_t> labels) {
  if (labels.empty()) throw DataError("empty crowd label vector");
  int ones = 0;
  for (auto y : labels) {
    if (y > 1) throw DataError("crowd labels must be 0 or 1");
    ones += y;
  }
  return ones;
}

}  // namespace

double assurance(std::span<const std::uint8_t> labels) {
  const int ones = positive_votes(labels);
  const double d = static_cast<double>(labels.size());
  return std::abs(1.0 - 2.0 * ones / d);
}

MleLabel mle_label(std::span<const std::uint8_t> labels) {
  const int ones = positive_votes(labels);
  MleLabel out;
  out.prob = static_cast<double>(ones) / static_cast<double>(labels.size());
  // Integer comparison so the tie rule is exact.
  out.label = 2 * ones > static_cast<int>(labels.size()) ? 1 : 0;
  return out;
}

KappaResult fleiss_kappa(const Dataset& dataset) {
  const std::size_t n_items = dataset.size();
  const int d = dataset.num_workers;
  if (n_items < 2) throw UsageError("fleiss_kappa needs at least two examples");
  if (d < 2) throw UsageError("fleiss_kappa needs at least two raters");

  double agreement_sum = 0.0;
  double total_ones = 0.0;
  for (const auto& ex : dataset.examples) {
    if (static_cast<int>(ex.crowd_labels.size()) != d) {
      throw DataError("fleiss_kappa: inconsistent rater count");
    }
    const double ones = positive_votes(ex.crowd_labels);
    const double zeros = d - ones;
    agreement_sum += (ones * (ones - 1.0) + zeros * (zeros - 1.0)) / (d * (d - 1.0));
    total_ones += ones;
  }
  const double p_bar = agreement_sum / static_cast<double>(n_items);
  const double p1 = total_ones / (static_cast<double>(n_items) * d);
  const double p0 = 1.0 - p1;
  const double p_e = p0 * p0 + p1 * p1;
  if (p_e >= 1.0) return {1.0, true};
  return {(p_bar - p_e) / (1.0 - p_e), false};
}

double class_ratio(const Dataset& dataset) {
  if (dataset.size() == 0) throw UsageError("class_ratio of an empty dataset");
  bool all_truth = true;
  for (const auto& ex : dataset.examples) all_truth = all_truth && ex.truth.has_value();
  std::size_t positives = 0;
  for (const auto& ex : dataset.examples) {
    positives += all_truth ? static_cast<std::size_t>(*ex.truth)
                           : static_cast<std::size_t>(mle_label(ex.crowd_labels).label);
  }
  return static_cast<double>(positives) / static_cast<double>(dataset.size());
}

std::vector<double> assurances(const Dataset& dataset) {
  std::vector<double> out;
  out.reserve(dataset.size());
  for (const auto& ex : dataset.examples) out.push_back(assurance(ex.crowd_labels));
  return out;
}

std::vector<int> mle_labels(const Dataset& dataset) {
  std::vector<int> out;
  out.reserve(dataset.size());
  for (const auto& ex : dataset.examples) out.push_back(mle_label(ex.crowd_labels).label);
  return out;
}

std::vector<int> truth_labels(const Dataset& dataset) {
  std::vector<int> out;
  out.reserve(dataset.size());
  for (std::size_t i = 0; i < dataset.size(); ++i) {
    const auto& truth = dataset.examples[i].truth;
    if (!truth) throw DataError("example " + std::to_string(i) + " has no truth label");
    out.push_back(*truth);
  }
  return out;
}

Eigen::MatrixXd feature_matrix(const Dataset& dataset) {
  Eigen::MatrixXd x(dataset.num_features, static_cast<Eigen::Index>(dataset.size()));
  for (std::size_t i = 0; i < dataset.size(); ++i) {
    const auto& f = dataset.examples[i].features;
    if (f.size() != dataset.num_features) {
      throw ShapeError("example " + std::to_string(i) + " feature length mismatch");
    }
    x.col(static_cast<Eigen::Index>(i)) = f;
  }
  return x;
}

}  // namespace neucrowd

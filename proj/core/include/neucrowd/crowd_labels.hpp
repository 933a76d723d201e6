#ifndef NEUCROWD_CROWD_LABELS_HPP_
#define NEUCROWD_CROWD_LABELS_HPP_

#include <cstdint>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

namespace neucrowd {

enum class Split { kTrain, kValidation, kTest };

std::string_view to_string(Split split);
Split split_from_string(std::string_view name);

// One annotated item: raw features, the d workers' binary votes, and an
// optional expert label used only for evaluation.
struct CrowdExample {
  Eigen::VectorXd features;
  std::vector<std::uint8_t> crowd_labels;
  std::optional<int> truth;
};

struct Dataset {
  std::vector<CrowdExample> examples;
  Split split = Split::kTrain;
  int num_features = 0;
  int num_workers = 0;

  std::size_t size() const { return examples.size(); }
  // Throws DataError unless every example matches num_features/num_workers
  // and all labels are binary.
  void validate() const;
};

// |1 - (2/d) * sum(y)|: 1 for a unanimous vote, 0 for an even split.
double assurance(std::span<const std::uint8_t> labels);

struct MleLabel {
  double prob = 0.0;
  int label = 0;  // prob > 0.5; a tie maps to 0
};

MleLabel mle_label(std::span<const std::uint8_t> labels);

struct KappaResult {
  double value = 0.0;
  // Chance agreement was 1 (every vote identical); value reported as 1.
  bool degenerate = false;
};

// Fleiss' kappa over the two categories {0, 1}.
KappaResult fleiss_kappa(const Dataset& dataset);

// Share of positives; uses truth when every example has it, MLE labels
// otherwise.
double class_ratio(const Dataset& dataset);

std::vector<double> assurances(const Dataset& dataset);
std::vector<int> mle_labels(const Dataset& dataset);
// Throws DataError if any example lacks a truth label.
std::vector<int> truth_labels(const Dataset& dataset);
// num_features x N, one example per column.
Eigen::MatrixXd feature_matrix(const Dataset& dataset);

}  // namespace neucrowd

#endif  // NEUCROWD_CROWD_LABELS_HPP_

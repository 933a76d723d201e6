#ifndef NEUCROWD_EVALUATION_HPP_
#define NEUCROWD_EVALUATION_HPP_

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

#include "neucrowd/crowd_labels.hpp"
#include "neucrowd/metrics.hpp"
#include "neucrowd/nn.hpp"
#include "neucrowd/trainer.hpp"

namespace neucrowd {

struct EvalConfig {
  double c_min = 1e-4;
  double c_max = 1e4;
  int c_points = 9;
  LogRegOptions logreg;

  std::vector<double> c_grid() const;
  void validate() const;
};

// Which of the three components a run keeps.
struct VariantFlags {
  bool sa = true;
  bool ra = true;
  bool sn = true;

  // "NeuCrowd" followed by "-SA", "-RA", "-SN" for each disabled component.
  std::string name() const;
  bool operator==(const VariantFlags&) const = default;
};

// The eight component combinations, fewest components first.
std::vector<VariantFlags> all_variants();

inline constexpr int kMetricsSchemaVersion = 1;

struct MetricsReport {
  std::string model;  // variant name or "majority-vote"
  double accuracy = 0.0;
  double auc = 0.0;
  double c_lr = 0.0;
  std::uint64_t seed = 0;
  VariantFlags variant;
  std::string manifest_hash;
  std::string train_labels = "mle";
  std::string test_labels = "truth";

  nlohmann::json to_json() const;
  static MetricsReport from_json(const nlohmann::json& doc);
};

// Logistic regression on `train_x` with MLE crowd labels, C chosen on the
// validation split's MLE labels, scored against test truth.
MetricsReport evaluate_features(const Eigen::MatrixXd& train_x, std::span<const int> train_labels,
                                const Eigen::MatrixXd& val_x, std::span<const int> val_labels,
                                const Eigen::MatrixXd& test_x, std::span<const int> test_truth,
                                const EvalConfig& config);

MetricsReport evaluate_model(const DenseNet& srl, const Dataset& train, const Dataset& validation,
                             const Dataset& test, const EvalConfig& config);

// Logistic regression on raw features with majority-vote labels.
MetricsReport majority_vote_baseline(const Dataset& train, const Dataset& validation,
                                     const Dataset& test, const EvalConfig& config);

struct AblationRow {
  VariantFlags variant;
  std::vector<MetricsReport> reports;  // one per seed
  double mean_accuracy = 0.0;
  double std_accuracy = 0.0;
  double mean_auc = 0.0;
  double std_auc = 0.0;
};

struct AblationResult {
  std::vector<AblationRow> rows;

  std::string to_csv() const;
  nlohmann::json to_json() const;
};

using AblationProgress = std::function<void(const MetricsReport&)>;

// Trains and evaluates every variant for every seed. base.seed is replaced
// by each entry of `seeds`.
AblationResult ablation_suite(const Dataset& train, const Dataset& validation, const Dataset& test,
                              const RunConfig& base, std::span<const std::uint64_t> seeds,
                              const EvalConfig& eval, const std::string& manifest_hash = "",
                              std::span<const VariantFlags> variants = {},
                              const AblationProgress& progress = {});

}  // namespace neucrowd

#endif  // NEUCROWD_EVALUATION_HPP_

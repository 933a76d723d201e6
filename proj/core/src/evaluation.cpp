#include "neucrowd/evaluation.hpp"

#include <cmath>

#include "neucrowd/errors.hpp"
#include "neucrowd/io_util.hpp"

namespace neucrowd {

namespace {

std::pair<double, double> mean_std(const std::vector<double>& xs) {
  if (xs.empty()) return {0.0, 0.0};
  double mean = 0.0;
  for (double x : xs) mean += x;
  mean /= static_cast<double>(xs.size());
  if (xs.size() < 2) return {mean, 0.0};
  double ss = 0.0;
  for (double x : xs) ss += (x - mean) * (x - mean);
  return {mean, std::sqrt(ss / static_cast<double>(xs.size() - 1))};
}

}  // namespace

std::vector<double> EvalConfig::c_grid() const { return log_spaced_grid(c_min, c_max, c_points); }

void EvalConfig::validate() const {
  if (!(c_min > 0.0)) throw UsageError("c_min", "must be positive");
  if (!(c_max >= c_min)) throw UsageError("c_max", "must be at least c_min");
  if (c_points < 1) throw UsageError("c_points", "must be positive");
  if (logreg.max_iter < 1) throw UsageError("logreg_max_iter", "must be positive");
  if (!(logreg.grad_tol > 0.0)) throw UsageError("logreg_tol", "must be positive");
}

std::string VariantFlags::name() const {
  std::string out = "NeuCrowd";
  if (!sa) out += "-SA";
  if (!ra) out += "-RA";
  if (!sn) out += "-SN";
  return out;
}

std::vector<VariantFlags> all_variants() {
  return {
      {false, false, false}, {false, false, true}, {true, false, false}, {false, true, false},
      {true, true, false},   {false, true, true},  {true, false, true},  {true, true, true},
  };
}

nlohmann::json MetricsReport::to_json() const {
  nlohmann::json doc;
  doc["schema_version"] = kMetricsSchemaVersion;
  doc["model"] = model;
  doc["accuracy"] = accuracy;
  doc["auc"] = auc;
  doc["c_lr"] = c_lr;
  doc["seed"] = seed;
  doc["variant"] = {{"sa", variant.sa}, {"ra", variant.ra}, {"sn", variant.sn}};
  doc["manifest_hash"] = manifest_hash;
  doc["train_labels"] = train_labels;
  doc["test_labels"] = test_labels;
  return doc;
}

MetricsReport MetricsReport::from_json(const nlohmann::json& doc) {
  try {
    if (doc.at("schema_version").get<int>() != kMetricsSchemaVersion) {
      throw DataError("unsupported metrics schema version");
    }
    MetricsReport r;
    r.model = doc.at("model").get<std::string>();
    r.accuracy = doc.at("accuracy").get<double>();
    r.auc = doc.at("auc").get<double>();
    r.c_lr = doc.at("c_lr").get<double>();
    r.seed = doc.at("seed").get<std::uint64_t>();
    r.variant.sa = doc.at("variant").at("sa").get<bool>();
    r.variant.ra = doc.at("variant").at("ra").get<bool>();
    r.variant.sn = doc.at("variant").at("sn").get<bool>();
    r.manifest_hash = doc.at("manifest_hash").get<std::string>();
    r.train_labels = doc.at("train_labels").get<std::string>();
    r.test_labels = doc.at("test_labels").get<std::string>();
    return r;
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("malformed metrics report: ") + e.what());
  }
}

MetricsReport evaluate_features(const Eigen::MatrixXd& train_x, std::span<const int> train_labels,
                                const Eigen::MatrixXd& val_x, std::span<const int> val_labels,
                                const Eigen::MatrixXd& test_x, std::span<const int> test_truth,
                                const EvalConfig& config) {
  config.validate();
  const auto grid = config.c_grid();
  const LogRegModel model =
      train_logreg(train_x, train_labels, val_x, val_labels, grid, config.logreg);
  const Eigen::VectorXd scores = model.decision(test_x);
  MetricsReport report;
  report.accuracy = accuracy(model.predict(test_x), test_truth);
  report.auc = auc(std::vector<double>(scores.data(), scores.data() + scores.size()), test_truth);
  report.c_lr = model.c;
  return report;
}

MetricsReport evaluate_model(const DenseNet& srl, const Dataset& train, const Dataset& validation,
                             const Dataset& test, const EvalConfig& config) {
  MetricsReport report = evaluate_features(embed(train, srl), mle_labels(train),
                                           embed(validation, srl), mle_labels(validation),
                                           embed(test, srl), truth_labels(test), config);
  return report;
}

MetricsReport majority_vote_baseline(const Dataset& train, const Dataset& validation,
                                     const Dataset& test, const EvalConfig& config) {
  MetricsReport report = evaluate_features(feature_matrix(train), mle_labels(train),
                                           feature_matrix(validation), mle_labels(validation),
                                           feature_matrix(test), truth_labels(test), config);
  report.model = "majority-vote";
  report.variant = {false, false, false};
  return report;
}

std::string AblationResult::to_csv() const {
  std::string out = "variant,use_sa,use_ra,use_sn,seeds,acc_mean,acc_std,auc_mean,auc_std\n";
  for (const auto& row : rows) {
    out += row.variant.name() + "," + (row.variant.sa ? "1" : "0") + "," +
           (row.variant.ra ? "1" : "0") + "," + (row.variant.sn ? "1" : "0") + "," +
           std::to_string(row.reports.size()) + "," + format_double(row.mean_accuracy) + "," +
           format_double(row.std_accuracy) + "," + format_double(row.mean_auc) + "," +
           format_double(row.std_auc) + "\n";
  }
  return out;
}

nlohmann::json AblationResult::to_json() const {
  nlohmann::json doc;
  doc["schema_version"] = kMetricsSchemaVersion;
  nlohmann::json items = nlohmann::json::array();
  for (const auto& row : rows) {
    nlohmann::json runs = nlohmann::json::array();
    for (const auto& r : row.reports) runs.push_back(r.to_json());
    items.push_back({{"variant", row.variant.name()},
                     {"accuracy", {{"mean", row.mean_accuracy}, {"std", row.std_accuracy}}},
                     {"auc", {{"mean", row.mean_auc}, {"std", row.std_auc}}},
                     {"runs", std::move(runs)}});
  }
  doc["rows"] = std::move(items);
  return doc;
}

AblationResult ablation_suite(const Dataset& train, const Dataset& validation, const Dataset& test,
                              const RunConfig& base, std::span<const std::uint64_t> seeds,
                              const EvalConfig& eval, const std::string& manifest_hash,
                              std::span<const VariantFlags> variants,
                              const AblationProgress& progress) {
  if (seeds.empty()) throw UsageError("seeds", "at least one seed is required");
  base.validate();
  eval.validate();
  const std::vector<VariantFlags> defaults = all_variants();
  if (variants.empty()) variants = defaults;

  AblationResult result;
  for (const auto& variant : variants) {
    AblationRow row;
    row.variant = variant;
    std::vector<double> accs;
    std::vector<double> aucs;
    for (std::uint64_t seed : seeds) {
      RunConfig cfg = base;
      cfg.seed = seed;
      cfg.use_sa = variant.sa;
      cfg.use_ra = variant.ra;
      cfg.use_sn = variant.sn;
      const TrainResult trained = neucrowd::train(train, &validation, cfg);
      MetricsReport report = evaluate_model(trained.srl, train, validation, test, eval);
      report.model = variant.name();
      report.seed = seed;
      report.variant = variant;
      report.manifest_hash = manifest_hash;
      if (progress) progress(report);
      accs.push_back(report.accuracy);
      aucs.push_back(report.auc);
      row.reports.push_back(std::move(report));
    }
    std::tie(row.mean_accuracy, row.std_accuracy) = mean_std(accs);
    std::tie(row.mean_auc, row.std_auc) = mean_std(aucs);
    result.rows.push_back(std::move(row));
  }
  return result;
}

}  // namespace neucrowd

#include "neucrowd_cli/cli.hpp"

#include <cstdio>
#include <filesystem>
#include <optional>
#include <utility>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "neucrowd/config.hpp"
#include "neucrowd/crowd_labels.hpp"
#include "neucrowd/dataset_io.hpp"
#include "neucrowd/datagen.hpp"
#include "neucrowd/errors.hpp"
#include "neucrowd/evaluation.hpp"
#include "neucrowd/io_util.hpp"
#include "neucrowd/parallel.hpp"
#include "neucrowd/sampler.hpp"
#include "neucrowd/trainer.hpp"

namespace neucrowd::cli {

namespace {

namespace fs = std::filesystem;

constexpr const char* kConfigSnapshot = "config.resolved";
constexpr const char* kSrlCheckpoint = "srl.ckpt.json";
constexpr const char* kSamplerCheckpoint = "sampler.ckpt.json";
constexpr const char* kHistoryFile = "history.jsonl";

class Log {
 public:
  Log(std::ostream& err, bool quiet) : err_(err), quiet_(quiet) {}

  void event(const std::string& name, nlohmann::json fields) const {
    if (quiet_) return;
    fields["event"] = name;
    err_ << fields.dump() << '\n';
  }

 private:
  std::ostream& err_;
  bool quiet_;
};

std::vector<std::pair<std::string, std::string>> parse_sets(const std::vector<std::string>& sets) {
  std::vector<std::pair<std::string, std::string>> out;
  for (const auto& s : sets) {
    const auto eq = s.find('=');
    if (eq == std::string::npos || eq == 0) {
      throw UsageError("set", "--set expects key=value, got '" + s + "'");
    }
    out.emplace_back(s.substr(0, eq), s.substr(eq + 1));
  }
  return out;
}

ResolvedConfig resolve(const std::string& config_path,
                       std::vector<std::pair<std::string, std::string>> overrides) {
  const fs::path path(config_path);
  ResolvedConfig cfg = resolve_config(config_path.empty() ? nullptr : &path, overrides);
  cfg.run.threads = default_thread_count();
  return cfg;
}

std::vector<std::string> split_list(const std::string& text) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (start <= text.size()) {
    const auto pos = text.find(',', start);
    const auto item = text.substr(start, pos == std::string::npos ? std::string::npos : pos - start);
    if (!item.empty()) out.push_back(item);
    if (pos == std::string::npos) break;
    start = pos + 1;
  }
  return out;
}

// "SA,RA,SN" names the components to switch off.
std::vector<std::pair<std::string, std::string>> ablate_overrides(const std::string& spec) {
  std::vector<std::pair<std::string, std::string>> out;
  for (const auto& item : split_list(spec)) {
    if (item == "SA") {
      out.emplace_back("use_sa", "false");
    } else if (item == "RA") {
      out.emplace_back("use_ra", "false");
    } else if (item == "SN") {
      out.emplace_back("use_sn", "false");
    } else {
      throw UsageError("ablate", "--ablate accepts SA, RA, SN; got '" + item + "'");
    }
  }
  return out;
}

const Dataset& require_split(const std::optional<Dataset>& split, const char* name) {
  if (!split) throw DataError(std::string("dataset has no ") + name + " split");
  return *split;
}

// All artifacts are staged in memory and written once the work succeeded.
void write_outputs(const fs::path& dir, const std::vector<std::pair<std::string, std::string>>& files) {
  fs::create_directories(dir);
  for (const auto& [name, body] : files) {
    const fs::path target = dir / name;
    if (target.has_parent_path()) fs::create_directories(target.parent_path());
    write_file_atomic(target, body);
  }
}

int cmd_generate(const std::string& out_dir, std::uint64_t seed, std::optional<int> d,
                 std::optional<int> features, const std::string& sizes,
                 const std::string& config_path, const std::vector<std::string>& sets,
                 const Log& log) {
  auto overrides = parse_sets(sets);
  overrides.emplace_back("data_seed", std::to_string(seed));
  if (d) overrides.emplace_back("num_workers", std::to_string(*d));
  if (features) overrides.emplace_back("n_features", std::to_string(*features));
  if (!sizes.empty()) {
    const auto parts = split_list(sizes);
    if (parts.size() != 3) throw UsageError("sizes", "--sizes expects train,validation,test");
    overrides.emplace_back("train_size", parts[0]);
    overrides.emplace_back("validation_size", parts[1]);
    overrides.emplace_back("test_size", parts[2]);
  }
  const ResolvedConfig cfg = resolve(config_path, overrides);

  const SynthDataset data = generate_synthetic(cfg.synth);
  const auto kappa = fleiss_kappa(data.splits.train);
  nlohmann::json stats;
  for (const Dataset* ds : {&data.splits.train, &data.splits.validation, &data.splits.test}) {
    stats[std::string(to_string(ds->split))] = {{"size", ds->size()},
                                                {"class_ratio", class_ratio(*ds)},
                                                {"fleiss_kappa", fleiss_kappa(*ds).value}};
  }
  fs::create_directories(out_dir);
  write_synthetic(data, cfg.synth, out_dir);
  write_outputs(out_dir, {{"stats.json", stats.dump(2) + "\n"},
                          {kConfigSnapshot, to_config_text(cfg)}});
  log.event("generate", {{"out", out_dir},
                         {"seed", seed},
                         {"train_kappa", kappa.value},
                         {"train_class_ratio", class_ratio(data.splits.train)}});
  return kExitOk;
}

int cmd_train(const std::string& data_dir, const std::string& config_path,
              const std::string& out_dir, const std::string& ablate, std::optional<int> n,
              std::optional<std::uint64_t> seed, std::optional<int> epochs,
              const std::vector<std::string>& sets, bool dump_safety, const Log& log) {
  auto overrides = parse_sets(sets);
  for (auto& kv : ablate_overrides(ablate)) overrides.push_back(std::move(kv));
  if (n) overrides.emplace_back("n", std::to_string(*n));
  if (seed) overrides.emplace_back("seed", std::to_string(*seed));
  if (epochs) overrides.emplace_back("epochs", std::to_string(*epochs));
  const ResolvedConfig cfg = resolve(config_path, overrides);

  const DatasetBundle bundle = load_dataset_dir(data_dir);
  const Dataset* validation = bundle.validation ? &*bundle.validation : nullptr;

  std::vector<std::pair<std::string, std::string>> safety_files;
  const auto on_epoch = [&](const EpochRecord& rec, const SafetyReport* safety) {
    log.event("epoch", rec.to_json(true));
    if (dump_safety && safety) {
      char name[64];
      std::snprintf(name, sizeof(name), "safety/epoch_%05d.json", rec.epoch);
      safety_files.emplace_back(name, safety->to_json().dump() + "\n");
    }
  };
  const TrainResult result = train(bundle.train, validation, cfg.run, on_epoch);

  auto files = std::move(safety_files);
  files.emplace_back(kSrlCheckpoint, network_to_json(result.srl).dump() + "\n");
  files.emplace_back(kSamplerCheckpoint, sampler_to_json(result.sampler).dump() + "\n");
  files.emplace_back(kHistoryFile, result.history.to_jsonl());
  files.emplace_back(kConfigSnapshot, to_config_text(cfg));
  write_outputs(out_dir, files);
  log.event("train_done", {{"out", out_dir},
                           {"epochs", result.history.epochs.size()},
                           {"best_epoch", result.history.best_epoch},
                           {"manifest_hash", bundle.manifest_hash}});
  return kExitOk;
}

int cmd_eval(const std::string& checkpoint, const std::string& data_dir,
             const std::string& out_path, const std::string& config_path,
             const std::vector<std::string>& sets, const Log& log) {
  // Without --config, the snapshot written next to the checkpoint supplies
  // seed, variant and evaluation settings.
  std::string effective_config = config_path;
  if (effective_config.empty()) {
    const fs::path sibling = fs::path(checkpoint).parent_path() / kConfigSnapshot;
    if (fs::exists(sibling)) effective_config = sibling.string();
  }
  const ResolvedConfig cfg = resolve(effective_config, parse_sets(sets));
  const DenseNet srl = load_network(checkpoint);
  const DatasetBundle bundle = load_dataset_dir(data_dir);

  MetricsReport report =
      evaluate_model(srl, bundle.train, require_split(bundle.validation, "validation"),
                     require_split(bundle.test, "test"), cfg.eval);
  report.variant = {cfg.run.use_sa, cfg.run.use_ra, cfg.run.use_sn};
  report.model = report.variant.name();
  report.seed = cfg.run.seed;
  report.manifest_hash = bundle.manifest_hash;

  const fs::path out(out_path);
  if (out.has_parent_path()) fs::create_directories(out.parent_path());
  write_file_atomic(out, report.to_json().dump(2) + "\n");
  log.event("eval", report.to_json());
  return kExitOk;
}

int cmd_ablate(const std::string& data_dir, const std::string& config_path,
               const std::string& seeds_text, const std::string& out_dir,
               const std::vector<std::string>& sets, bool baseline, const Log& log) {
  const ResolvedConfig cfg = resolve(config_path, parse_sets(sets));
  std::vector<std::uint64_t> seeds;
  for (const auto& s : split_list(seeds_text)) {
    try {
      const auto v = parse_int(s);
      if (v < 0) throw DataError("negative");
      seeds.push_back(static_cast<std::uint64_t>(v));
    } catch (const DataError&) {
      throw UsageError("seeds", "--seeds expects a comma list of nonnegative integers");
    }
  }
  if (seeds.empty()) throw UsageError("seeds", "--seeds needs at least one seed");

  const DatasetBundle bundle = load_dataset_dir(data_dir);
  const Dataset& validation = require_split(bundle.validation, "validation");
  const Dataset& test = require_split(bundle.test, "test");

  const AblationResult result = ablation_suite(
      bundle.train, validation, test, cfg.run, seeds, cfg.eval, bundle.manifest_hash, {},
      [&](const MetricsReport& r) { log.event("ablation_run", r.to_json()); });

  std::vector<std::pair<std::string, std::string>> files = {
      {"ablation.csv", result.to_csv()},
      {"ablation.json", result.to_json().dump(2) + "\n"},
      {kConfigSnapshot, to_config_text(cfg)},
  };
  if (baseline) {
    MetricsReport mv = majority_vote_baseline(bundle.train, validation, test, cfg.eval);
    mv.manifest_hash = bundle.manifest_hash;
    files.emplace_back("majority_vote.json", mv.to_json().dump(2) + "\n");
  }
  write_outputs(out_dir, files);
  log.event("ablate_done", {{"out", out_dir}, {"rows", result.rows.size()}});
  return kExitOk;
}

void print_error(std::ostream& err, const std::string& kind, const std::string& message,
                 const std::string& key = "") {
  nlohmann::json doc = {{"error", kind}, {"message", message}};
  if (!key.empty()) doc["key"] = key;
  err << doc.dump() << '\n';
}

}  // namespace

int run_subcommand(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"neucrowd: crowd-label representation learning"};
  app.require_subcommand(1);
  app.fallthrough();
  bool quiet = false;
  app.add_flag("-q,--quiet", quiet, "Suppress JSONL progress logs");

  std::string out_dir, data_dir, config_path, sizes, ablate, checkpoint, seeds_text;
  std::vector<std::string> sets;
  std::uint64_t gen_seed = 0;
  std::optional<int> d, features, n, epochs;
  std::optional<std::uint64_t> seed;
  bool dump_safety = false;
  bool baseline = false;

  auto* gen = app.add_subcommand("generate", "Generate the synthetic crowd dataset");
  gen->add_option("--out", out_dir, "Output directory")->required();
  gen->add_option("--seed", gen_seed, "Generation seed")->required();
  gen->add_option("--d", d, "Number of workers");
  gen->add_option("--features", features, "Number of features");
  gen->add_option("--sizes", sizes, "train,validation,test sizes");
  gen->add_option("--config", config_path, "Config file (key=value or JSON)");
  gen->add_option("--set", sets, "Config override key=value")->take_all();

  auto* trn = app.add_subcommand("train", "Train the embedding and sampling networks");
  trn->add_option("--data", data_dir, "Dataset directory")->required();
  trn->add_option("--config", config_path, "Config file (key=value or JSON)");
  trn->add_option("--out", out_dir, "Output directory")->required();
  trn->add_option("--ablate", ablate, "Components to disable: SA,RA,SN");
  trn->add_option("--n", n, "Tuplet size");
  trn->add_option("--seed", seed, "Training seed");
  trn->add_option("--epochs", epochs, "Maximum epochs");
  trn->add_option("--set", sets, "Config override key=value")->take_all();
  trn->add_flag("--dump-safety", dump_safety, "Write per-epoch safety reports");

  auto* evl = app.add_subcommand("eval", "Evaluate a trained embedding network");
  evl->add_option("--checkpoint", checkpoint, "SRL checkpoint file")->required();
  evl->add_option("--data", data_dir, "Dataset directory")->required();
  evl->add_option("--out", out_dir, "Metrics JSON path")->required();
  evl->add_option("--config", config_path, "Config file (key=value or JSON)");
  evl->add_option("--set", sets, "Config override key=value")->take_all();

  auto* abl = app.add_subcommand("ablate", "Run every component combination over seeds");
  abl->add_option("--data", data_dir, "Dataset directory")->required();
  abl->add_option("--config", config_path, "Config file (key=value or JSON)");
  abl->add_option("--seeds", seeds_text, "Comma-separated seeds")->required();
  abl->add_option("--out", out_dir, "Output directory")->required();
  abl->add_option("--set", sets, "Config override key=value")->take_all();
  abl->add_flag("--baseline", baseline, "Also fit the majority-vote baseline");

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    out << app.help();
    print_error(err, "usage", e.what());
    return kExitUsage;
  }

  const Log log(err, quiet);
  try {
    if (gen->parsed()) {
      return cmd_generate(out_dir, gen_seed, d, features, sizes, config_path, sets, log);
    }
    if (trn->parsed()) {
      return cmd_train(data_dir, config_path, out_dir, ablate, n, seed, epochs, sets, dump_safety,
                       log);
    }
    if (evl->parsed()) return cmd_eval(checkpoint, data_dir, out_dir, config_path, sets, log);
    return cmd_ablate(data_dir, config_path, seeds_text, out_dir, sets, baseline, log);
  } catch (const UsageError& e) {
    print_error(err, e.kind(), e.what(), e.key());
    return kExitUsage;
  } catch (const Error& e) {
    print_error(err, e.kind(), e.what());
    return kExitRuntime;
  } catch (const std::exception& e) {
    print_error(err, "internal", e.what());
    return kExitRuntime;
  }
}

}  // namespace neucrowd::cli

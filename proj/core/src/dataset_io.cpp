#include "neucrowd/dataset_io.hpp"

#include <sstream>
#include <string_view>
#include <vector>

#include "neucrowd/errors.hpp"
#include "neucrowd/io_util.hpp"

namespace neucrowd {

namespace {

constexpr int kManifestVersion = 1;

std::vector<std::string_view> split_fields(std::string_view line) {
  std::vector<std::string_view> fields;
  std::size_t start = 0;
  while (true) {
    const auto pos = line.find(',', start);
    if (pos == std::string_view::npos) {
      fields.push_back(line.substr(start));
      break;
    }
    fields.push_back(line.substr(start, pos - start));
    start = pos + 1;
  }
  return fields;
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

// Parses "<prefix><index>" headers; returns -1 when the prefix does not match.
long long column_index(std::string_view name, char prefix) {
  if (name.size() < 2 || name.front() != prefix) return -1;
  try {
    return parse_int(name.substr(1));
  } catch (const DataError&) {
    return -1;
  }
}

}  // namespace

std::string dataset_to_csv(const Dataset& dataset) {
  dataset.validate();
  bool any_truth = false;
  for (const auto& ex : dataset.examples) any_truth = any_truth || ex.truth.has_value();

  std::string out;
  for (int j = 0; j < dataset.num_features; ++j) {
    out += (j ? ",f" : "f") + std::to_string(j);
  }
  for (int j = 0; j < dataset.num_workers; ++j) {
    out += (dataset.num_features + j ? ",w" : "w") + std::to_string(j);
  }
  if (any_truth) out += ",truth";
  out += '\n';
  for (const auto& ex : dataset.examples) {
    for (int j = 0; j < dataset.num_features; ++j) {
      if (j) out += ',';
      out += format_double(ex.features[j]);
    }
    for (int j = 0; j < dataset.num_workers; ++j) {
      if (dataset.num_features + j) out += ',';
      out += static_cast<char>('0' + ex.crowd_labels[static_cast<std::size_t>(j)]);
    }
    if (any_truth) {
      out += ',';
      if (ex.truth) out += static_cast<char>('0' + *ex.truth);
    }
    out += '\n';
  }
  return out;
}

Dataset dataset_from_csv(const std::string& text, Split split) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line)) throw DataError("CSV is empty");
  const auto header = split_fields(line);

  std::vector<int> feature_cols;
  std::vector<int> worker_cols;
  int truth_col = -1;
  for (std::size_t c = 0; c < header.size(); ++c) {
    const auto name = trim(header[c]);
    if (name == "truth") {
      truth_col = static_cast<int>(c);
    } else if (const auto fi = column_index(name, 'f'); fi >= 0) {
      if (fi != static_cast<long long>(feature_cols.size())) {
        throw DataError("feature columns must be f0..f{p-1} in order; got " + std::string(name));
      }
      feature_cols.push_back(static_cast<int>(c));
    } else if (const auto wi = column_index(name, 'w'); wi >= 0) {
      if (wi != static_cast<long long>(worker_cols.size())) {
        throw DataError("worker columns must be w0..w{d-1} in order; got " + std::string(name));
      }
      worker_cols.push_back(static_cast<int>(c));
    } else {
      throw DataError("unknown CSV column '" + std::string(name) + "'");
    }
  }
  if (feature_cols.empty()) throw DataError("CSV has no feature columns");
  if (worker_cols.empty()) throw DataError("CSV has no worker columns");

  Dataset ds;
  ds.split = split;
  ds.num_features = static_cast<int>(feature_cols.size());
  ds.num_workers = static_cast<int>(worker_cols.size());
  std::size_t row = 1;
  while (std::getline(in, line)) {
    ++row;
    if (trim(line).empty()) continue;
    const auto fields = split_fields(line);
    if (fields.size() != header.size()) {
      throw DataError("CSV row " + std::to_string(row) + " has " + std::to_string(fields.size()) +
                      " fields, header has " + std::to_string(header.size()));
    }
    CrowdExample ex;
    ex.features.resize(ds.num_features);
    try {
      for (int j = 0; j < ds.num_features; ++j) {
        ex.features[j] = parse_double(fields[static_cast<std::size_t>(feature_cols[j])]);
      }
      ex.crowd_labels.reserve(worker_cols.size());
      for (int c : worker_cols) {
        const auto v = parse_int(fields[static_cast<std::size_t>(c)]);
        if (v != 0 && v != 1) throw DataError("crowd label must be 0 or 1");
        ex.crowd_labels.push_back(static_cast<std::uint8_t>(v));
      }
      if (truth_col >= 0) {
        const auto cell = trim(fields[static_cast<std::size_t>(truth_col)]);
        if (!cell.empty()) {
          const auto v = parse_int(cell);
          if (v != 0 && v != 1) throw DataError("truth must be 0, 1, or empty");
          ex.truth = static_cast<int>(v);
        }
      }
    } catch (const DataError& e) {
      throw DataError("CSV row " + std::to_string(row) + ": " + e.what());
    }
    ds.examples.push_back(std::move(ex));
  }
  return ds;
}

void write_dataset_csv(const Dataset& dataset, const std::filesystem::path& path) {
  write_file_atomic(path, dataset_to_csv(dataset));
}

Dataset read_dataset_csv(const std::filesystem::path& path, Split split) {
  try {
    return dataset_from_csv(read_file(path), split);
  } catch (const DataError& e) {
    throw DataError(path.string() + ": " + e.what());
  }
}

nlohmann::json DatasetManifest::to_json() const {
  nlohmann::json doc;
  doc["format"] = "neucrowd.dataset";
  doc["version"] = kManifestVersion;
  doc["num_features"] = num_features;
  doc["num_workers"] = num_workers;
  doc["splits"] = split_files;
  doc["seed"] = seed ? nlohmann::json(*seed) : nlohmann::json(nullptr);
  doc["evaluation_labels"] = evaluation_labels;
  doc["generator"] = generator.is_null() ? nlohmann::json::object() : generator;
  return doc;
}

DatasetManifest DatasetManifest::from_json(const nlohmann::json& doc) {
  try {
    if (doc.at("format").get<std::string>() != "neucrowd.dataset") {
      throw DataError("manifest has wrong format tag");
    }
    if (doc.at("version").get<int>() != kManifestVersion) {
      throw DataError("unsupported manifest version");
    }
    DatasetManifest m;
    m.num_features = doc.at("num_features").get<int>();
    m.num_workers = doc.at("num_workers").get<int>();
    m.split_files = doc.at("splits").get<std::map<std::string, std::string>>();
    if (doc.contains("seed") && !doc["seed"].is_null()) m.seed = doc["seed"].get<std::uint64_t>();
    if (doc.contains("evaluation_labels")) {
      m.evaluation_labels = doc["evaluation_labels"].get<std::string>();
    }
    if (doc.contains("generator")) m.generator = doc["generator"];
    return m;
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("malformed manifest: ") + e.what());
  }
}

void write_manifest(const DatasetManifest& manifest, const std::filesystem::path& dir) {
  write_file_atomic(dir / kManifestFile, manifest.to_json().dump(2) + "\n");
}

DatasetManifest read_manifest(const std::filesystem::path& dir) {
  const auto text = read_file(dir / kManifestFile);
  try {
    return DatasetManifest::from_json(nlohmann::json::parse(text));
  } catch (const nlohmann::json::exception& e) {
    throw DataError((dir / kManifestFile).string() + ": " + e.what());
  }
}

DatasetBundle load_dataset_dir(const std::filesystem::path& dir) {
  if (!std::filesystem::is_directory(dir)) {
    throw DataError("dataset directory does not exist: " + dir.string());
  }
  DatasetBundle bundle;
  const auto text = read_file(dir / kManifestFile);
  bundle.manifest_hash = fnv1a_hex(text);
  try {
    bundle.manifest = DatasetManifest::from_json(nlohmann::json::parse(text));
  } catch (const nlohmann::json::exception& e) {
    throw DataError((dir / kManifestFile).string() + ": " + e.what());
  }
  const auto& files = bundle.manifest.split_files;
  auto load = [&](Split split) -> std::optional<Dataset> {
    const auto it = files.find(std::string(to_string(split)));
    if (it == files.end()) return std::nullopt;
    Dataset ds = read_dataset_csv(dir / it->second, split);
    if (ds.num_features != bundle.manifest.num_features ||
        ds.num_workers != bundle.manifest.num_workers) {
      throw DataError(it->second + ": shape disagrees with manifest (p=" +
                      std::to_string(ds.num_features) + ", d=" + std::to_string(ds.num_workers) +
                      ")");
    }
    return ds;
  };
  auto train = load(Split::kTrain);
  if (!train) throw DataError("manifest lists no train split");
  bundle.train = std::move(*train);
  bundle.validation = load(Split::kValidation);
  bundle.test = load(Split::kTest);
  return bundle;
}

}  // namespace neucrowd

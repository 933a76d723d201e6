#ifndef NEUCROWD_DATASET_IO_HPP_
#define NEUCROWD_DATASET_IO_HPP_

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>

#include <nlohmann/json.hpp>

#include "neucrowd/crowd_labels.hpp"

namespace neucrowd {

// CSV layout: header `f0,..,f{p-1},w0,..,w{d-1},truth`; the truth column is
// optional and its cells may be empty.
std::string dataset_to_csv(const Dataset& dataset);
Dataset dataset_from_csv(const std::string& text, Split split);
void write_dataset_csv(const Dataset& dataset, const std::filesystem::path& path);
Dataset read_dataset_csv(const std::filesystem::path& path, Split split);

// Describes a generated or imported dataset directory.
struct DatasetManifest {
  int num_features = 0;
  int num_workers = 0;
  std::map<std::string, std::string> split_files;  // split name -> file name
  std::optional<std::uint64_t> seed;
  std::string evaluation_labels = "truth";
  nlohmann::json generator;  // free-form generation parameters

  nlohmann::json to_json() const;
  static DatasetManifest from_json(const nlohmann::json& doc);
};

inline constexpr const char* kManifestFile = "manifest.json";

void write_manifest(const DatasetManifest& manifest, const std::filesystem::path& dir);
DatasetManifest read_manifest(const std::filesystem::path& dir);

struct DatasetBundle {
  DatasetManifest manifest;
  std::string manifest_hash;  // FNV-1a of the manifest bytes
  Dataset train;
  std::optional<Dataset> validation;
  std::optional<Dataset> test;
};

// Loads every split listed in the manifest and checks p/d consistency.
DatasetBundle load_dataset_dir(const std::filesystem::path& dir);

}  // namespace neucrowd

#endif  // NEUCROWD_DATASET_IO_HPP_

#include <filesystem>
#include <fstream>

#include <gtest/gtest.h>

#include "neucrowd/dataset_io.hpp"
#include "neucrowd/errors.hpp"
#include "neucrowd/io_util.hpp"
#include "test_util.hpp"

namespace neucrowd {
namespace {

TEST(DatasetCsv, RoundTripIsExact) {
  Dataset ds = testing::toy_dataset(9, 4, 3, 5);
  ds.examples[3].truth.reset();
  const Dataset back = dataset_from_csv(dataset_to_csv(ds), Split::kTrain);
  ASSERT_EQ(back.size(), ds.size());
  EXPECT_EQ(back.num_features, 4);
  EXPECT_EQ(back.num_workers, 3);
  for (std::size_t i = 0; i < ds.size(); ++i) {
    EXPECT_EQ(back.examples[i].features, ds.examples[i].features);
    EXPECT_EQ(back.examples[i].crowd_labels, ds.examples[i].crowd_labels);
    EXPECT_EQ(back.examples[i].truth, ds.examples[i].truth);
  }
}

TEST(DatasetCsv, HeaderLayout) {
  const Dataset ds = testing::toy_dataset(2, 2, 3, 5);
  const std::string csv = dataset_to_csv(ds);
  EXPECT_EQ(csv.substr(0, csv.find('\n')), "f0,f1,w0,w1,w2,truth");
}

TEST(DatasetCsv, TruthColumnOptional) {
  const Dataset ds = dataset_from_csv("f0,w0,w1\n0.5,1,0\n-1,0,0\n", Split::kTest);
  ASSERT_EQ(ds.size(), 2u);
  EXPECT_FALSE(ds.examples[0].truth.has_value());
  EXPECT_DOUBLE_EQ(ds.examples[1].features[0], -1.0);
  EXPECT_EQ(ds.split, Split::kTest);
}

TEST(DatasetCsv, RejectsMalformedInput) {
  EXPECT_THROW(dataset_from_csv("", Split::kTrain), DataError);
  EXPECT_THROW(dataset_from_csv("f0,w0\n1,2\n", Split::kTrain), DataError);
  EXPECT_THROW(dataset_from_csv("f0,w0\n1\n", Split::kTrain), DataError);
  EXPECT_THROW(dataset_from_csv("f0,w0\nabc,1\n", Split::kTrain), DataError);
  EXPECT_THROW(dataset_from_csv("f1,w0\n1,1\n", Split::kTrain), DataError);
  EXPECT_THROW(dataset_from_csv("f0,x0\n1,1\n", Split::kTrain), DataError);
  EXPECT_THROW(dataset_from_csv("w0\n1\n", Split::kTrain), DataError);
  EXPECT_THROW(dataset_from_csv("f0,w0,truth\n1,1,3\n", Split::kTrain), DataError);
}

TEST(Manifest, RoundTrip) {
  DatasetManifest m;
  m.num_features = 4;
  m.num_workers = 3;
  m.split_files = {{"train", "train.csv"}};
  m.seed = 42;
  m.generator = {{"kind", "toy"}};
  const DatasetManifest back = DatasetManifest::from_json(m.to_json());
  EXPECT_EQ(back.num_features, 4);
  EXPECT_EQ(back.num_workers, 3);
  EXPECT_EQ(back.split_files, m.split_files);
  EXPECT_EQ(back.seed, m.seed);
  EXPECT_EQ(back.generator, m.generator);
  EXPECT_EQ(back.evaluation_labels, "truth");
}

TEST(DatasetDir, LoadsSplitsAndHashesManifest) {
  testing::TempDir dir("io");
  const Dataset train = testing::toy_dataset(6, 2, 3, 1);
  const Dataset test = testing::toy_dataset(4, 2, 3, 2, Split::kTest);
  write_dataset_csv(train, dir.path() / "train.csv");
  write_dataset_csv(test, dir.path() / "test.csv");
  DatasetManifest m;
  m.num_features = 2;
  m.num_workers = 3;
  m.split_files = {{"train", "train.csv"}, {"test", "test.csv"}};
  write_manifest(m, dir.path());

  const DatasetBundle bundle = load_dataset_dir(dir.path());
  EXPECT_EQ(bundle.train.size(), 6u);
  EXPECT_FALSE(bundle.validation.has_value());
  ASSERT_TRUE(bundle.test.has_value());
  EXPECT_EQ(bundle.test->split, Split::kTest);
  EXPECT_EQ(bundle.manifest_hash, fnv1a_hex(read_file(dir.path() / kManifestFile)));
  EXPECT_EQ(bundle.manifest_hash.size(), 16u);
}

TEST(DatasetDir, ShapeDisagreementIsDataError) {
  testing::TempDir dir("io");
  write_dataset_csv(testing::toy_dataset(6, 2, 3, 1), dir.path() / "train.csv");
  DatasetManifest m;
  m.num_features = 5;
  m.num_workers = 3;
  m.split_files = {{"train", "train.csv"}};
  write_manifest(m, dir.path());
  EXPECT_THROW(load_dataset_dir(dir.path()), DataError);
}

TEST(DatasetDir, MissingDirectory) {
  EXPECT_THROW(load_dataset_dir("/nonexistent/neucrowd/data"), DataError);
}

TEST(IoUtil, AtomicWriteLeavesNoTemp) {
  testing::TempDir dir("io");
  write_file_atomic(dir.path() / "a.txt", "hello");
  EXPECT_EQ(read_file(dir.path() / "a.txt"), "hello");
  int files = 0;
  for ([[maybe_unused]] const auto& e : std::filesystem::directory_iterator(dir.path())) ++files;
  EXPECT_EQ(files, 1);
}

TEST(IoUtil, DoubleFormattingRoundTrips) {
  for (double v : {0.1, -1e-300, 1.0 / 3.0, 6.02214076e23, 0.0}) {
    EXPECT_EQ(parse_double(format_double(v)), v);
  }
  EXPECT_THROW(parse_double("1.5x"), DataError);
  EXPECT_THROW(parse_int(""), DataError);
  EXPECT_EQ(parse_int(" 42 "), 42);
}

TEST(IoUtil, SeedDerivationSeparatesStreams) {
  EXPECT_EQ(derive_seed(1, 2), derive_seed(1, 2));
  EXPECT_NE(derive_seed(1, 2), derive_seed(1, 3));
  EXPECT_NE(derive_seed(1, 2), derive_seed(2, 2));
}

}  // namespace
}  // namespace neucrowd

#include <doctest.h>

#include <filesystem>

#include "efcil/dataset.hpp"
#include "efcil/error.hpp"
#include "oracles.hpp"

using namespace efcil;

namespace {

struct Rows {
  std::vector<std::vector<double>> train, test;
  std::vector<int> train_labels, test_labels;
};

Rows split_rows(const FeatureDataset& ds) {
  Rows out;
  for (std::size_t i = 0; i < ds.size(); ++i) {
    std::vector<double> row(ds.dim());
    for (std::size_t j = 0; j < ds.dim(); ++j) row[j] = ds.features(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
    if (ds.splits[i] == Split::Train) {
      out.train.push_back(row);
      out.train_labels.push_back(ds.labels[i]);
    } else {
      out.test.push_back(row);
      out.test_labels.push_back(ds.labels[i]);
    }
  }
  return out;
}

double oracle_lda_accuracy(const FeatureDataset& ds) {
  const Rows r = split_rows(ds);
  const auto lda = oracle::batch_lda(r.train, r.train_labels, 1e-4L);
  const auto pred = lda.predict(r.test);
  std::size_t hits = 0;
  for (std::size_t i = 0; i < pred.size(); ++i) hits += pred[i] == r.test_labels[i] ? 1 : 0;
  return static_cast<double>(hits) / static_cast<double>(pred.size());
}

FeatureDataset counted(const std::vector<int>& train_counts, int test_per_class) {
  FeatureDataset ds;
  ds.name = "counts";
  std::size_t rows = 0;
  for (const int c : train_counts) rows += static_cast<std::size_t>(c + test_per_class);
  ds.features = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(rows), 1);
  for (std::size_t c = 0; c < train_counts.size(); ++c) {
    for (int i = 0; i < train_counts[c] + test_per_class; ++i) {
      ds.labels.push_back(static_cast<ClassId>(c));
      ds.splits.push_back(i < train_counts[c] ? Split::Train : Split::Test);
    }
  }
  return ds;
}

}  // namespace

TEST_CASE("well separated synthetic classes are perfectly separable by batch LDA") {
  SynthSpec spec;
  spec.n_classes = 4;
  spec.dim = 8;
  spec.separation = 10.0;
  spec.n_train = 50;
  spec.n_test = 50;
  spec.seed = 2024;
  const FeatureDataset ds = synth_features(spec);
  validate(ds);
  CHECK(ds.dim() == 8);
  CHECK(ds.classes().size() == 4);
  CHECK(oracle_lda_accuracy(ds) == 1.0);
}

TEST_CASE("zero separation leaves accuracy near chance") {
  SynthSpec spec;
  spec.n_classes = 4;
  spec.dim = 8;
  spec.separation = 0.0;
  spec.n_train = 200;
  spec.n_test = 500;
  spec.seed = 77;
  const double acc = oracle_lda_accuracy(synth_features(spec));
  CHECK(acc > 0.20);
  CHECK(acc < 0.30);
}

TEST_CASE("synthetic class means sit at the requested pairwise distance") {
  SynthSpec spec;
  spec.n_classes = 5;
  spec.dim = 12;
  spec.separation = 6.0;
  spec.n_train = 4000;
  spec.n_test = 1;
  spec.seed = 5;
  const Rows r = split_rows(synth_features(spec));
  const auto lda = oracle::batch_lda(r.train, r.train_labels, 0.0L);
  for (std::size_t a = 0; a < lda.means.size(); ++a) {
    for (std::size_t b = a + 1; b < lda.means.size(); ++b) {
      long double d2 = 0.0L;
      for (std::size_t j = 0; j < lda.means[a].size(); ++j) d2 += std::pow(lda.means[a][j] - lda.means[b][j], 2);
      CHECK(static_cast<double>(std::sqrt(d2)) == doctest::Approx(6.0).epsilon(0.03));
    }
  }
}

TEST_CASE("synthesis is deterministic in the seed") {
  SynthSpec spec;
  spec.seed = 99;
  spec.anisotropy = 0.5;
  const std::string a = format_features(synth_features(spec));
  const std::string b = format_features(synth_features(spec));
  CHECK(a == b);
  spec.seed = 100;
  CHECK(format_features(synth_features(spec)) != a);
}

TEST_CASE("more classes than dimensions still gives a valid dataset") {
  SynthSpec spec;
  spec.n_classes = 40;
  spec.dim = 8;
  const FeatureDataset ds = synth_features(spec);
  validate(ds);
  CHECK(ds.metadata.at("mean_placement") == "random");
}

TEST_CASE("feature file parsing") {
  const FeatureDataset ds = parse_features("label,split,f0,f1\n0,train,1.5,2\n0,test,1,-1\n1,train,0,0\n1,test,2,2\n", "tiny");
  CHECK(ds.dim() == 2);
  CHECK(ds.size() == 4);
  CHECK(ds.features(0, 0) == 1.5);
  CHECK(ds.splits[1] == Split::Test);
}

TEST_CASE("non-finite feature values are reported with their line") {
  try {
    parse_features("label,split,f0,f1\n0,train,1,2\n1,test,3,nan\n", "bad");
    FAIL("expected a parse error");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::Parse);
    CHECK(std::string(e.what()).find("line 3") != std::string::npos);
  }
}

TEST_CASE("feature files round-trip exactly") {
  SynthSpec spec;
  spec.n_classes = 6;
  spec.dim = 5;
  spec.seed = 17;
  spec.anisotropy = 1.0;
  FeatureDataset ds = synth_features(spec);
  const auto path = std::filesystem::temp_directory_path() / "efcil_roundtrip" / "roundtrip.csv";
  save_features(ds, path);
  const FeatureDataset back = load_features(path);
  CHECK(back.features == ds.features);
  CHECK(back.labels == ds.labels);
  CHECK(back.splits == ds.splits);
  CHECK(back.name == "roundtrip");
  std::filesystem::remove_all(path.parent_path());
}

TEST_CASE("balanced counts give zero spread: 100 classes of 250 train and 50 test") {
  const DatasetStats s = dataset_stats(counted(std::vector<int>(100, 250), 50));
  CHECK(s.n_classes == 100);
  CHECK(s.n_mean == 250.0);
  CHECK(s.mu_test == 50.0);
  CHECK(s.sigma_train == 0.0);
  CHECK(s.sigma_test == 0.0);
}

TEST_CASE("dataset statistics on small hand-made counts") {
  const DatasetStats one = dataset_stats(counted({5}, 1));
  CHECK(one.n_mean == 5.0);
  CHECK(one.sigma_train == 0.0);
  const DatasetStats two = dataset_stats(counted({10, 20}, 1));
  CHECK(two.n_mean == 15.0);
  CHECK(two.sigma_train == 5.0);
  CHECK_FALSE(two.small);
  CHECK(two.width == 0.0);
}

TEST_CASE("small and width come from metadata only") {
  FeatureDataset ds = counted({3, 3}, 1);
  ds.metadata["small"] = "1";
  ds.metadata["width"] = "32";
  const DatasetStats s = dataset_stats(ds);
  CHECK(s.small);
  CHECK(s.width == 32.0);
}

#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace efcil {

using ClassId = std::int32_t;

enum class Split : std::uint8_t { Train, Test };

/// Labelled feature vectors standing in for frozen backbone embeddings.
///
/// One row of `features` per sample; `labels` and `splits` are aligned with
/// the rows. `name` is the level of the Data factor. `metadata` carries
/// generation details and caller-supplied descriptors ("small", "width").
struct FeatureDataset {
  std::string name;
  Eigen::MatrixXd features;
  std::vector<ClassId> labels;
  std::vector<Split> splits;
  std::map<std::string, std::string> metadata;

  std::size_t size() const { return labels.size(); }
  std::size_t dim() const { return static_cast<std::size_t>(features.cols()); }

  /// Sorted distinct class ids.
  std::vector<ClassId> classes() const;
};

/// Throws Error(InvalidArgument) unless the dataset satisfies its invariants:
/// aligned columns, dim >= 1, finite features, nonnegative labels, and every
/// class present in both splits.
void validate(const FeatureDataset& ds);

bool operator==(const FeatureDataset& a, const FeatureDataset& b);

struct SynthSpec {
  std::string name = "synthetic";
  int n_classes = 10;
  int dim = 16;
  int n_train = 30;
  int n_test = 10;
  /// Distance between any two class means, in within-class std units.
  double separation = 3.0;
  std::string strategy_tag;
  std::uint64_t seed = 0;
  /// 0 keeps the within-class covariance at identity. Otherwise per-axis
  /// standard deviations are drawn log-uniformly in [e^-a, e^a].
  double anisotropy = 0.0;
};

/// Gaussian class clusters with pairwise mean distance `separation`.
///
/// Means sit on a random orthonormal frame scaled by separation/sqrt(2) when
/// n_classes <= dim. Otherwise they are random unit directions scaled the
/// same way, and metadata["mean_placement"] records "random" instead of
/// "orthonormal". Samples are emitted class by class, train rows first.
FeatureDataset synth_features(const SynthSpec& spec);

/// Reads the canonical feature CSV (`label,split,f0,...,f{d-1}`). The dataset
/// name is the file stem. Errors carry the offending line number.
FeatureDataset load_features(const std::filesystem::path& path);
FeatureDataset parse_features(const std::string& text, const std::string& name);

/// Writes the canonical feature CSV with shortest round-trip number formatting.
void save_features(const FeatureDataset& ds, const std::filesystem::path& path);
std::string format_features(const FeatureDataset& ds);

struct DatasetStats {
  int n_classes = 0;
  double n_mean = 0.0;  // mean train samples per class
  double sigma_train = 0.0;
  double mu_test = 0.0;
  double sigma_test = 0.0;
  bool small = false;
  double width = 0.0;
};

/// Per-class count summary (population standard deviation). `small` and
/// `width` are copied from metadata when present and never inferred.
DatasetStats dataset_stats(const FeatureDataset& ds);

}  // namespace efcil

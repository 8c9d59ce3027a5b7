#include "efcil/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>

#include "efcil/error.hpp"
#include "efcil/random.hpp"
#include "efcil/text.hpp"

namespace efcil {

std::vector<ClassId> FeatureDataset::classes() const {
  std::vector<ClassId> out(labels.begin(), labels.end());
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

void validate(const FeatureDataset& ds) {
  const auto n = ds.size();
  if (ds.splits.size() != n || static_cast<std::size_t>(ds.features.rows()) != n) {
    fail(ErrorCode::InvalidArgument, "dataset '" + ds.name + "': features, labels and splits differ in length");
  }
  if (ds.dim() < 1) fail(ErrorCode::InvalidArgument, "dataset '" + ds.name + "': dim must be >= 1");
  if (n == 0) fail(ErrorCode::InvalidArgument, "dataset '" + ds.name + "' is empty");
  if (!ds.features.allFinite()) fail(ErrorCode::InvalidArgument, "dataset '" + ds.name + "' has non-finite features");

  std::map<ClassId, std::pair<int, int>> counts;
  for (std::size_t i = 0; i < n; ++i) {
    if (ds.labels[i] < 0) fail(ErrorCode::InvalidArgument, "dataset '" + ds.name + "' has a negative label");
    auto& c = counts[ds.labels[i]];
    (ds.splits[i] == Split::Train ? c.first : c.second) += 1;
  }
  for (const auto& [label, c] : counts) {
    if (c.first == 0 || c.second == 0) {
      fail(ErrorCode::InvalidArgument, "dataset '" + ds.name + "': class " + std::to_string(label) + " has no " +
                                           (c.first == 0 ? "train" : "test") + " samples");
    }
  }
}

bool operator==(const FeatureDataset& a, const FeatureDataset& b) {
  return a.name == b.name && a.labels == b.labels && a.splits == b.splits &&
         a.features.rows() == b.features.rows() && a.features.cols() == b.features.cols() &&
         a.features == b.features;
}

namespace {

// Gram-Schmidt over Gaussian draws; redraws a vector that collapses.
Eigen::MatrixXd random_orthonormal_rows(int count, int dim, Rng& rng) {
  Eigen::MatrixXd frame(count, dim);
  for (int r = 0; r < count; ++r) {
    while (true) {
      Eigen::VectorXd v(dim);
      for (int j = 0; j < dim; ++j) v[j] = rng.normal();
      for (int q = 0; q < r; ++q) v -= frame.row(q).dot(v) * frame.row(q).transpose();
      const double norm = v.norm();
      if (norm > 1e-8) {
        frame.row(r) = v / norm;
        break;
      }
    }
  }
  return frame;
}

Eigen::MatrixXd random_unit_rows(int count, int dim, Rng& rng) {
  Eigen::MatrixXd rows(count, dim);
  for (int r = 0; r < count; ++r) {
    Eigen::VectorXd v(dim);
    do {
      for (int j = 0; j < dim; ++j) v[j] = rng.normal();
    } while (v.norm() < 1e-8);
    rows.row(r) = v / v.norm();
  }
  return rows;
}

}  // namespace

FeatureDataset synth_features(const SynthSpec& spec) {
  if (spec.dim < 1) fail(ErrorCode::InvalidArgument, "synth: dim must be >= 1");
  if (spec.n_classes < 2) fail(ErrorCode::InvalidArgument, "synth: n_classes must be >= 2");
  if (spec.n_train < 1 || spec.n_test < 1) fail(ErrorCode::InvalidArgument, "synth: per-class counts must be >= 1");
  if (!(spec.separation >= 0.0) || !std::isfinite(spec.separation)) {
    fail(ErrorCode::InvalidArgument, "synth: separation must be a finite nonnegative number");
  }
  if (!(spec.anisotropy >= 0.0)) fail(ErrorCode::InvalidArgument, "synth: anisotropy must be >= 0");

  Rng rng(spec.seed);
  const bool orthonormal = spec.n_classes <= spec.dim;
  const Eigen::MatrixXd directions = orthonormal ? random_orthonormal_rows(spec.n_classes, spec.dim, rng)
                                                 : random_unit_rows(spec.n_classes, spec.dim, rng);
  // |s e_i - s e_j| = s sqrt(2) for orthonormal e, so scale by separation / sqrt(2).
  const Eigen::MatrixXd means = directions * (spec.separation / std::sqrt(2.0));

  Eigen::VectorXd axis_std = Eigen::VectorXd::Ones(spec.dim);
  if (spec.anisotropy > 0.0) {
    for (int j = 0; j < spec.dim; ++j) axis_std[j] = std::exp(spec.anisotropy * (2.0 * rng.uniform() - 1.0));
  }

  const int per_class = spec.n_train + spec.n_test;
  FeatureDataset ds;
  ds.name = spec.name;
  ds.features.resize(static_cast<Eigen::Index>(spec.n_classes) * per_class, spec.dim);
  ds.labels.reserve(static_cast<std::size_t>(ds.features.rows()));
  ds.splits.reserve(static_cast<std::size_t>(ds.features.rows()));
  Eigen::Index row = 0;
  for (int c = 0; c < spec.n_classes; ++c) {
    for (int s = 0; s < per_class; ++s, ++row) {
      for (int j = 0; j < spec.dim; ++j) ds.features(row, j) = means(c, j) + axis_std[j] * rng.normal();
      ds.labels.push_back(c);
      ds.splits.push_back(s < spec.n_train ? Split::Train : Split::Test);
    }
  }
  ds.metadata["generator"] = "gaussian-clusters";
  ds.metadata["mean_placement"] = orthonormal ? "orthonormal" : "random";
  ds.metadata["separation"] = format_double(spec.separation);
  ds.metadata["seed"] = std::to_string(spec.seed);
  ds.metadata["anisotropy"] = format_double(spec.anisotropy);
  if (!spec.strategy_tag.empty()) ds.metadata["strategy"] = spec.strategy_tag;
  return ds;
}

std::string format_features(const FeatureDataset& ds) {
  std::string out = "label,split";
  for (std::size_t j = 0; j < ds.dim(); ++j) out += ",f" + std::to_string(j);
  out += '\n';
  for (std::size_t i = 0; i < ds.size(); ++i) {
    out += std::to_string(ds.labels[i]);
    out += ds.splits[i] == Split::Train ? ",train" : ",test";
    for (std::size_t j = 0; j < ds.dim(); ++j) {
      out += ',';
      out += format_double(ds.features(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)));
    }
    out += '\n';
  }
  return out;
}

void save_features(const FeatureDataset& ds, const std::filesystem::path& path) {
  validate(ds);
  write_text_file(path, format_features(ds));
}

FeatureDataset parse_features(const std::string& text, const std::string& name) {
  auto line_error = [&](std::size_t line_no, const std::string& msg) {
    fail(ErrorCode::Parse, name + ": line " + std::to_string(line_no) + ": " + msg);
  };

  std::vector<std::string_view> lines;
  {
    std::string_view rest(text);
    while (!rest.empty()) {
      const auto pos = rest.find('\n');
      std::string_view line = rest.substr(0, pos);
      if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
      lines.push_back(line);
      if (pos == std::string_view::npos) break;
      rest.remove_prefix(pos + 1);
    }
  }
  if (lines.empty() || lines.front().empty()) fail(ErrorCode::Parse, name + ": missing header line");

  const auto header = split_fields(lines.front(), ',');
  if (header.size() < 3 || trim(header[0]) != "label" || trim(header[1]) != "split") {
    line_error(1, "header must be 'label,split,f0,...'");
  }
  const std::size_t dim = header.size() - 2;
  for (std::size_t j = 0; j < dim; ++j) {
    if (trim(header[j + 2]) != "f" + std::to_string(j)) line_error(1, "expected column 'f" + std::to_string(j) + "'");
  }

  std::vector<double> values;
  FeatureDataset ds;
  ds.name = name;
  for (std::size_t li = 1; li < lines.size(); ++li) {
    const std::size_t line_no = li + 1;
    if (trim(lines[li]).empty()) continue;
    const auto fields = split_fields(lines[li], ',');
    if (fields.size() != dim + 2) {
      line_error(line_no, "expected " + std::to_string(dim + 2) + " fields, found " + std::to_string(fields.size()));
    }
    long long label = 0;
    if (!parse_int64(fields[0], label) || label < 0 || label > INT32_MAX) {
      line_error(line_no, "label must be a nonnegative integer");
    }
    const auto split = trim(fields[1]);
    if (split != "train" && split != "test") line_error(line_no, "split must be 'train' or 'test'");
    for (std::size_t j = 0; j < dim; ++j) {
      double v = 0.0;
      if (!parse_double(fields[j + 2], v)) line_error(line_no, "column f" + std::to_string(j) + " is not a number");
      if (!std::isfinite(v)) line_error(line_no, "non-finite value in column f" + std::to_string(j));
      values.push_back(v);
    }
    ds.labels.push_back(static_cast<ClassId>(label));
    ds.splits.push_back(split == "train" ? Split::Train : Split::Test);
  }
  const auto n = static_cast<Eigen::Index>(ds.labels.size());
  ds.features = Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>(
      values.data(), n, static_cast<Eigen::Index>(dim));
  if (n == 0) fail(ErrorCode::Parse, name + ": no samples");
  try {
    validate(ds);
  } catch (const Error& e) {
    fail(ErrorCode::Parse, e.what());
  }
  return ds;
}

FeatureDataset load_features(const std::filesystem::path& path) {
  return parse_features(read_text_file(path), path.stem().string());
}

namespace {

std::pair<double, double> mean_and_population_std(const std::vector<double>& xs) {
  double mean = 0.0;
  for (const double x : xs) mean += x;
  mean /= static_cast<double>(xs.size());
  double var = 0.0;
  for (const double x : xs) var += (x - mean) * (x - mean);
  var /= static_cast<double>(xs.size());
  return {mean, std::sqrt(var)};
}

}  // namespace

DatasetStats dataset_stats(const FeatureDataset& ds) {
  if (ds.size() == 0) fail(ErrorCode::InvalidArgument, "dataset_stats: empty dataset");
  std::map<ClassId, std::pair<double, double>> counts;
  for (std::size_t i = 0; i < ds.size(); ++i) {
    auto& c = counts[ds.labels[i]];
    (ds.splits[i] == Split::Train ? c.first : c.second) += 1.0;
  }
  std::vector<double> train, test;
  for (const auto& [label, c] : counts) {
    train.push_back(c.first);
    test.push_back(c.second);
  }
  DatasetStats stats;
  stats.n_classes = static_cast<int>(counts.size());
  std::tie(stats.n_mean, stats.sigma_train) = mean_and_population_std(train);
  std::tie(stats.mu_test, stats.sigma_test) = mean_and_population_std(test);
  if (auto it = ds.metadata.find("small"); it != ds.metadata.end()) {
    stats.small = it->second == "1" || it->second == "true";
  }
  if (auto it = ds.metadata.find("width"); it != ds.metadata.end()) {
    double w = 0.0;
    if (parse_double(it->second, w)) stats.width = w;
  }
  return stats;
}

}  // namespace efcil

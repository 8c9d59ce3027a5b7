#include "efcil/learners.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include "efcil/error.hpp"
#include "efcil/text.hpp"
#include "learner_util.hpp"

namespace efcil {

std::string to_string(LearnerKind kind) {
  switch (kind) {
    case LearnerKind::Dslda: return "dslda";
    case LearnerKind::Fetril: return "fetril";
    case LearnerKind::Bsil: return "bsil";
    case LearnerKind::Ncm: return "ncm";
  }
  return "unknown";
}

LearnerKind parse_learner_kind(const std::string& text) {
  if (text == "dslda") return LearnerKind::Dslda;
  if (text == "fetril") return LearnerKind::Fetril;
  if (text == "bsil") return LearnerKind::Bsil;
  if (text == "ncm") return LearnerKind::Ncm;
  fail(ErrorCode::InvalidArgument, "unknown learner '" + text + "' (expected dslda, fetril, bsil or ncm)");
}

namespace {

void require(bool ok, const std::string& what, double value) {
  if (!ok) fail(ErrorCode::InvalidArgument, "invalid hyperparameter " + what + " = " + format_double(value));
}

bool finite_positive(double v) { return std::isfinite(v) && v > 0.0; }

}  // namespace

void validate(const LearnerParams& params, LearnerKind kind) {
  switch (kind) {
    case LearnerKind::Dslda:
      require(std::isfinite(params.dslda.shrinkage) && params.dslda.shrinkage >= 0.0 && params.dslda.shrinkage <= 1.0,
              "dslda.shrinkage", params.dslda.shrinkage);
      break;
    case LearnerKind::Fetril:
      require(finite_positive(params.fetril.learning_rate), "fetril.learning_rate", params.fetril.learning_rate);
      require(params.fetril.epochs >= 1, "fetril.epochs", params.fetril.epochs);
      require(std::isfinite(params.fetril.weight_decay) && params.fetril.weight_decay >= 0.0, "fetril.weight_decay",
              params.fetril.weight_decay);
      break;
    case LearnerKind::Bsil:
      require(finite_positive(params.bsil.learning_rate), "bsil.learning_rate", params.bsil.learning_rate);
      require(params.bsil.epochs >= 1, "bsil.epochs", params.bsil.epochs);
      require(std::isfinite(params.bsil.anchor_weight) && params.bsil.anchor_weight >= 0.0, "bsil.anchor_weight",
              params.bsil.anchor_weight);
      require(finite_positive(params.bsil.initial_scale), "bsil.initial_scale", params.bsil.initial_scale);
      break;
    case LearnerKind::Ncm:
      break;
  }
}

std::vector<ClassId> IncrementalLearner::register_classes(const std::vector<ClassId>& labels) {
  std::vector<ClassId> fresh;
  for (const ClassId c : labels) {
    if (!std::binary_search(classes_.begin(), classes_.end(), c) &&
        std::find(fresh.begin(), fresh.end(), c) == fresh.end()) {
      fresh.push_back(c);
    }
  }
  std::sort(fresh.begin(), fresh.end());
  std::vector<ClassId> merged;
  std::merge(classes_.begin(), classes_.end(), fresh.begin(), fresh.end(), std::back_inserter(merged));
  classes_ = std::move(merged);
  return fresh;
}

std::size_t IncrementalLearner::index_of(ClassId c) const {
  const auto it = std::lower_bound(classes_.begin(), classes_.end(), c);
  if (it == classes_.end() || *it != c) fail(ErrorCode::InvalidArgument, "unknown class " + std::to_string(c));
  return static_cast<std::size_t>(it - classes_.begin());
}

std::vector<Eigen::Index> row_argmax(const Eigen::MatrixXd& scores) {
  std::vector<Eigen::Index> out(static_cast<std::size_t>(scores.rows()), 0);
  for (Eigen::Index i = 0; i < scores.rows(); ++i) {
    Eigen::Index best = 0;
    for (Eigen::Index c = 1; c < scores.cols(); ++c) {
      if (scores(i, c) > scores(i, best)) best = c;
    }
    out[static_cast<std::size_t>(i)] = best;
  }
  return out;
}

// ---------------------------------------------------------------------------

void NcmLearner::learn_step(const StepBatch& batch) {
  detail::require_batch(batch);
  const auto previous = classes_;
  const detail::ClassMeans step = detail::batch_means(batch);
  register_classes(step.ids);
  means_ = detail::reindex_rows(means_, previous, classes_, batch.features.cols());
  for (std::size_t i = 0; i < step.ids.size(); ++i) {
    means_.row(static_cast<Eigen::Index>(index_of(step.ids[i]))) = step.means.row(static_cast<Eigen::Index>(i));
  }
}

std::vector<ClassId> NcmLearner::predict(const Eigen::MatrixXd& features) const {
  if (classes_.empty()) fail(ErrorCode::InvalidArgument, "ncm: predict called before any update");
  Eigen::MatrixXd scores(features.rows(), means_.rows());
  for (Eigen::Index i = 0; i < features.rows(); ++i) {
    scores.row(i) = -(means_.rowwise() - features.row(i)).rowwise().squaredNorm().transpose();
  }
  std::vector<ClassId> out;
  for (const auto idx : row_argmax(scores)) out.push_back(classes_[static_cast<std::size_t>(idx)]);
  return out;
}

// ---------------------------------------------------------------------------

void DsldaLearner::update(const Eigen::Ref<const Eigen::VectorXd>& x, ClassId label) {
  const auto d = x.size();
  if (scatter_.size() == 0) {
    scatter_ = Eigen::MatrixXd::Zero(d, d);
  } else if (scatter_.rows() != d) {
    fail(ErrorCode::InvalidArgument, "dslda: feature dimension changed between updates");
  }
  if (!std::binary_search(classes_.begin(), classes_.end(), label)) {
    const auto previous = classes_;
    register_classes({label});
    means_ = detail::reindex_rows(means_, previous, classes_, d);
    std::vector<double> counts(classes_.size(), 0.0);
    for (std::size_t i = 0; i < previous.size(); ++i) counts[index_of(previous[i])] = counts_[i];
    counts_ = std::move(counts);
  }
  const auto c = index_of(label);
  const double n_c = counts_[c];
  const Eigen::VectorXd delta = x - means_.row(static_cast<Eigen::Index>(c)).transpose();
  means_.row(static_cast<Eigen::Index>(c)) += delta.transpose() / (n_c + 1.0);
  // Lower triangle only; keeps the scatter exactly symmetric.
  scatter_.selfadjointView<Eigen::Lower>().rankUpdate(delta, n_c / (n_c + 1.0));
  counts_[c] = n_c + 1.0;
  total_ += 1.0;
  fresh_ = false;
}

Eigen::MatrixXd DsldaLearner::scatter() const { return scatter_.selfadjointView<Eigen::Lower>(); }

Eigen::MatrixXd DsldaLearner::covariance() const {
  if (total_ <= 0.0) fail(ErrorCode::InvalidArgument, "dslda: no samples seen");
  return scatter() / total_;
}

void DsldaLearner::refresh() {
  const Eigen::Index d = scatter_.rows();
  const double eps = params_.shrinkage;
  const Eigen::MatrixXd shrunk = (1.0 - eps) * covariance() + eps * Eigen::MatrixXd::Identity(d, d);
  const Eigen::LDLT<Eigen::MatrixXd> ldlt(shrunk);
  const Eigen::VectorXd pivots = ldlt.vectorD();
  const double largest = pivots.cwiseAbs().maxCoeff();
  if (ldlt.info() != Eigen::Success || !(pivots.minCoeff() > 1e-12 * largest)) {
    if (eps == 0.0) fail(ErrorCode::Numeric, "dslda: covariance is singular with shrinkage 0; use shrinkage > 0");
    fail(ErrorCode::Numeric, "dslda: shrunk covariance is singular");
  }
  weights_ = ldlt.solve(means_.transpose()).transpose();
  biases_ = -0.5 * (means_.cwiseProduct(weights_)).rowwise().sum();
  fresh_ = true;
}

void DsldaLearner::learn_step(const StepBatch& batch) {
  detail::require_batch(batch);
  for (Eigen::Index r = 0; r < batch.features.rows(); ++r) {
    update(batch.features.row(r).transpose(), batch.labels[static_cast<std::size_t>(r)]);
  }
  refresh();
}

std::vector<ClassId> DsldaLearner::predict(const Eigen::MatrixXd& features) const {
  if (classes_.empty()) fail(ErrorCode::InvalidArgument, "dslda: predict called before any update");
  if (!fresh_) fail(ErrorCode::InvalidArgument, "dslda: predict called on a stale model; call refresh()");
  if (classes_.size() == 1) return std::vector<ClassId>(static_cast<std::size_t>(features.rows()), classes_.front());
  Eigen::MatrixXd scores = features * weights_.transpose();
  scores.rowwise() += biases_.transpose();
  std::vector<ClassId> out;
  for (const auto idx : row_argmax(scores)) out.push_back(classes_[static_cast<std::size_t>(idx)]);
  return out;
}

}  // namespace efcil

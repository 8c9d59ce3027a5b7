#include <algorithm>
#include <cmath>

#include "efcil/error.hpp"
#include "efcil/learners.hpp"
#include "efcil/random.hpp"
#include "efcil/text.hpp"
#include "learner_util.hpp"

namespace efcil {

namespace {

Eigen::MatrixXd normalize_rows(const Eigen::MatrixXd& m) {
  Eigen::MatrixXd out = m;
  for (Eigen::Index i = 0; i < out.rows(); ++i) {
    const double norm = out.row(i).norm();
    if (norm > 0.0) out.row(i) /= norm;
  }
  return out;
}

// Mean of logsumexp(z_i) - z_{i,y_i}; leaves softmax(z) in `logits`.
double cross_entropy_in_place(Eigen::MatrixXd& logits, const std::vector<Eigen::Index>& targets) {
  double total = 0.0;
  for (Eigen::Index i = 0; i < logits.rows(); ++i) {
    const double top = logits.row(i).maxCoeff();
    const double target_logit = logits(i, targets[static_cast<std::size_t>(i)]);
    logits.row(i) = (logits.row(i).array() - top).exp();
    const double sum = logits.row(i).sum();
    total += top + std::log(sum) - target_logit;
    logits.row(i) /= sum;
  }
  return total / static_cast<double>(logits.rows());
}

}  // namespace

BsilLoss bsil_loss(const Eigen::MatrixXd& weights, double scale, const BsilLossInput& input) {
  const Eigen::MatrixXd& features = *input.features;
  const auto& targets = *input.targets;
  const Eigen::Index n = features.rows();
  const Eigen::Index n_classes = weights.rows();
  if (n == 0 || static_cast<std::size_t>(n) != targets.size()) {
    fail(ErrorCode::InvalidArgument, "bsil loss: features and targets differ in length");
  }

  const Eigen::MatrixXd x_hat = normalize_rows(features);
  const Eigen::VectorXd w_norm = weights.rowwise().norm().cwiseMax(1e-12);
  const Eigen::MatrixXd w_hat = w_norm.cwiseInverse().asDiagonal() * weights;
  const Eigen::MatrixXd cosines = x_hat * w_hat.transpose();

  Eigen::MatrixXd probs = scale * cosines;
  probs.rowwise() += input.log_counts.transpose();

  BsilLoss out;
  out.value = cross_entropy_in_place(probs, targets);
  for (Eigen::Index i = 0; i < n; ++i) probs(i, targets[static_cast<std::size_t>(i)]) -= 1.0;
  probs /= static_cast<double>(n);  // dL/dz

  out.grad_scale = probs.cwiseProduct(cosines).sum();
  // dL/dw_hat, then project out the radial part: d w_hat / d w = (I - w_hat w_hat^T) / |w|.
  const Eigen::MatrixXd grad_hat = scale * probs.transpose() * x_hat;
  out.grad_weights.resize(n_classes, weights.cols());
  for (Eigen::Index c = 0; c < n_classes; ++c) {
    const double radial = grad_hat.row(c).dot(w_hat.row(c));
    out.grad_weights.row(c) = (grad_hat.row(c) - radial * w_hat.row(c)) / w_norm[c];
  }

  if (input.anchor_weight > 0.0) {
    for (Eigen::Index c = 0; c < n_classes; ++c) {
      if (!input.anchored[static_cast<std::size_t>(c)]) continue;
      const Eigen::RowVectorXd diff = weights.row(c) - input.anchor.row(c);
      out.value += input.anchor_weight * diff.squaredNorm();
      out.grad_weights.row(c) += 2.0 * input.anchor_weight * diff;
    }
  }
  return out;
}

double plain_softmax_loss(const Eigen::MatrixXd& weights, double scale, const Eigen::MatrixXd& features,
                          const std::vector<Eigen::Index>& targets) {
  const Eigen::MatrixXd w_hat = normalize_rows(weights);
  Eigen::MatrixXd logits = scale * (normalize_rows(features) * w_hat.transpose());
  return cross_entropy_in_place(logits, targets);
}

void BsilLearner::learn_step(const StepBatch& batch) {
  detail::require_batch(batch);
  const auto d = batch.features.cols();
  const detail::ClassMeans step = detail::batch_means(batch);
  const auto previous = classes_;
  const auto fresh = register_classes(step.ids);

  weights_ = detail::reindex_rows(weights_, previous, classes_, d);
  std::vector<double> counts(classes_.size(), 0.0);
  for (std::size_t i = 0; i < previous.size(); ++i) counts[index_of(previous[i])] = counts_[i];
  counts_ = std::move(counts);
  for (std::size_t i = 0; i < step.ids.size(); ++i) {
    counts_[index_of(step.ids[i])] += static_cast<double>(step.members[i].size());
  }

  // First step: seeded random head. Later steps imprint new rows with the
  // normalised class mean.
  Rng rng(seed_ + steps_done_);
  for (const ClassId c : fresh) {
    const auto row = static_cast<Eigen::Index>(index_of(c));
    if (steps_done_ == 0) {
      for (Eigen::Index j = 0; j < d; ++j) weights_(row, j) = rng.normal() / std::sqrt(static_cast<double>(d));
    } else {
      const auto pos = std::lower_bound(step.ids.begin(), step.ids.end(), c) - step.ids.begin();
      const Eigen::RowVectorXd mean = step.means.row(pos);
      weights_.row(row) = mean.norm() > 0.0 ? Eigen::RowVectorXd(mean / mean.norm()) : mean;
    }
  }
  if (steps_done_ == 0) scale_ = params_.initial_scale;

  BsilLossInput input;
  input.features = &batch.features;
  std::vector<Eigen::Index> targets;
  for (const ClassId c : batch.labels) targets.push_back(static_cast<Eigen::Index>(index_of(c)));
  input.targets = &targets;
  input.log_counts = Eigen::Map<const Eigen::VectorXd>(counts_.data(), static_cast<Eigen::Index>(counts_.size()))
                         .array()
                         .log()
                         .matrix();
  input.anchor = weights_;
  input.anchored.assign(classes_.size(), 0);
  for (const ClassId c : previous) input.anchored[index_of(c)] = 1;
  input.anchor_weight = params_.anchor_weight;

  for (int epoch = 0; epoch < params_.epochs; ++epoch) {
    const BsilLoss loss = bsil_loss(weights_, scale_, input);
    if (!std::isfinite(loss.value)) {
      fail(ErrorCode::Numeric, "bsil: non-finite loss at step " + std::to_string(steps_done_ + 1) +
                                   " with learning rate " + format_double(params_.learning_rate));
    }
    weights_ -= params_.learning_rate * loss.grad_weights;
    scale_ -= params_.learning_rate * loss.grad_scale;
  }
  if (!weights_.allFinite() || !std::isfinite(scale_)) {
    fail(ErrorCode::Numeric, "bsil: parameters diverged at step " + std::to_string(steps_done_ + 1) +
                                 " with learning rate " + format_double(params_.learning_rate));
  }
  ++steps_done_;
}

std::vector<ClassId> BsilLearner::predict(const Eigen::MatrixXd& features) const {
  if (classes_.empty()) fail(ErrorCode::InvalidArgument, "bsil: predict called before any update");
  // The count offset is a training-time correction; inference uses the cosine logits.
  const Eigen::MatrixXd scores = scale_ * (normalize_rows(features) * normalize_rows(weights_).transpose());
  std::vector<ClassId> out;
  for (const auto idx : row_argmax(scores)) out.push_back(classes_[static_cast<std::size_t>(idx)]);
  return out;
}

}  // namespace efcil

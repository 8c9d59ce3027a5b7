#include <algorithm>
#include <cmath>

#include "efcil/error.hpp"
#include "efcil/learners.hpp"
#include "efcil/text.hpp"
#include "learner_util.hpp"

namespace efcil {

Eigen::Index select_pseudo_source(const Eigen::VectorXd& past_mean, const Eigen::MatrixXd& candidate_means) {
  if (candidate_means.rows() == 0) fail(ErrorCode::InvalidArgument, "fetril: no candidate source classes");
  const double past_norm = past_mean.norm();
  bool degenerate = past_norm == 0.0;
  for (Eigen::Index t = 0; t < candidate_means.rows() && !degenerate; ++t) {
    degenerate = candidate_means.row(t).norm() == 0.0;
  }
  Eigen::Index best = 0;
  if (degenerate) {
    double best_dist = (candidate_means.row(0).transpose() - past_mean).squaredNorm();
    for (Eigen::Index t = 1; t < candidate_means.rows(); ++t) {
      const double dist = (candidate_means.row(t).transpose() - past_mean).squaredNorm();
      if (dist < best_dist) {
        best_dist = dist;
        best = t;
      }
    }
    return best;
  }
  double best_cos = -2.0;
  for (Eigen::Index t = 0; t < candidate_means.rows(); ++t) {
    const double cos = candidate_means.row(t).dot(past_mean) / (candidate_means.row(t).norm() * past_norm);
    if (cos > best_cos) {
      best_cos = cos;
      best = t;
    }
  }
  return best;
}

Eigen::MatrixXd make_pseudo_features(const Eigen::MatrixXd& source_samples, const Eigen::VectorXd& source_mean,
                                     const Eigen::VectorXd& past_mean) {
  const Eigen::RowVectorXd shift = (past_mean - source_mean).transpose();
  return source_samples.rowwise() + shift;
}

LinearHead train_softmax_head(const Eigen::MatrixXd& features, const std::vector<Eigen::Index>& targets,
                              Eigen::Index n_classes, const FetrilParams& params) {
  const Eigen::Index n = features.rows();
  const Eigen::Index d = features.cols();
  if (n == 0 || static_cast<std::size_t>(n) != targets.size()) {
    fail(ErrorCode::InvalidArgument, "softmax head: features and targets differ in length");
  }
  LinearHead head{Eigen::MatrixXd::Zero(n_classes, d), Eigen::VectorXd::Zero(n_classes)};
  Eigen::MatrixXd probs(n, n_classes);
  for (int epoch = 0; epoch < params.epochs; ++epoch) {
    probs.noalias() = features * head.weights.transpose();
    probs.rowwise() += head.bias.transpose();
    for (Eigen::Index i = 0; i < n; ++i) {
      const double top = probs.row(i).maxCoeff();
      probs.row(i) = (probs.row(i).array() - top).exp();
      probs.row(i) /= probs.row(i).sum();
      probs(i, targets[static_cast<std::size_t>(i)]) -= 1.0;
    }
    probs /= static_cast<double>(n);
    head.weights -= params.learning_rate * (probs.transpose() * features + params.weight_decay * head.weights);
    head.bias -= params.learning_rate * probs.colwise().sum().transpose();
  }
  if (!head.weights.allFinite() || !head.bias.allFinite()) {
    fail(ErrorCode::Numeric, "softmax head diverged (learning rate " + format_double(params.learning_rate) + ")");
  }
  return head;
}

void FetrilLearner::learn_step(const StepBatch& batch) {
  detail::require_batch(batch);
  const detail::ClassMeans step = detail::batch_means(batch);
  const auto previous = classes_;
  register_classes(step.ids);
  means_ = detail::reindex_rows(means_, previous, classes_, batch.features.cols());
  for (std::size_t i = 0; i < step.ids.size(); ++i) {
    means_.row(static_cast<Eigen::Index>(index_of(step.ids[i]))) = step.means.row(static_cast<Eigen::Index>(i));
  }

  // Past classes are those known before this step and absent from it.
  std::vector<ClassId> past;
  for (const ClassId c : previous) {
    if (!std::binary_search(step.ids.begin(), step.ids.end(), c)) past.push_back(c);
  }

  std::vector<Eigen::MatrixXd> blocks{batch.features};
  std::vector<Eigen::Index> targets;
  targets.reserve(batch.labels.size());
  for (const ClassId c : batch.labels) targets.push_back(static_cast<Eigen::Index>(index_of(c)));
  Eigen::Index total_rows = batch.features.rows();

  for (const ClassId c : past) {
    const Eigen::VectorXd past_mean = means_.row(static_cast<Eigen::Index>(index_of(c))).transpose();
    const Eigen::Index source = select_pseudo_source(past_mean, step.means);
    const auto& members = step.members[static_cast<std::size_t>(source)];
    Eigen::MatrixXd samples(static_cast<Eigen::Index>(members.size()), batch.features.cols());
    for (std::size_t r = 0; r < members.size(); ++r) samples.row(static_cast<Eigen::Index>(r)) = batch.features.row(members[r]);
    blocks.push_back(make_pseudo_features(samples, step.means.row(source).transpose(), past_mean));
    targets.insert(targets.end(), members.size(), static_cast<Eigen::Index>(index_of(c)));
    total_rows += samples.rows();
  }

  Eigen::MatrixXd train(total_rows, batch.features.cols());
  Eigen::Index offset = 0;
  for (const auto& block : blocks) {
    train.middleRows(offset, block.rows()) = block;
    offset += block.rows();
  }
  head_ = train_softmax_head(train, targets, static_cast<Eigen::Index>(classes_.size()), params_);
}

std::vector<ClassId> FetrilLearner::predict(const Eigen::MatrixXd& features) const {
  if (classes_.empty()) fail(ErrorCode::InvalidArgument, "fetril: predict called before any update");
  Eigen::MatrixXd scores = features * head_.weights.transpose();
  scores.rowwise() += head_.bias.transpose();
  std::vector<ClassId> out;
  for (const auto idx : row_argmax(scores)) out.push_back(classes_[static_cast<std::size_t>(idx)]);
  return out;
}

}  // namespace efcil

#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "efcil/accuracy.hpp"
#include "efcil/dataset.hpp"
#include "efcil/scenario.hpp"

namespace efcil {

enum class LearnerKind { Dslda, Fetril, Bsil, Ncm };

std::string to_string(LearnerKind kind);
LearnerKind parse_learner_kind(const std::string& text);

struct DsldaParams {
  double shrinkage = 1e-4;  // epsilon in [(1-eps) Sigma + eps I]^-1
};

struct FetrilParams {
  double learning_rate = 0.1;
  int epochs = 200;
  double weight_decay = 1e-4;
};

struct BsilParams {
  double learning_rate = 0.5;
  int epochs = 100;
  double anchor_weight = 0.1;  // lambda on || W_old - W_snapshot ||^2
  double initial_scale = 10.0;
};

struct LearnerParams {
  DsldaParams dslda;
  FetrilParams fetril;
  BsilParams bsil;
  std::uint64_t seed = 0;
};

/// Throws Error(InvalidArgument) naming the first out-of-range hyperparameter
/// that `kind` actually uses.
void validate(const LearnerParams& params, LearnerKind kind);

/// Common contract for exemplar-free learners. A step only ever sees the
/// batch for that step; nothing in this interface exposes earlier batches.
class IncrementalLearner {
 public:
  virtual ~IncrementalLearner() = default;

  virtual void learn_step(const StepBatch& batch) = 0;

  /// One prediction per row. Ties go to the lowest class id.
  virtual std::vector<ClassId> predict(const Eigen::MatrixXd& features) const = 0;

  /// Sorted ids of every class seen so far.
  const std::vector<ClassId>& known_classes() const { return classes_; }

 protected:
  /// Merges new labels into classes_; returns the ids that were not known.
  std::vector<ClassId> register_classes(const std::vector<ClassId>& labels);
  std::size_t index_of(ClassId c) const;

  std::vector<ClassId> classes_;
};

std::unique_ptr<IncrementalLearner> make_learner(LearnerKind kind, const LearnerParams& params);

/// Index of the first maximal entry of each row. With columns ordered by
/// class id this implements the lowest-id tie rule.
std::vector<Eigen::Index> row_argmax(const Eigen::MatrixXd& scores);

// ---------------------------------------------------------------------------
// Nearest class mean
// ---------------------------------------------------------------------------

class NcmLearner final : public IncrementalLearner {
 public:
  void learn_step(const StepBatch& batch) override;
  std::vector<ClassId> predict(const Eigen::MatrixXd& features) const override;

  const Eigen::MatrixXd& means() const { return means_; }

 private:
  Eigen::MatrixXd means_;  // row per known class
};

// ---------------------------------------------------------------------------
// Streaming LDA
// ---------------------------------------------------------------------------

/// Streaming linear discriminant with a shared covariance.
///
/// Class means and the pooled within-class scatter are updated one sample at
/// a time (Welford), so the state after n samples equals the batch estimate
/// regardless of order. The covariance is scatter / n. Scores are
/// w_c.x + beta_c with w_c = Lambda mu_c, beta_c = -mu_c.Lambda mu_c / 2 and
/// Lambda = [(1 - eps) Sigma + eps I]^-1, refreshed at the end of each step.
class DsldaLearner final : public IncrementalLearner {
 public:
  explicit DsldaLearner(DsldaParams params = {}) : params_(params) {}

  void learn_step(const StepBatch& batch) override;
  std::vector<ClassId> predict(const Eigen::MatrixXd& features) const override;

  /// Single-sample update; `learn_step` calls this for every row.
  void update(const Eigen::Ref<const Eigen::VectorXd>& x, ClassId label);
  /// Recomputes Lambda and the per-class weights. Throws Error(Numeric) when
  /// the shrunk covariance is singular.
  void refresh();

  const Eigen::MatrixXd& means() const { return means_; }
  const std::vector<double>& counts() const { return counts_; }
  /// Pooled within-class scatter as a full symmetric matrix.
  Eigen::MatrixXd scatter() const;
  double total_count() const { return total_; }
  Eigen::MatrixXd covariance() const;
  const Eigen::MatrixXd& weights() const { return weights_; }  // row per class
  const Eigen::VectorXd& biases() const { return biases_; }

 private:
  DsldaParams params_;
  Eigen::MatrixXd means_;
  std::vector<double> counts_;
  Eigen::MatrixXd scatter_;
  double total_ = 0.0;
  Eigen::MatrixXd weights_;
  Eigen::VectorXd biases_;
  bool fresh_ = false;
};

// ---------------------------------------------------------------------------
// Feature translation (FeTrIL)
// ---------------------------------------------------------------------------

/// Row of `candidate_means` with the highest cosine similarity to
/// `past_mean`; lowest index on ties. Falls back to the Euclidean nearest
/// candidate when any vector involved has zero norm.
Eigen::Index select_pseudo_source(const Eigen::VectorXd& past_mean, const Eigen::MatrixXd& candidate_means);

/// Translates each source sample by past_mean - source_mean.
Eigen::MatrixXd make_pseudo_features(const Eigen::MatrixXd& source_samples, const Eigen::VectorXd& source_mean,
                                     const Eigen::VectorXd& past_mean);

struct LinearHead {
  Eigen::MatrixXd weights;  // row per class
  Eigen::VectorXd bias;
};

/// Multinomial logistic regression by full-batch gradient descent from a zero
/// start. Minimises mean cross-entropy + weight_decay/2 * ||W||^2.
LinearHead train_softmax_head(const Eigen::MatrixXd& features, const std::vector<Eigen::Index>& targets,
                              Eigen::Index n_classes, const FetrilParams& params);

class FetrilLearner final : public IncrementalLearner {
 public:
  explicit FetrilLearner(FetrilParams params = {}) : params_(params) {}

  void learn_step(const StepBatch& batch) override;
  std::vector<ClassId> predict(const Eigen::MatrixXd& features) const override;

  const Eigen::MatrixXd& means() const { return means_; }
  const LinearHead& head() const { return head_; }

 private:
  FetrilParams params_;
  Eigen::MatrixXd means_;
  LinearHead head_;
};

// ---------------------------------------------------------------------------
// Balanced-softmax cosine head (BSIL-lite)
// ---------------------------------------------------------------------------

struct BsilLossInput {
  const Eigen::MatrixXd* features = nullptr;      // n x d, raw (normalised inside)
  const std::vector<Eigen::Index>* targets = nullptr;
  Eigen::VectorXd log_counts;                     // ln n_c per row of W
  Eigen::MatrixXd anchor;                         // snapshot rows, same shape as W
  std::vector<char> anchored;                     // 1 where the row is anchored
  double anchor_weight = 0.0;
};

struct BsilLoss {
  double value = 0.0;
  Eigen::MatrixXd grad_weights;
  double grad_scale = 0.0;
};

/// Mean balanced-softmax cross-entropy of the cosine head
///   z_ic = scale * cos(w_c, x_i) + ln n_c
/// plus anchor_weight * sum over anchored rows of ||w_c - anchor_c||^2,
/// with analytic gradients w.r.t. W and the scale.
BsilLoss bsil_loss(const Eigen::MatrixXd& weights, double scale, const BsilLossInput& input);

/// Same cross-entropy with plain softmax (no count offsets, no anchor).
double plain_softmax_loss(const Eigen::MatrixXd& weights, double scale, const Eigen::MatrixXd& features,
                          const std::vector<Eigen::Index>& targets);

class BsilLearner final : public IncrementalLearner {
 public:
  BsilLearner(BsilParams params, std::uint64_t seed) : params_(params), seed_(seed) {}

  void learn_step(const StepBatch& batch) override;
  std::vector<ClassId> predict(const Eigen::MatrixXd& features) const override;

  const Eigen::MatrixXd& weights() const { return weights_; }
  double scale() const { return scale_; }
  const std::vector<double>& counts() const { return counts_; }

 private:
  BsilParams params_;
  std::uint64_t seed_;
  std::size_t steps_done_ = 0;
  Eigen::MatrixXd weights_;
  double scale_ = 0.0;
  std::vector<double> counts_;
};

// ---------------------------------------------------------------------------

/// Runs the whole process: for each step, learn on that step's batch, then
/// evaluate on every test subset seen so far and on their union. Learner
/// errors are rethrown prefixed with the 1-based step index.
AccuracyMatrix run_incremental(LearnerKind kind, const FeatureDataset& ds, const Scenario& sc,
                               const LearnerParams& params);

}  // namespace efcil

#include <map>

#include "efcil/error.hpp"
#include "efcil/learners.hpp"

namespace efcil {

std::unique_ptr<IncrementalLearner> make_learner(LearnerKind kind, const LearnerParams& params) {
  validate(params, kind);
  switch (kind) {
    case LearnerKind::Dslda: return std::make_unique<DsldaLearner>(params.dslda);
    case LearnerKind::Fetril: return std::make_unique<FetrilLearner>(params.fetril);
    case LearnerKind::Bsil: return std::make_unique<BsilLearner>(params.bsil, params.seed);
    case LearnerKind::Ncm: return std::make_unique<NcmLearner>();
  }
  fail(ErrorCode::InvalidArgument, "unknown learner kind");
}

AccuracyMatrix run_incremental(LearnerKind kind, const FeatureDataset& ds, const Scenario& sc,
                               const LearnerParams& params) {
  validate(ds);
  auto learner = make_learner(kind, params);
  const auto views = partition_dataset(ds, sc);

  std::map<ClassId, std::size_t> subset_of;
  for (std::size_t k = 0; k < sc.steps.size(); ++k) {
    for (const ClassId c : sc.steps[k]) subset_of[c] = k;
  }

  AccuracyMatrix acc(views.size());
  for (std::size_t k = 0; k < views.size(); ++k) {
    const auto& view = views[k];
    std::vector<ClassId> predictions;
    Eigen::MatrixXd test(static_cast<Eigen::Index>(view.cumulative_test.size()), ds.features.cols());
    for (std::size_t r = 0; r < view.cumulative_test.size(); ++r) {
      test.row(static_cast<Eigen::Index>(r)) = ds.features.row(static_cast<Eigen::Index>(view.cumulative_test[r]));
    }
    try {
      learner->learn_step(make_step_batch(ds, view));
      predictions = learner->predict(test);
    } catch (const Error& e) {
      fail(e.code(), "step " + std::to_string(k + 1) + ": " + e.what());
    }

    std::vector<double> correct(k + 1, 0.0), total(k + 1, 0.0);
    double all_correct = 0.0;
    for (std::size_t r = 0; r < view.cumulative_test.size(); ++r) {
      const ClassId truth = ds.labels[view.cumulative_test[r]];
      const std::size_t subset = subset_of.at(truth);
      const bool hit = predictions[r] == truth;
      total[subset] += 1.0;
      correct[subset] += hit ? 1.0 : 0.0;
      all_correct += hit ? 1.0 : 0.0;
    }
    for (std::size_t i = 0; i <= k; ++i) acc.set(k, i, correct[i] / total[i]);
    acc.set_cumulative(k, all_correct / static_cast<double>(view.cumulative_test.size()));
  }
  return acc;
}

}  // namespace efcil

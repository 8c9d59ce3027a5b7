#pragma once

#include <map>
#include <vector>

#include <Eigen/Dense>

#include "efcil/error.hpp"
#include "efcil/scenario.hpp"

namespace efcil::detail {

// Re-lays `rows` (aligned with old_ids) against new_ids; unseen rows are zero.
inline Eigen::MatrixXd reindex_rows(const Eigen::MatrixXd& rows, const std::vector<ClassId>& old_ids,
                             const std::vector<ClassId>& new_ids, Eigen::Index cols) {
  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(new_ids.size()), cols);
  std::size_t j = 0;
  for (std::size_t i = 0; i < old_ids.size(); ++i) {
    while (new_ids[j] != old_ids[i]) ++j;
    out.row(static_cast<Eigen::Index>(j)) = rows.row(static_cast<Eigen::Index>(i));
  }
  return out;
}

struct ClassMeans {
  std::vector<ClassId> ids;  // sorted
  Eigen::MatrixXd means;
  std::vector<std::vector<Eigen::Index>> members;
};

inline ClassMeans batch_means(const StepBatch& batch) {
  std::map<ClassId, std::vector<Eigen::Index>> groups;
  for (std::size_t r = 0; r < batch.labels.size(); ++r) groups[batch.labels[r]].push_back(static_cast<Eigen::Index>(r));
  ClassMeans out;
  out.means.resize(static_cast<Eigen::Index>(groups.size()), batch.features.cols());
  Eigen::Index row = 0;
  for (auto& [c, members] : groups) {
    Eigen::VectorXd sum = Eigen::VectorXd::Zero(batch.features.cols());
    for (const Eigen::Index r : members) sum += batch.features.row(r).transpose();
    out.means.row(row++) = sum / static_cast<double>(members.size());
    out.ids.push_back(c);
    out.members.push_back(std::move(members));
  }
  return out;
}

inline void require_batch(const StepBatch& batch) {
  if (batch.labels.empty()) fail(ErrorCode::InvalidArgument, "empty training step");
  if (static_cast<std::size_t>(batch.features.rows()) != batch.labels.size()) {
    fail(ErrorCode::InvalidArgument, "step batch features and labels differ in length");
  }
}

}  // namespace efcil::detail

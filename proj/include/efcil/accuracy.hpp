#pragma once

#include <string>
#include <vector>

namespace efcil {

/// acc(M_k, D_i) for i <= k plus the cumulative accuracy of each M_k on the
/// union of the test subsets seen so far. Indices are 0-based.
class AccuracyMatrix {
 public:
  AccuracyMatrix() = default;
  explicit AccuracyMatrix(std::size_t steps);
  /// `rows[k]` must have k+1 entries; throws otherwise or on values outside [0,1].
  AccuracyMatrix(std::vector<std::vector<double>> rows, std::vector<double> cumulative);

  std::size_t steps() const { return cumulative_.size(); }

  double at(std::size_t step, std::size_t subset) const;
  void set(std::size_t step, std::size_t subset, double value);
  double cumulative(std::size_t step) const;
  void set_cumulative(std::size_t step, double value);

  const std::vector<std::vector<double>>& rows() const { return rows_; }

  /// `step,subset,accuracy` with 1-based steps; cumulative rows use the
  /// subset label "cumulative".
  std::string to_csv() const;
  static AccuracyMatrix from_csv(const std::string& text);

  friend bool operator==(const AccuracyMatrix&, const AccuracyMatrix&) = default;

 private:
  std::vector<std::vector<double>> rows_;
  std::vector<double> cumulative_;
};

}  // namespace efcil

#pragma once

#include <array>
#include <optional>
#include <string>
#include <vector>

#include "efcil/accuracy.hpp"
#include "efcil/rational.hpp"

namespace efcil {

struct MetricSet {
  double acc1 = 0.0;        // acc(M_1, D_1)
  double avg_acc = 0.0;     // mean cumulative accuracy over steps 2..K
  double forgetting = 0.0;  // class-fraction weighted best-minus-final gap
  double acc_k = 0.0;       // acc(M_K, D)
};

/// Mean of the cumulative accuracies of steps 2..K. The initial model is
/// excluded. Requires K >= 2.
double avg_incremental_accuracy(const AccuracyMatrix& acc);

/// Gap between the best and the final accuracy on test subset `subset`,
/// taking the best over the models trained at or after that subset's step.
double subset_forgetting(const AccuracyMatrix& acc, std::size_t subset);

/// b * f(D_1) + (1 - b) / (K - 1) * sum_{k >= 2} f(D_k), with b the exact
/// class fraction of the first step. Requires K >= 2 and 0 < b < 1.
double avg_forgetting(const AccuracyMatrix& acc, const Fraction& b);

double initial_accuracy(const AccuracyMatrix& acc);
double final_accuracy(const AccuracyMatrix& acc);

MetricSet compute_metrics(const AccuracyMatrix& acc, const Fraction& b);

inline constexpr std::array<const char*, 4> kMetricNames = {"acc1", "avg_acc", "forgetting", "accK"};

/// Population Pearson correlations between (acc1, avg_acc, forgetting, accK).
/// An entry is empty when either column has zero variance.
struct CorrelationMatrix {
  std::array<std::array<std::optional<double>, 4>, 4> r;
  std::size_t n = 0;
};

CorrelationMatrix metric_correlations(const std::vector<MetricSet>& table);

/// Population Pearson correlation; empty when either side is constant.
std::optional<double> pearson(const std::vector<double>& x, const std::vector<double>& y);

}  // namespace efcil

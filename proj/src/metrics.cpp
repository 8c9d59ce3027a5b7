#include "efcil/metrics.hpp"

#include <algorithm>
#include <cmath>

#include "efcil/error.hpp"

namespace efcil {

double avg_incremental_accuracy(const AccuracyMatrix& acc) {
  const std::size_t steps = acc.steps();
  if (steps < 2) fail(ErrorCode::InvalidArgument, "average incremental accuracy needs at least 2 steps");
  double sum = 0.0;
  for (std::size_t k = 1; k < steps; ++k) sum += acc.cumulative(k);
  return sum / static_cast<double>(steps - 1);
}

double subset_forgetting(const AccuracyMatrix& acc, std::size_t subset) {
  const std::size_t last = acc.steps() - 1;
  double best = acc.at(subset, subset);
  for (std::size_t k = subset + 1; k <= last; ++k) best = std::max(best, acc.at(k, subset));
  return best - acc.at(last, subset);
}

double avg_forgetting(const AccuracyMatrix& acc, const Fraction& b) {
  const std::size_t steps = acc.steps();
  if (steps < 2) fail(ErrorCode::InvalidArgument, "average forgetting needs at least 2 steps");
  if (b.num() <= 0 || b.num() >= b.den()) {
    fail(ErrorCode::InvalidArgument, "average forgetting needs 0 < b < 1, got " + b.to_string());
  }
  const double bd = b.to_double();
  double tail = 0.0;
  for (std::size_t k = 1; k < steps; ++k) tail += subset_forgetting(acc, k);
  return bd * subset_forgetting(acc, 0) + (1.0 - bd) / static_cast<double>(steps - 1) * tail;
}

double initial_accuracy(const AccuracyMatrix& acc) {
  if (acc.steps() == 0) fail(ErrorCode::InvalidArgument, "empty accuracy matrix");
  return acc.at(0, 0);
}

double final_accuracy(const AccuracyMatrix& acc) {
  if (acc.steps() == 0) fail(ErrorCode::InvalidArgument, "empty accuracy matrix");
  return acc.cumulative(acc.steps() - 1);
}

MetricSet compute_metrics(const AccuracyMatrix& acc, const Fraction& b) {
  return {initial_accuracy(acc), avg_incremental_accuracy(acc), avg_forgetting(acc, b), final_accuracy(acc)};
}

std::optional<double> pearson(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size() || x.empty()) fail(ErrorCode::InvalidArgument, "pearson: length mismatch");
  const double n = static_cast<double>(x.size());
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= n;
  my /= n;
  double sxx = 0.0, syy = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    syy += (y[i] - my) * (y[i] - my);
    sxy += (x[i] - mx) * (y[i] - my);
  }
  if (sxx == 0.0 || syy == 0.0) return std::nullopt;
  return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

CorrelationMatrix metric_correlations(const std::vector<MetricSet>& table) {
  if (table.size() < 3) fail(ErrorCode::InvalidArgument, "metric correlations need at least 3 rows");
  std::array<std::vector<double>, 4> columns;
  for (const auto& m : table) {
    columns[0].push_back(m.acc1);
    columns[1].push_back(m.avg_acc);
    columns[2].push_back(m.forgetting);
    columns[3].push_back(m.acc_k);
  }
  CorrelationMatrix out;
  out.n = table.size();
  for (std::size_t i = 0; i < 4; ++i) {
    const bool constant = !pearson(columns[i], columns[i]).has_value();
    for (std::size_t j = 0; j < 4; ++j) {
      if (i == j) {
        out.r[i][j] = constant ? std::nullopt : std::optional<double>(1.0);
      } else if (j < i) {
        out.r[i][j] = out.r[j][i];
      } else {
        out.r[i][j] = pearson(columns[i], columns[j]);
      }
    }
  }
  return out;
}

}  // namespace efcil

#include "efcil/accuracy.hpp"

#include <cmath>

#include "efcil/error.hpp"
#include "efcil/text.hpp"

namespace efcil {

namespace {

void check_unit(double value) {
  if (!(value >= 0.0 && value <= 1.0)) {
    fail(ErrorCode::InvalidArgument, "accuracy " + format_double(value) + " outside [0, 1]");
  }
}

}  // namespace

AccuracyMatrix::AccuracyMatrix(std::size_t steps) : cumulative_(steps, 0.0) {
  rows_.reserve(steps);
  for (std::size_t k = 0; k < steps; ++k) rows_.emplace_back(k + 1, 0.0);
}

AccuracyMatrix::AccuracyMatrix(std::vector<std::vector<double>> rows, std::vector<double> cumulative)
    : rows_(std::move(rows)), cumulative_(std::move(cumulative)) {
  if (rows_.size() != cumulative_.size()) fail(ErrorCode::InvalidArgument, "accuracy matrix: row count mismatch");
  for (std::size_t k = 0; k < rows_.size(); ++k) {
    if (rows_[k].size() != k + 1) {
      fail(ErrorCode::InvalidArgument, "accuracy matrix: row " + std::to_string(k + 1) + " must have " +
                                           std::to_string(k + 1) + " entries");
    }
    for (const double v : rows_[k]) check_unit(v);
    check_unit(cumulative_[k]);
  }
}

double AccuracyMatrix::at(std::size_t step, std::size_t subset) const {
  if (step >= rows_.size() || subset > step) fail(ErrorCode::InvalidArgument, "accuracy matrix index out of range");
  return rows_[step][subset];
}

void AccuracyMatrix::set(std::size_t step, std::size_t subset, double value) {
  if (step >= rows_.size() || subset > step) fail(ErrorCode::InvalidArgument, "accuracy matrix index out of range");
  check_unit(value);
  rows_[step][subset] = value;
}

double AccuracyMatrix::cumulative(std::size_t step) const {
  if (step >= cumulative_.size()) fail(ErrorCode::InvalidArgument, "accuracy matrix step out of range");
  return cumulative_[step];
}

void AccuracyMatrix::set_cumulative(std::size_t step, double value) {
  if (step >= cumulative_.size()) fail(ErrorCode::InvalidArgument, "accuracy matrix step out of range");
  check_unit(value);
  cumulative_[step] = value;
}

std::string AccuracyMatrix::to_csv() const {
  std::string out = "step,subset,accuracy\n";
  for (std::size_t k = 0; k < rows_.size(); ++k) {
    for (std::size_t i = 0; i <= k; ++i) {
      out += std::to_string(k + 1) + "," + std::to_string(i + 1) + "," + format_double(rows_[k][i]) + "\n";
    }
    out += std::to_string(k + 1) + ",cumulative," + format_double(cumulative_[k]) + "\n";
  }
  return out;
}

AccuracyMatrix AccuracyMatrix::from_csv(const std::string& text) {
  std::vector<std::vector<double>> rows;
  std::vector<double> cumulative;
  std::size_t line_no = 0;
  std::size_t start = 0;
  while (start < text.size()) {
    auto end = text.find('\n', start);
    if (end == std::string::npos) end = text.size();
    const std::string_view line = trim(std::string_view(text).substr(start, end - start));
    start = end + 1;
    ++line_no;
    if (line_no == 1 || line.empty()) continue;
    const auto fields = split_fields(line, ',');
    long long step = 0;
    double value = 0.0;
    if (fields.size() != 3 || !parse_int64(fields[0], step) || step < 1 || !parse_double(fields[2], value)) {
      fail(ErrorCode::Parse, "accuracy csv: line " + std::to_string(line_no) + " is malformed");
    }
    const auto k = static_cast<std::size_t>(step - 1);
    if (rows.size() <= k) {
      rows.resize(k + 1);
      cumulative.resize(k + 1, NAN);
    }
    if (trim(fields[1]) == "cumulative") {
      cumulative[k] = value;
    } else {
      long long subset = 0;
      if (!parse_int64(fields[1], subset) || subset < 1 || static_cast<std::size_t>(subset) != rows[k].size() + 1) {
        fail(ErrorCode::Parse, "accuracy csv: line " + std::to_string(line_no) + " has an out-of-order subset");
      }
      rows[k].push_back(value);
    }
  }
  for (const double c : cumulative) {
    if (std::isnan(c)) fail(ErrorCode::Parse, "accuracy csv: missing cumulative row");
  }
  return AccuracyMatrix(std::move(rows), std::move(cumulative));
}

}  // namespace efcil

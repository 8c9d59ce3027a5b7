#pragma once

#include <cstdint>
#include <numeric>
#include <string>

#include "efcil/error.hpp"

namespace efcil {

/// Exact fraction kept in lowest terms with a positive denominator.
class Fraction {
 public:
  constexpr Fraction() = default;
  Fraction(std::int64_t num, std::int64_t den) : num_(num), den_(den) {
    if (den_ == 0) fail(ErrorCode::InvalidArgument, "fraction with zero denominator");
    normalize();
  }

  std::int64_t num() const { return num_; }
  std::int64_t den() const { return den_; }
  double to_double() const { return static_cast<double>(num_) / static_cast<double>(den_); }
  std::string to_string() const { return std::to_string(num_) + "/" + std::to_string(den_); }

  friend Fraction operator+(const Fraction& a, const Fraction& b) {
    return {a.num_ * b.den_ + b.num_ * a.den_, a.den_ * b.den_};
  }
  friend Fraction operator-(const Fraction& a, const Fraction& b) {
    return {a.num_ * b.den_ - b.num_ * a.den_, a.den_ * b.den_};
  }
  friend Fraction operator*(const Fraction& a, const Fraction& b) {
    return {a.num_ * b.num_, a.den_ * b.den_};
  }
  friend Fraction operator/(const Fraction& a, const Fraction& b) {
    return {a.num_ * b.den_, a.den_ * b.num_};
  }
  friend bool operator==(const Fraction& a, const Fraction& b) = default;

 private:
  void normalize() {
    if (den_ < 0) {
      num_ = -num_;
      den_ = -den_;
    }
    const std::int64_t g = std::gcd(num_, den_);
    if (g > 1) {
      num_ /= g;
      den_ /= g;
    }
  }

  std::int64_t num_ = 0;
  std::int64_t den_ = 1;
};

/// Parses "a/b" or a bare integer.
Fraction parse_fraction(const std::string& text);

}  // namespace efcil

// Independent reference computations used by the tests and the acceptance
// binary. They share no code with the library: plain loops, long double
// arithmetic and Boost special functions instead of the library's own.
#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <random>
#include <stdexcept>
#include <vector>

#include <boost/math/special_functions/beta.hpp>
#include <boost/math/distributions/normal.hpp>

namespace oracle {

using Matrix = std::vector<std::vector<long double>>;
using Vector = std::vector<long double>;

/// acc[k][i] for i <= k and cumulative[k]; the mean of cumulative[1..K-1].
inline double average_incremental_accuracy(const std::vector<double>& cumulative) {
  long double sum = 0.0L;
  for (std::size_t k = 1; k < cumulative.size(); ++k) sum += cumulative[k];
  return static_cast<double>(sum / static_cast<long double>(cumulative.size() - 1));
}

/// Weighted forgetting, spelled out term by term.
inline double average_forgetting(const std::vector<std::vector<double>>& acc, long double b) {
  const std::size_t K = acc.size();
  std::vector<long double> f(K, 0.0L);
  for (std::size_t i = 0; i < K; ++i) {
    long double best = -1.0L;
    for (std::size_t k = i; k < K; ++k) best = std::max<long double>(best, acc[k][i]);
    f[i] = best - acc[K - 1][i];
  }
  long double rest = 0.0L;
  for (std::size_t i = 1; i < K; ++i) rest += f[i];
  return static_cast<double>(b * f[0] + (1.0L - b) / static_cast<long double>(K - 1) * rest);
}

/// Solves A x = b by Gaussian elimination with partial pivoting.
inline Vector solve(Matrix a, Vector b) {
  const std::size_t n = b.size();
  for (std::size_t c = 0; c < n; ++c) {
    std::size_t piv = c;
    for (std::size_t r = c + 1; r < n; ++r) {
      if (std::fabs(a[r][c]) > std::fabs(a[piv][c])) piv = r;
    }
    if (a[piv][c] == 0.0L) throw std::runtime_error("oracle: singular system");
    std::swap(a[c], a[piv]);
    std::swap(b[c], b[piv]);
    for (std::size_t r = c + 1; r < n; ++r) {
      const long double m = a[r][c] / a[c][c];
      for (std::size_t k = c; k < n; ++k) a[r][k] -= m * a[c][k];
      b[r] -= m * b[c];
    }
  }
  Vector x(n);
  for (std::size_t i = n; i-- > 0;) {
    long double s = b[i];
    for (std::size_t k = i + 1; k < n; ++k) s -= a[i][k] * x[k];
    x[i] = s / a[i][i];
  }
  return x;
}

inline Matrix inverse(const Matrix& a) {
  const std::size_t n = a.size();
  Matrix inv(n, Vector(n));
  for (std::size_t j = 0; j < n; ++j) {
    Vector e(n, 0.0L);
    e[j] = 1.0L;
    const Vector col = solve(a, e);
    for (std::size_t i = 0; i < n; ++i) inv[i][j] = col[i];
  }
  return inv;
}

/// Two-sided Student t p-value from the Boost incomplete beta.
inline double t_pvalue(long double t, long double df) {
  return static_cast<double>(boost::math::ibeta(df / 2.0L, 0.5L, df / (df + t * t)));
}

inline double f_pvalue(long double f, long double df1, long double df2) {
  return static_cast<double>(boost::math::ibeta(df2 / 2.0L, df1 / 2.0L, df2 / (df2 + df1 * f)));
}

inline double normal_quantile(double q) {
  return boost::math::quantile(boost::math::normal_distribution<double>(), q);
}

/// Least squares through the normal equations XᵀX β = Xᵀy in long double.
struct LeastSquares {
  Vector beta;
  Vector std_errors;
  std::vector<double> p_values;
  long double ssr = 0.0L;
  Vector residuals;
};

inline LeastSquares normal_equations(const std::vector<std::vector<double>>& x, const std::vector<double>& y) {
  const std::size_t n = y.size();
  const std::size_t p = x.front().size();
  Matrix xtx(p, Vector(p, 0.0L));
  Vector xty(p, 0.0L);
  for (std::size_t r = 0; r < n; ++r) {
    for (std::size_t i = 0; i < p; ++i) {
      xty[i] += static_cast<long double>(x[r][i]) * y[r];
      for (std::size_t j = 0; j < p; ++j) xtx[i][j] += static_cast<long double>(x[r][i]) * x[r][j];
    }
  }
  LeastSquares out;
  out.beta = solve(xtx, xty);
  out.residuals.resize(n);
  for (std::size_t r = 0; r < n; ++r) {
    long double fit = 0.0L;
    for (std::size_t i = 0; i < p; ++i) fit += out.beta[i] * x[r][i];
    out.residuals[r] = y[r] - fit;
    out.ssr += out.residuals[r] * out.residuals[r];
  }
  const long double df = static_cast<long double>(n - p);
  const long double sigma2 = out.ssr / df;
  const Matrix inv = inverse(xtx);
  for (std::size_t i = 0; i < p; ++i) {
    const long double se = std::sqrt(sigma2 * inv[i][i]);
    out.std_errors.push_back(se);
    out.p_values.push_back(t_pvalue(out.beta[i] / se, df));
  }
  return out;
}

/// Residual sum of squares of y on a column subset, via the normal equations.
inline long double subset_ssr(const std::vector<std::vector<double>>& x, const std::vector<double>& y,
                              const std::vector<std::size_t>& cols) {
  std::vector<std::vector<double>> sub(x.size());
  for (std::size_t r = 0; r < x.size(); ++r) {
    for (const auto c : cols) sub[r].push_back(x[r][c]);
  }
  return normal_equations(sub, y).ssr;
}

/// Largest eigenvalue of a symmetric positive semidefinite matrix by power
/// iteration on A + shift I, refined with the Rayleigh quotient.
inline long double power_iteration(const Matrix& a, long double shift, int iterations = 200000) {
  const std::size_t n = a.size();
  Vector v(n);
  std::mt19937_64 gen(7);
  std::uniform_real_distribution<double> u(0.5, 1.5);
  for (auto& x : v) x = u(gen);
  long double lambda = 0.0L;
  for (int it = 0; it < iterations; ++it) {
    Vector w(n, 0.0L);
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = 0; j < n; ++j) w[i] += a[i][j] * v[j];
      w[i] += shift * v[i];
    }
    long double norm = 0.0L;
    long double rq = 0.0L;
    for (std::size_t i = 0; i < n; ++i) {
      norm += w[i] * w[i];
      rq += v[i] * w[i];
    }
    norm = std::sqrt(norm);
    for (std::size_t i = 0; i < n; ++i) v[i] = w[i] / norm;
    if (it > 10 && std::fabs(rq - lambda) <= 1e-17L * std::fabs(rq)) {
      lambda = rq;
      break;
    }
    lambda = rq;
  }
  return lambda - shift;
}

/// Smallest eigenvalue as lambda_max - (largest eigenvalue of lambda_max I - A).
inline long double min_eigenvalue(const Matrix& a) {
  const long double top = power_iteration(a, 0.0L);
  Matrix b(a.size(), Vector(a.size()));
  for (std::size_t i = 0; i < a.size(); ++i) {
    for (std::size_t j = 0; j < a.size(); ++j) b[i][j] = (i == j ? top : 0.0L) - a[i][j];
  }
  return top - power_iteration(b, 0.0L);
}

/// Batch linear discriminant with the same shrinkage form as the streaming
/// learner: two-pass means and pooled scatter, covariance = scatter / n.
struct BatchLda {
  std::vector<int> classes;
  Matrix means;
  Matrix covariance;
  Matrix weights;  // row per class
  Vector biases;

  std::vector<int> predict(const std::vector<std::vector<double>>& rows) const {
    std::vector<int> out;
    for (const auto& x : rows) {
      std::size_t best = 0;
      long double best_score = -std::numeric_limits<long double>::infinity();
      for (std::size_t c = 0; c < classes.size(); ++c) {
        long double s = biases[c];
        for (std::size_t j = 0; j < x.size(); ++j) s += weights[c][j] * x[j];
        if (s > best_score) {
          best_score = s;
          best = c;
        }
      }
      out.push_back(classes[best]);
    }
    return out;
  }
};

inline BatchLda batch_lda(const std::vector<std::vector<double>>& rows, const std::vector<int>& labels,
                          long double shrinkage) {
  BatchLda lda;
  const std::size_t d = rows.front().size();
  std::map<int, std::vector<std::size_t>> members;
  for (std::size_t r = 0; r < rows.size(); ++r) members[labels[r]].push_back(r);
  for (const auto& [c, idx] : members) {
    lda.classes.push_back(c);
    Vector mu(d, 0.0L);
    for (const auto r : idx) {
      for (std::size_t j = 0; j < d; ++j) mu[j] += rows[r][j];
    }
    for (auto& v : mu) v /= static_cast<long double>(idx.size());
    lda.means.push_back(mu);
  }
  Matrix scatter(d, Vector(d, 0.0L));
  std::size_t k = 0;
  for (const auto& [c, idx] : members) {
    for (const auto r : idx) {
      for (std::size_t i = 0; i < d; ++i) {
        for (std::size_t j = 0; j < d; ++j) {
          scatter[i][j] += (rows[r][i] - lda.means[k][i]) * (rows[r][j] - lda.means[k][j]);
        }
      }
    }
    ++k;
  }
  lda.covariance = scatter;
  Matrix shrunk(d, Vector(d));
  for (std::size_t i = 0; i < d; ++i) {
    for (std::size_t j = 0; j < d; ++j) {
      lda.covariance[i][j] /= static_cast<long double>(rows.size());
      shrunk[i][j] = (1.0L - shrinkage) * lda.covariance[i][j] + (i == j ? shrinkage : 0.0L);
    }
  }
  const Matrix lambda = inverse(shrunk);
  for (const auto& mu : lda.means) {
    Vector w(d, 0.0L);
    for (std::size_t i = 0; i < d; ++i) {
      for (std::size_t j = 0; j < d; ++j) w[i] += lambda[i][j] * mu[j];
    }
    long double q = 0.0L;
    for (std::size_t i = 0; i < d; ++i) q += mu[i] * w[i];
    lda.weights.push_back(w);
    lda.biases.push_back(-0.5L * q);
  }
  return lda;
}

}  // namespace oracle

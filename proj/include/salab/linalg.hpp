#pragma once

#include <cmath>
#include <cstddef>
#include <cstdio>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace salab {

using Vec = std::vector<double>;

/// 17 significant digits: enough for an exact double round trip in text.
inline std::string format_full(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

/// Dense row-major matrix, just enough for the small systems in this lab.
struct Mat {
  int rows = 0;
  int cols = 0;
  std::vector<double> a;

  Mat() = default;
  Mat(int r, int c, double fill = 0.0) : rows(r), cols(c), a(size_t(r) * c, fill) {}
  static Mat identity(int n) {
    Mat m(n, n);
    for (int i = 0; i < n; ++i) m(i, i) = 1.0;
    return m;
  }
  double& operator()(int i, int j) { return a[size_t(i) * cols + j]; }
  double operator()(int i, int j) const { return a[size_t(i) * cols + j]; }
};

enum class Norm { L2, LInf };

inline double norm_of(Norm n, std::span<const double> x) {
  if (n == Norm::L2) {
    double s = 0.0;
    for (double v : x) s += v * v;
    return std::sqrt(s);
  }
  double m = 0.0;
  for (double v : x) m = std::max(m, std::abs(v));
  return m;
}

inline double dist_of(Norm n, std::span<const double> x,
                      std::span<const double> y) {
  if (x.size() != y.size()) {
    throw std::invalid_argument("dist_of: dimension mismatch");
  }
  if (n == Norm::L2) {
    double s = 0.0;
    for (size_t i = 0; i < x.size(); ++i) {
      const double d = x[i] - y[i];
      s += d * d;
    }
    return std::sqrt(s);
  }
  double m = 0.0;
  for (size_t i = 0; i < x.size(); ++i) m = std::max(m, std::abs(x[i] - y[i]));
  return m;
}

inline double linf_norm(std::span<const double> x) {
  return norm_of(Norm::LInf, x);
}

inline double l1_norm(std::span<const double> x) {
  double s = 0.0;
  for (double v : x) s += std::abs(v);
  return s;
}

/// y = A x for row-major A.
inline void mat_vec(const Mat& A, std::span<const double> x,
                    std::span<double> y) {
  for (int i = 0; i < A.rows; ++i) {
    double s = 0.0;
    for (int j = 0; j < A.cols; ++j) s += A(i, j) * x[j];
    y[i] = s;
  }
}

/// Max absolute row sum: the operator norm induced by ||.||_inf.
inline double inf_operator_norm(const Mat& A) {
  double m = 0.0;
  for (int i = 0; i < A.rows; ++i) {
    double s = 0.0;
    for (int j = 0; j < A.cols; ++j) s += std::abs(A(i, j));
    m = std::max(m, s);
  }
  return m;
}

/// Spectral norm via power iteration on A^T A. Deterministic start, enough
/// iterations for the small matrices used here.
inline double spectral_norm(const Mat& A) {
  const int n = A.cols;
  Vec v(n, 0.0);
  for (int j = 0; j < n; ++j) v[j] = 1.0 / std::sqrt(double(n)) + 1e-3 * (j + 1);
  Vec av(A.rows), atav(n);
  double lambda = 0.0;
  for (int it = 0; it < 500; ++it) {
    mat_vec(A, v, av);
    for (int j = 0; j < n; ++j) {
      double s = 0.0;
      for (int i = 0; i < A.rows; ++i) s += A(i, j) * av[i];
      atav[j] = s;
    }
    double nrm = norm_of(Norm::L2, atav);
    if (nrm == 0.0) return 0.0;
    for (int j = 0; j < n; ++j) v[j] = atav[j] / nrm;
    lambda = nrm;
  }
  return std::sqrt(lambda);
}

/// Solve A x = b by Gaussian elimination with partial pivoting.
inline Vec solve_linear(Mat A, Vec b) {
  const int n = A.rows;
  if (A.cols != n || int(b.size()) != n) {
    throw std::invalid_argument("solve_linear: shape mismatch");
  }
  for (int k = 0; k < n; ++k) {
    int piv = k;
    for (int i = k + 1; i < n; ++i) {
      if (std::abs(A(i, k)) > std::abs(A(piv, k))) piv = i;
    }
    if (A(piv, k) == 0.0) {
      throw std::invalid_argument("solve_linear: singular matrix");
    }
    if (piv != k) {
      for (int j = k; j < n; ++j) std::swap(A(piv, j), A(k, j));
      std::swap(b[piv], b[k]);
    }
    for (int i = k + 1; i < n; ++i) {
      const double f = A(i, k) / A(k, k);
      if (f == 0.0) continue;
      for (int j = k; j < n; ++j) A(i, j) -= f * A(k, j);
      b[i] -= f * b[k];
    }
  }
  Vec x(n);
  for (int i = n - 1; i >= 0; --i) {
    double s = b[i];
    for (int j = i + 1; j < n; ++j) s -= A(i, j) * x[j];
    x[i] = s / A(i, i);
  }
  return x;
}

/// Lower Cholesky factor of a symmetric positive semidefinite matrix.
/// Zero (or numerically zero) pivots produce a zero column, so rank-deficient
/// covariances (including Sigma = 0) are accepted.
inline Mat cholesky_psd(const Mat& S, double tol = 1e-10) {
  const int n = S.rows;
  if (S.cols != n) throw std::invalid_argument("cholesky_psd: not square");
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < i; ++j) {
      if (std::abs(S(i, j) - S(j, i)) > 1e-9) {
        throw std::invalid_argument("cholesky_psd: matrix not symmetric");
      }
    }
  }
  Mat L(n, n);
  for (int j = 0; j < n; ++j) {
    double d = S(j, j);
    for (int k = 0; k < j; ++k) d -= L(j, k) * L(j, k);
    if (d < -tol) {
      throw std::invalid_argument("cholesky_psd: matrix not PSD");
    }
    if (d <= tol) {
      L(j, j) = 0.0;
      continue;
    }
    L(j, j) = std::sqrt(d);
    for (int i = j + 1; i < n; ++i) {
      double s = S(i, j);
      for (int k = 0; k < j; ++k) s -= L(i, k) * L(j, k);
      L(i, j) = s / L(j, j);
    }
  }
  return L;
}

}  // namespace salab

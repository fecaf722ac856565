#include "riskcp/linalg.hpp"

#include <cassert>
#include <cmath>

namespace rcp {

Vec matvec(const Mat& m, const Vec& x) {
  assert(x.size() == m.cols);
  Vec y(m.rows, 0.0);
  for (std::size_t i = 0; i < m.rows; ++i) {
    double s = 0.0;
    const double* row = &m.a[i * m.cols];
    for (std::size_t j = 0; j < m.cols; ++j) s += row[j] * x[j];
    y[i] = s;
  }
  return y;
}

Vec matvec_t(const Mat& m, const Vec& x) {
  assert(x.size() == m.rows);
  Vec y(m.cols, 0.0);
  for (std::size_t i = 0; i < m.rows; ++i) {
    const double* row = &m.a[i * m.cols];
    const double xi = x[i];
    for (std::size_t j = 0; j < m.cols; ++j) y[j] += row[j] * xi;
  }
  return y;
}

bool solve_linear(Mat a, Vec b, Vec& x) {
  assert(a.rows == a.cols && b.size() == a.rows);
  const std::size_t n = a.rows;
  std::vector<std::size_t> piv(n);
  for (std::size_t i = 0; i < n; ++i) piv[i] = i;

  for (std::size_t col = 0; col < n; ++col) {
    std::size_t best = col;
    double best_abs = std::fabs(a(col, col));
    for (std::size_t r = col + 1; r < n; ++r) {
      const double v = std::fabs(a(r, col));
      if (v > best_abs) {
        best_abs = v;
        best = r;
      }
    }
    if (best_abs < 1e-12) return false;
    if (best != col) {
      for (std::size_t j = 0; j < n; ++j) std::swap(a(col, j), a(best, j));
      std::swap(b[col], b[best]);
    }
    for (std::size_t r = col + 1; r < n; ++r) {
      const double f = a(r, col) / a(col, col);
      if (f == 0.0) continue;
      for (std::size_t j = col; j < n; ++j) a(r, j) -= f * a(col, j);
      b[r] -= f * b[col];
    }
  }

  Vec out(n, 0.0);
  for (std::size_t i = n; i-- > 0;) {
    double s = b[i];
    for (std::size_t j = i + 1; j < n; ++j) s -= a(i, j) * out[j];
    out[i] = s / a(i, i);
  }
  x = std::move(out);
  return true;
}

double dot(const Vec& a, const Vec& b) {
  assert(a.size() == b.size());
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

double squared_distance(const Vec& a, const Vec& b) {
  assert(a.size() == b.size());
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a[i] - b[i];
    s += d * d;
  }
  return s;
}

}  // namespace rcp

#pragma once

#include <cstddef>
#include <vector>

namespace rcp {

using Vec = std::vector<double>;

/// Minimal row-major dense matrix. Enough for the classifier and MLP math;
/// not a general linear algebra library.
struct Mat {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> a;

  Mat() = default;
  Mat(std::size_t r, std::size_t c, double fill = 0.0)
      : rows(r), cols(c), a(r * c, fill) {}

  double& operator()(std::size_t i, std::size_t j) { return a[i * cols + j]; }
  double operator()(std::size_t i, std::size_t j) const { return a[i * cols + j]; }
};

/// y = M x
Vec matvec(const Mat& m, const Vec& x);

/// y = M^T x
Vec matvec_t(const Mat& m, const Vec& x);

/// Solves A x = b by Gaussian elimination with partial pivoting.
/// Returns false on a (numerically) singular system; x is untouched then.
bool solve_linear(Mat a, Vec b, Vec& x);

double dot(const Vec& a, const Vec& b);
double squared_distance(const Vec& a, const Vec& b);

}  // namespace rcp

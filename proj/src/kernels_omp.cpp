#include <algorithm>
#include <cassert>

#include "pushsum/kernels.hpp"

namespace pushsum::kernels::parallel {

Matrix multiply(const Matrix& a, const Matrix& b) {
  assert(a.cols() == b.rows());
  Matrix c(a.rows(), b.cols());
  const auto rows = static_cast<long long>(a.rows());
  const std::size_t inner = a.cols();
  const std::size_t cols = b.cols();
#pragma omp parallel for schedule(static) if (a.rows() >= kParallelThreshold)
  for (long long i = 0; i < rows; ++i) {
    const auto r = static_cast<std::size_t>(i);
    for (std::size_t j = 0; j < cols; ++j) {
      double acc = 0.0;
      for (std::size_t k = 0; k < inner; ++k) acc += a(r, k) * b(k, j);
      c(r, j) = acc;
    }
  }
  return c;
}

std::vector<double> multiply(const Matrix& a, std::span<const double> x) {
  assert(a.cols() == x.size());
  std::vector<double> y(a.rows(), 0.0);
  const auto rows = static_cast<long long>(a.rows());
#pragma omp parallel for schedule(static) if (a.rows() >= kParallelThreshold)
  for (long long i = 0; i < rows; ++i) {
    const auto r = static_cast<std::size_t>(i);
    double acc = 0.0;
    for (std::size_t k = 0; k < a.cols(); ++k) acc += a(r, k) * x[k];
    y[r] = acc;
  }
  return y;
}

std::vector<double> column_sums(const Matrix& m) {
  std::vector<double> s(m.cols(), 0.0);
  const auto cols = static_cast<long long>(m.cols());
#pragma omp parallel for schedule(static) if (m.cols() >= kParallelThreshold)
  for (long long j = 0; j < cols; ++j) {
    const auto c = static_cast<std::size_t>(j);
    double acc = 0.0;
    for (std::size_t i = 0; i < m.rows(); ++i) acc += m(i, c);
    s[c] = acc;
  }
  return s;
}

double max_row_spread(const Matrix& m) {
  double spread = 0.0;
  const auto rows = static_cast<long long>(m.rows());
#pragma omp parallel for schedule(static) reduction(max : spread) \
    if (m.rows() >= kParallelThreshold)
  for (long long i = 0; i < rows; ++i) {
    const auto r = m.row(static_cast<std::size_t>(i));
    if (r.empty()) continue;
    const auto [lo, hi] = std::minmax_element(r.begin(), r.end());
    spread = std::max(spread, *hi - *lo);
  }
  return spread;
}

}  // namespace pushsum::kernels::parallel

#pragma once

// Data-parallel inner loops. `serial` is the reference; `parallel` is the
// OpenMP version and must produce bit-identical results (every output entry
// is computed by exactly one thread in the same summation order).

#include <span>
#include <vector>

#include "pushsum/matrix.hpp"

namespace pushsum::kernels {

namespace serial {

Matrix multiply(const Matrix& a, const Matrix& b);
std::vector<double> multiply(const Matrix& a, std::span<const double> x);
std::vector<double> column_sums(const Matrix& m);
/// max over rows of (max - min) within the row.
double max_row_spread(const Matrix& m);

}  // namespace serial

namespace parallel {

Matrix multiply(const Matrix& a, const Matrix& b);
std::vector<double> multiply(const Matrix& a, std::span<const double> x);
std::vector<double> column_sums(const Matrix& m);
double max_row_spread(const Matrix& m);

}  // namespace parallel

/// Below this dimension the OpenMP versions run single-threaded.
inline constexpr std::size_t kParallelThreshold = 64;

}  // namespace pushsum::kernels

#pragma once

#include <cstddef>
#include <vector>

namespace cspphase {

// Row-major dense matrix used for the small q x q and q^2 x q^2 operators.
struct DenseMatrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> data;

  DenseMatrix() = default;
  DenseMatrix(std::size_t r, std::size_t c, double fill = 0.0) : rows(r), cols(c), data(r * c, fill) {}

  double& operator()(std::size_t i, std::size_t j) { return data[i * cols + j]; }
  double operator()(std::size_t i, std::size_t j) const { return data[i * cols + j]; }

  static DenseMatrix identity(std::size_t n) {
    DenseMatrix m(n, n);
    for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
    return m;
  }

  double trace() const {
    double t = 0.0;
    for (std::size_t i = 0; i < rows && i < cols; ++i) t += (*this)(i, i);
    return t;
  }
};

DenseMatrix operator*(const DenseMatrix& a, const DenseMatrix& b);
DenseMatrix kron(const DenseMatrix& a, const DenseMatrix& b);
DenseMatrix transpose(const DenseMatrix& a);
double max_abs_diff(const DenseMatrix& a, const DenseMatrix& b);

}  // namespace cspphase

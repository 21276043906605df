#include "cspphase/spectral.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>

#include "cspphase/errors.hpp"

namespace cspphase {

DenseMatrix operator*(const DenseMatrix& a, const DenseMatrix& b) {
  if (a.cols != b.rows) throw ConfigError("matrix product: shape mismatch");
  DenseMatrix c(a.rows, b.cols);
  for (std::size_t i = 0; i < a.rows; ++i)
    for (std::size_t l = 0; l < a.cols; ++l) {
      const double x = a(i, l);
      if (x == 0.0) continue;
      for (std::size_t j = 0; j < b.cols; ++j) c(i, j) += x * b(l, j);
    }
  return c;
}

DenseMatrix kron(const DenseMatrix& a, const DenseMatrix& b) {
  DenseMatrix c(a.rows * b.rows, a.cols * b.cols);
  for (std::size_t i = 0; i < a.rows; ++i)
    for (std::size_t j = 0; j < a.cols; ++j)
      for (std::size_t k = 0; k < b.rows; ++k)
        for (std::size_t l = 0; l < b.cols; ++l) c(i * b.rows + k, j * b.cols + l) = a(i, j) * b(k, l);
  return c;
}

DenseMatrix transpose(const DenseMatrix& a) {
  DenseMatrix t(a.cols, a.rows);
  for (std::size_t i = 0; i < a.rows; ++i)
    for (std::size_t j = 0; j < a.cols; ++j) t(j, i) = a(i, j);
  return t;
}

double max_abs_diff(const DenseMatrix& a, const DenseMatrix& b) {
  if (a.rows != b.rows || a.cols != b.cols) return std::numeric_limits<double>::infinity();
  double d = 0.0;
  for (std::size_t i = 0; i < a.data.size(); ++i) d = std::max(d, std::abs(a.data[i] - b.data[i]));
  return d;
}

DenseMatrix phi_matrix(const WeightTable& psi, int h, int h2, double xi) {
  const int q = psi.q();
  const int k = psi.k();
  if (h < 0 || h2 < 0 || h >= k || h2 >= k || h == h2) throw ConfigError("phi_matrix: invalid positions");
  if (!(xi > 0.0)) throw ConfigError("phi_matrix: xi must be positive");
  DenseMatrix m(static_cast<std::size_t>(q), static_cast<std::size_t>(q));
  std::vector<int> tuple(static_cast<std::size_t>(k));
  for (std::size_t idx = 0; idx < psi.size(); ++idx) {
    if (psi[idx] == 0.0) continue;
    WeightTable::tuple_of(idx, q, tuple);
    m(static_cast<std::size_t>(tuple[static_cast<std::size_t>(h)]),
      static_cast<std::size_t>(tuple[static_cast<std::size_t>(h2)])) += psi[idx];
  }
  const double scale = std::pow(static_cast<double>(q), 1 - k) / xi;
  for (double& v : m.data) v *= scale;
  return m;
}

std::vector<double> symmetric_eigenvalues(const DenseMatrix& m) {
  if (m.rows != m.cols) throw ConfigError("eigenvalues: matrix must be square");
  if (m.rows == 0) return {};
  Eigen::MatrixXd a(static_cast<Eigen::Index>(m.rows), static_cast<Eigen::Index>(m.cols));
  for (std::size_t i = 0; i < m.rows; ++i)
    for (std::size_t j = 0; j < m.cols; ++j)
      a(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = 0.5 * (m(i, j) + m(j, i));
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(a, Eigen::EigenvaluesOnly);
  if (solver.info() != Eigen::Success) throw NumericRefusal("eigenvalues: solver failed");
  std::vector<double> out(m.rows);
  for (std::size_t i = 0; i < m.rows; ++i) out[i] = solver.eigenvalues()(static_cast<Eigen::Index>(i));
  return out;
}

namespace {

// Gram-Schmidt over the given columns, dropping dependent ones.
DenseMatrix orthonormalize(const std::vector<std::vector<double>>& columns) {
  std::vector<std::vector<double>> basis;
  for (auto v : columns) {
    for (const auto& b : basis) {
      double dot = 0.0;
      for (std::size_t i = 0; i < v.size(); ++i) dot += v[i] * b[i];
      for (std::size_t i = 0; i < v.size(); ++i) v[i] -= dot * b[i];
    }
    double norm = 0.0;
    for (double x : v) norm += x * x;
    norm = std::sqrt(norm);
    if (norm < 1e-10) continue;
    for (double& x : v) x /= norm;
    basis.push_back(std::move(v));
  }
  const std::size_t dim = columns.empty() ? 0 : columns.front().size();
  DenseMatrix out(dim, basis.size());
  for (std::size_t j = 0; j < basis.size(); ++j)
    for (std::size_t i = 0; i < dim; ++i) out(i, j) = basis[j][i];
  return out;
}

}  // namespace

DenseMatrix ones_complement_basis(std::size_t q) {
  std::vector<std::vector<double>> cols;
  for (std::size_t i = 0; i + 1 < q; ++i) {
    std::vector<double> v(q, 0.0);
    v[i] = 1.0;
    v[i + 1] = -1.0;
    cols.push_back(std::move(v));
  }
  return orthonormalize(cols);
}

DenseMatrix restrict_to(const DenseMatrix& m, const DenseMatrix& basis) {
  return transpose(basis) * (m * basis);
}

std::vector<EigenvalueGroup> merge_eigenvalues(const std::vector<double>& sorted, double tol) {
  std::vector<EigenvalueGroup> out;
  for (double v : sorted) {
    if (!out.empty() && std::abs(v - out.back().value) <= tol) {
      ++out.back().multiplicity;
    } else {
      out.push_back({v, 1});
    }
  }
  return out;
}

SpectralReport spectral_report(const ConstraintModel& model) {
  if (model.k() < 2) throw ConfigError("spectral: arity must be at least 2");
  const std::size_t q = static_cast<std::size_t>(model.q());
  SpectralReport r;
  r.phi = DenseMatrix(q, q);
  r.xi_op = DenseMatrix(q * q, q * q);
  for (const auto& [p, m] : model.phi_orbit()) {
    for (std::size_t i = 0; i < m.data.size(); ++i) r.phi.data[i] += p * m.data[i];
    const DenseMatrix km = kron(m, m);
    for (std::size_t i = 0; i < km.data.size(); ++i) r.xi_op.data[i] += p * km.data[i];
  }
  r.eig_phi = symmetric_eigenvalues(r.phi);
  r.eig_xi_full = symmetric_eigenvalues(r.xi_op);

  const DenseMatrix u = ones_complement_basis(q);
  const DenseMatrix basis_e = kron(u, u);
  r.eig_xi_E = symmetric_eigenvalues(restrict_to(r.xi_op, basis_e));

  std::vector<std::vector<double>> cols;
  std::vector<double> ones(q * q, 1.0);
  cols.push_back(ones);
  for (std::size_t i = 0; i + 1 < q * q; ++i) {
    std::vector<double> v(q * q, 0.0);
    v[i] = 1.0;
    v[i + 1] = -1.0;
    cols.push_back(std::move(v));
  }
  const DenseMatrix with_ones = orthonormalize(cols);
  DenseMatrix basis_ep(q * q, with_ones.cols - 1);
  for (std::size_t i = 0; i < q * q; ++i)
    for (std::size_t j = 1; j < with_ones.cols; ++j) basis_ep(i, j - 1) = with_ones(i, j);
  r.eig_xi_Eprime = symmetric_eigenvalues(restrict_to(r.xi_op, basis_ep));

  r.lambda_max_E = r.eig_xi_E.empty() ? 0.0 : r.eig_xi_E.back();
  if (r.lambda_max_E > 1e-12) {
    r.d_ks = 1.0 / ((model.k() - 1) * r.lambda_max_E);
  }
  return r;
}

double ks_threshold(const ConstraintModel& model) { return spectral_report(model).d_ks; }

}  // namespace cspphase

#pragma once

#include <limits>
#include <vector>

#include "cspphase/dense.hpp"
#include "cspphase/model.hpp"

namespace cspphase {

// Phi_{psi,h,h'}(w, w') = q^{1-k} xi^{-1} sum_{tau: tau_h = w, tau_h' = w'} psi(tau)
DenseMatrix phi_matrix(const WeightTable& psi, int h, int h2, double xi);

struct EigenvalueGroup {
  double value;
  int multiplicity;
};

struct SpectralReport {
  DenseMatrix phi;              // E[Phi_{Psi,1,2}], q x q
  DenseMatrix xi_op;            // E[Phi_Psi (x) Phi_Psi], q^2 x q^2
  std::vector<double> eig_phi;  // ascending, all q eigenvalues
  std::vector<double> eig_xi_E;       // restricted to E, (q-1)^2 eigenvalues
  std::vector<double> eig_xi_Eprime;  // restricted to (1 (x) 1)^perp, q^2 - 1 eigenvalues
  std::vector<double> eig_xi_full;
  double lambda_max_E = 0.0;
  double d_ks = std::numeric_limits<double>::infinity();
};

SpectralReport spectral_report(const ConstraintModel& model);
double ks_threshold(const ConstraintModel& model);

// Eigenvalues of a symmetric matrix, ascending.
std::vector<double> symmetric_eigenvalues(const DenseMatrix& m);
// Orthonormal basis of the complement of the all-ones vector in R^q (columns).
DenseMatrix ones_complement_basis(std::size_t q);
// B^T M B
DenseMatrix restrict_to(const DenseMatrix& m, const DenseMatrix& basis);
std::vector<EigenvalueGroup> merge_eigenvalues(const std::vector<double>& sorted, double tol = 1e-8);

}  // namespace cspphase

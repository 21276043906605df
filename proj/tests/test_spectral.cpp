#include <gtest/gtest.h>

#include <cmath>

#include "cspphase/model.hpp"
#include "cspphase/spectral.hpp"

using namespace cspphase;

TEST(Spectral, ColoringKsIsSquare) {
  for (int q : {3, 4, 5, 7}) {
    const auto m = make_hypergraph_coloring(2, q);
    EXPECT_NEAR(ks_threshold(m), (q - 1.0) * (q - 1.0), 1e-9) << q;
  }
}

TEST(Spectral, ColoringPhiIsAntiIdentity) {
  const int q = 4;
  const auto r = spectral_report(make_hypergraph_coloring(2, q));
  for (int a = 0; a < q; ++a)
    for (int b = 0; b < q; ++b)
      EXPECT_NEAR(r.phi(static_cast<std::size_t>(a), static_cast<std::size_t>(b)), a == b ? 0.0 : 1.0 / (q - 1), 1e-14);
  // Eig(Phi) = {1, -1/(q-1) x (q-1)}
  EXPECT_NEAR(r.eig_phi.back(), 1.0, 1e-12);
  for (int i = 0; i + 1 < q; ++i) EXPECT_NEAR(r.eig_phi[static_cast<std::size_t>(i)], -1.0 / (q - 1), 1e-12);
}

TEST(Spectral, NaesatLambda) {
  const auto r = spectral_report(make_naesat(3));
  EXPECT_NEAR(r.lambda_max_E, 1.0 / 9.0, 1e-12);
  EXPECT_NEAR(r.d_ks, 4.5, 1e-9);
  ASSERT_EQ(r.eig_xi_E.size(), 1u);
  ASSERT_EQ(r.eig_xi_Eprime.size(), 3u);
}

TEST(Spectral, PhiIsDoublyStochastic) {
  for (const auto& m : {make_naesat(4), make_balanced_sat(3), make_hypergraph_coloring(3, 3), make_parity_majority(3)}) {
    const auto r = spectral_report(m);
    const std::size_t q = static_cast<std::size_t>(m.q());
    for (std::size_t a = 0; a < q; ++a) {
      double row = 0.0, col = 0.0;
      for (std::size_t b = 0; b < q; ++b) {
        row += r.phi(a, b);
        col += r.phi(b, a);
      }
      EXPECT_NEAR(row, 1.0, 1e-12) << m.name();
      EXPECT_NEAR(col, 1.0, 1e-12) << m.name();
    }
    EXPECT_EQ(r.eig_xi_E.size(), (q - 1) * (q - 1));
    EXPECT_EQ(r.eig_xi_Eprime.size(), q * q - 1);
    EXPECT_EQ(r.eig_xi_full.size(), q * q);
  }
}

TEST(Spectral, XiIsKroneckerForPointMassP) {
  // a single weight function: Xi = Phi (x) Phi
  const auto m = make_hypergraph_coloring(2, 3);
  const auto r = spectral_report(m);
  EXPECT_LT(max_abs_diff(r.xi_op, kron(r.phi, r.phi)), 1e-14);
  // eigenvalues on E are products of nontrivial ones
  for (double v : r.eig_xi_E) EXPECT_NEAR(v, 0.25, 1e-12);
}

TEST(Spectral, KsMatchesRayleighOnE) {
  // d_KS = 1 / ((k-1) lambda_max_E)
  for (const auto& m : {make_naesat(3), make_naesat(5), make_hypergraph_coloring(3, 4), make_balanced_sat(4)}) {
    const auto r = spectral_report(m);
    EXPECT_NEAR(r.d_ks, 1.0 / ((m.k() - 1) * r.lambda_max_E), 1e-9 * r.d_ks);
  }
}

TEST(Spectral, HelpersAreConsistent) {
  const auto b = ones_complement_basis(5);
  const auto btb = transpose(b) * b;
  EXPECT_LT(max_abs_diff(btb, DenseMatrix::identity(4)), 1e-13);
  for (std::size_t j = 0; j < 4; ++j) {
    double s = 0.0;
    for (std::size_t i = 0; i < 5; ++i) s += b(i, j);
    EXPECT_NEAR(s, 0.0, 1e-13);
  }
  const std::vector<double> ev{0.1, 0.1 + 1e-10, 0.5, 0.5, 0.5, 0.9};
  const auto g = merge_eigenvalues(ev);
  ASSERT_EQ(g.size(), 3u);
  EXPECT_EQ(g[0].multiplicity, 2);
  EXPECT_EQ(g[1].multiplicity, 3);
}

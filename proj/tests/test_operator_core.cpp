#include <doctest.h>

#include <cmath>

#include "speclab/operator_core.hpp"

using namespace speclab;

namespace {
CMat diag2(double a, double b) {
  CMat m = CMat::Zero(2, 2);
  m(0, 0) = a;
  m(1, 1) = b;
  return m;
}
}  // namespace

TEST_CASE("decompose: diagonal and Pauli cases") {
  const HermitianOperator H(diag2(2, -1));
  CHECK(H.spectrum().eigenvalues(0) == doctest::Approx(-1));
  CHECK(H.spectrum().eigenvalues(1) == doctest::Approx(2));
  CMat X = CMat::Zero(2, 2);
  X(0, 1) = X(1, 0) = 1;
  const HermitianOperator P(X);
  CHECK(P.spectrum().eigenvalues(0) == doctest::Approx(-1));
  CHECK(P.spectrum().eigenvalues(1) == doctest::Approx(1));
}

TEST_CASE("decompose: random 8x8 rebuilds its entries") {
  const HermitianOperator H(random_hermitian(8, 11));
  const auto& s = H.spectrum();
  const CMat R = s.eigenvectors * s.eigenvalues.cast<cd>().asDiagonal() * s.eigenvectors.adjoint();
  CHECK((R - H.entries()).norm() / H.entries().norm() < 1e-10);
  CHECK((s.eigenvectors.adjoint() * s.eigenvectors - CMat::Identity(8, 8)).norm() < 1e-10);
  for (Eigen::Index k = 1; k < 8; ++k) CHECK(s.eigenvalues(k) >= s.eigenvalues(k - 1));
}

TEST_CASE("non-Hermitian input is rejected") {
  CMat A = CMat::Zero(2, 2);
  A(0, 1) = 1;
  CHECK_THROWS_AS(HermitianOperator{A}, ValidationError);
}

TEST_CASE("heat kernel") {
  const HermitianOperator H(random_hermitian(6, 3));
  CHECK((heat(H, 0) - CMat::Identity(6, 6)).norm() < 1e-14);
  const HermitianOperator Dg(diag2(0.5, -2));
  const CMat E = heat(Dg, 0.7);
  CHECK(E(0, 0).real() == doctest::Approx(std::exp(-0.49 * 0.25)));
  CHECK(E(1, 1).real() == doctest::Approx(std::exp(-0.49 * 4)));
  // Taylor series of e^{-t^2 H^2} when |t^2 H^2| < 1.
  const double t = 0.3;
  const CMat X = -t * t * H.entries() * H.entries();
  CMat term = CMat::Identity(6, 6), sum = term;
  for (int k = 1; k < 40; ++k) {
    term = term * X / static_cast<double>(k);
    sum += term;
  }
  CHECK((heat(H, t) - sum).norm() < 1e-10);
}

TEST_CASE("Cayley transform") {
  const HermitianOperator Z(CMat::Zero(3, 3));
  CHECK((cayley(Z) + CMat::Identity(3, 3)).norm() < 1e-14);
  const HermitianOperator one(CMat::Constant(1, 1, 1.0));
  CHECK(std::abs(cayley(one)(0, 0) - cd(0, -1)) < 1e-14);
  // Eigenvalues of the Cayley transform are (l - i)/(l + i).
  const HermitianOperator H(random_hermitian(5, 7));
  const CMat k = cayley(H);
  const auto& s = H.spectrum();
  const CMat kd = s.eigenvectors.adjoint() * k * s.eigenvectors;
  for (Eigen::Index i = 0; i < 5; ++i) {
    const double l = s.eigenvalues(i);
    CHECK(std::abs(kd(i, i) - (l - kI) / (l + kI)) < 1e-12);
  }
}

TEST_CASE("spectral projection and split parts") {
  const HermitianOperator H(diag2(0.1, 2));
  const CMat P = spectral_projection(H, 1);
  CHECK((P - diag2(1, 0)).norm() < 1e-14);
  const SplitParts sp = split_parts(H, 1);
  CHECK((sp.A - diag2(0.1, 0)).norm() < 1e-14);
  CHECK((sp.B - diag2(1, 2)).norm() < 1e-14);
  CHECK((sp.C - diag2(0, 2)).norm() < 1e-14);
  const SplitParts full = split_parts(H, 10);
  CHECK((full.A - H.entries()).norm() < 1e-14);
  CHECK(full.C.norm() < 1e-14);
  CHECK((full.B - CMat::Identity(2, 2)).norm() < 1e-14);

  const HermitianOperator R(random_hermitian(8, 5, 2.0));
  const CMat Pr = spectral_projection(R, 0.5);
  int inside = 0;
  for (Eigen::Index k = 0; k < 8; ++k) inside += std::abs(R.spectrum().eigenvalues(k)) < 0.5;
  CHECK(std::abs(Pr.trace().real() - inside) < 1e-10);
  const SplitParts rs = split_parts(R, 0.5);
  CHECK((rs.A + rs.C - R.entries()).norm() < 1e-12);
  CHECK((rs.P * rs.C).norm() < 1e-12);
}

TEST_CASE("branch matching") {
  const HermitianOperator H(random_hermitian(5, 9));
  const auto& s = H.spectrum();
  auto id = match_eigenbranches(s, s);
  for (int k = 0; k < 5; ++k) CHECK(id[k] == k);
  SpectralDecomposition sw = s;
  sw.eigenvectors.col(1).swap(sw.eigenvectors.col(3));
  std::swap(sw.eigenvalues(1), sw.eigenvalues(3));
  auto p = match_eigenbranches(s, sw);
  CHECK(p[1] == 3);
  CHECK(p[3] == 1);
  CHECK(p[0] == 0);
  // D_u = diag(u - 0.5, 0.3): branches keep their identity across u = 0.5.
  const SpectralDecomposition a = HermitianOperator(diag2(-0.1, 0.3)).spectrum();
  const SpectralDecomposition b = HermitianOperator(diag2(0.1, 0.3)).spectrum();
  auto q = match_eigenbranches(a, b);
  CHECK(q[0] == 0);
  CHECK(q[1] == 1);
}

TEST_CASE("operator path samples") {
  const HermitianOperator d0(random_hermitian(4, 1)), d1(random_hermitian(4, 2));
  const OperatorPath p(d0, d1);
  CHECK((p.sample(0).entries() - d0.entries()).norm() == 0);
  CHECK((p.sample(1).entries() - d1.entries()).norm() == 0);
  CHECK((p.sample(0.25).entries() - (0.75 * d0.entries() + 0.25 * d1.entries())).norm() < 1e-15);
}

TEST_CASE("random unitary is unitary") {
  const CMat U = random_unitary(6, 4);
  CHECK((U.adjoint() * U - CMat::Identity(6, 6)).norm() < 1e-12);
}

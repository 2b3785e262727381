#include <doctest.h>

#include <cmath>

#include "speclab/spectral_flow.hpp"

using namespace speclab;

namespace {

HermitianOperator scalar(double v) { return HermitianOperator(CMat::Constant(1, 1, v)); }

OperatorPath circle_path(int cutoff, int n) {
  const int N = 2 * cutoff + 1;
  CMat D = CMat::Zero(N, N), D1 = CMat::Zero(N, N);
  for (int i = 0; i < N; ++i) {
    D(i, i) = i - cutoff;
    D1(i, i) = i - cutoff + n;
  }
  return OperatorPath(HermitianOperator(D), HermitianOperator(D1));
}

}  // namespace

TEST_CASE("spectral flow: constant and scalar paths") {
  const OperatorPath c(scalar(0.7), scalar(0.7));
  CHECK(spectral_flow_tracking(c).total == 0);
  CHECK(spectral_flow_winding(c).total == 0);
  const OperatorPath s(scalar(-0.5), scalar(0.5));
  CHECK(spectral_flow_tracking(s).total == 1);
  CHECK(spectral_flow_winding(s).total == 1);
  const OperatorPath d(scalar(0.5), scalar(-0.5));
  CHECK(spectral_flow_tracking(d).total == -1);
}

TEST_CASE("spectral flow: circle windings") {
  for (int n : {1, 2, 3}) {
    const OperatorPath p = circle_path(64, n);
    const auto r = spectral_flow_tracking(p);
    CHECK(r.total == n);
    CHECK(r.crossing_sum == n);
    CHECK(spectral_flow_winding(p).total == n);
  }
}

TEST_CASE("spectral flow: fast branches through the counting level") {
  // Branches that move exactly the step bound per step must not slip past a
  // counting level.
  for (double l0 : {0.25, 0.5, 0.75}) {
    TrackingOptions o;
    o.lambda0 = l0;
    CHECK(spectral_flow_tracking(circle_path(16, 2), o).total == 2);
  }
}

TEST_CASE("spectral flow: methods agree on random paths, additivity, antisymmetry") {
  for (int t = 0; t < 20; ++t) {
    const OperatorPath p(HermitianOperator(random_hermitian(6, 100 + t, 2.0)),
                         HermitianOperator(random_hermitian(6, 200 + t, 2.0)));
    const int a = spectral_flow_tracking(p).total;
    CHECK(a == spectral_flow_winding(p).total);
    const int left = spectral_flow_tracking(p, 0.0, 0.37).total, right = spectral_flow_tracking(p, 0.37, 1.0).total;
    CHECK(a == left + right);
  }
  const CMat D = random_hermitian(6, 7, 2.0);
  const CMat g = random_unitary(6, 8);
  const OperatorPath fwd(HermitianOperator(D), HermitianOperator(CMat(g * D * g.adjoint())));
  const OperatorPath bwd(HermitianOperator(D), HermitianOperator(CMat(g.adjoint() * D * g)));
  CHECK(spectral_flow_tracking(fwd).total == -spectral_flow_tracking(bwd).total);
}

TEST_CASE("truncated eta and xi") {
  CHECK(eta_truncated(HermitianOperator(CMat::Zero(3, 3)), 1.0) == doctest::Approx(0.0));
  CMat d = CMat::Zero(2, 2);
  d(0, 0) = 1;
  d(1, 1) = -2;
  CHECK(eta_truncated(HermitianOperator(d), 1.0) == doctest::Approx(std::erfc(1.0) - std::erfc(2.0)).epsilon(1e-12));
  const CMat R = random_hermitian(5, 4);
  CHECK(eta_truncated(HermitianOperator(CMat(-R)), 0.5) == doctest::Approx(-eta_truncated(HermitianOperator(R), 0.5)));
  CHECK(xi_truncated(HermitianOperator(CMat::Zero(4, 4)), 1.0) == doctest::Approx(2.0));
  CMat s = CMat::Zero(2, 2);
  s(0, 0) = 1;
  s(1, 1) = -1;
  CHECK(std::abs(xi_truncated(HermitianOperator(s), 1.0)) < 1e-14);
  const CMat U = random_unitary(5, 9);
  CHECK(xi_truncated(HermitianOperator(CMat(U.adjoint() * R * U)), 0.5) ==
        doctest::Approx(xi_truncated(HermitianOperator(R), 0.5)).epsilon(1e-10));
}

TEST_CASE("eta derivative: diagonal family against the erfc derivative") {
  CMat a = CMat::Zero(2, 2), b = CMat::Zero(2, 2);
  a(0, 0) = 1;
  a(1, 1) = -2;
  b(0, 0) = 2;
  b(1, 1) = -2;
  const OperatorPath p{HermitianOperator(a), HermitianOperator(b)};
  const double eps = 0.8, u = 0.3;
  const auto c = eta_derivative_check(p, u, eps, 0.0, TraceBackend::kMatrix);
  const double v = c.u_used;
  const double exact = -2 * eps / std::sqrt(kPi) * std::exp(-eps * eps * (1 + v) * (1 + v));
  CHECK(std::abs(c.finite_difference - exact) < 1e-9);
  CHECK(std::abs(c.E) < 1e-14);
  CHECK(c.residual() < 1e-9);
  const OperatorPath k{HermitianOperator(a), HermitianOperator(a)};
  const auto z = eta_derivative_check(k, u, eps, 0.0, TraceBackend::kMatrix);
  CHECK(std::abs(z.finite_difference) < 1e-12);
  CHECK(std::abs(z.local) < 1e-12);
}

TEST_CASE("eta derivative: random 8x8 families") {
  for (int t = 0; t < 10; ++t) {
    const OperatorPath p(HermitianOperator(random_hermitian(8, 300 + t, 2.0)),
                         HermitianOperator(random_hermitian(8, 400 + t, 2.0)));
    CHECK(eta_derivative_check(p, 0.4, 0.5, 0.0, TraceBackend::kMatrix).residual() < 1e-6);
  }
}

TEST_CASE("Getzler integral") {
  const OperatorPath s(scalar(-0.5), scalar(0.5));
  for (double eps : {1.0, 4.0}) CHECK(getzler_integral(s, eps).value == doctest::Approx(std::erf(eps / 2)).epsilon(1e-8));
  const OperatorPath c(scalar(0.3), scalar(0.3));
  CHECK(std::abs(getzler_integral(c, 2.0).value) < 1e-14);
  CHECK(std::abs(getzler_integral(circle_path(64, 1), 4.0).value - 1.0) < 1e-6);
}

#include <doctest.h>

#include <cmath>

#include <unsupported/Eigen/MatrixFunctions>

#include "speclab/jlo_eta.hpp"
#include "speclab/rng.hpp"

using namespace speclab;

namespace {

double factorial(int n) { return std::tgamma(n + 1.0); }

CMat random_matrix(int n, CounterRng& g) {
  CMat m(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) m(i, j) = cd(2 * g.uniform() - 1, 2 * g.uniform() - 1);
  return m;
}

}  // namespace

TEST_CASE("divided differences of exp: closed forms") {
  CHECK(divided_difference_exp({0.0}) == doctest::Approx(1.0));
  CHECK(divided_difference_exp({-1.5}) == doctest::Approx(std::exp(-1.5)));
  CHECK(divided_difference_exp({-3.0, -1.0}) == doctest::Approx((std::exp(-1.0) - std::exp(-3.0)) / 2).epsilon(1e-14));
  CHECK(divided_difference_exp({-2.0, -2.0, -2.0}) == doctest::Approx(std::exp(-2.0) / 2).epsilon(1e-13));
  for (int n = 0; n <= 8; ++n)
    CHECK(divided_difference_exp(std::vector<double>(n + 1, 0.0)) == doctest::Approx(1 / factorial(n)).epsilon(1e-13));
  // Node order does not matter.
  CHECK(divided_difference_exp({-4.0, -0.3, -2.2, -0.3}) ==
        doctest::Approx(divided_difference_exp({-0.3, -2.2, -0.3, -4.0})).epsilon(1e-14));
}

TEST_CASE("divided differences: recurrence against the bidiagonal oracle") {
  CounterRng g(11);
  for (int t = 0; t < 50; ++t) {
    const int n = 1 + t % 6;
    std::vector<double> nodes;
    const double centre = -30 * g.uniform();
    for (int i = 0; i <= n; ++i) nodes.push_back(centre - (t % 2 ? 1e-4 : 5.0) * g.uniform());
    const double a = divided_difference_exp(nodes), b = divided_difference_exp_bidiagonal(nodes);
    CHECK(std::abs(a - b) <= 1e-10 * std::abs(b) + 1e-300);
  }
}

TEST_CASE("bracket with H = 0 is the normalized trace") {
  CounterRng g(12);
  const int d = 4;
  const HeatChain heat(RVec::Zero(d), CMat::Identity(d, d));
  for (int n = 0; n <= 4; ++n) {
    std::vector<CMat> A;
    CMat prod = CMat::Identity(d, d);
    for (int i = 0; i <= n; ++i) {
      A.push_back(random_matrix(d, g));
      prod = prod * A.back();
    }
    const cd expect = prod.trace() / factorial(n);
    CHECK(std::abs(simplex_bracket(heat, A) - expect) < 1e-10 * std::max(1.0, std::abs(expect)));
  }
}

TEST_CASE("chain engines agree") {
  CounterRng g(13);
  for (int t = 0; t < 8; ++t) {
    const int d = 5, n = 1 + t % 4;
    const HermitianOperator D(random_hermitian(d, 500 + t, 1.5));
    const HeatChain heat = HeatChain::for_operator(D, 0.8);
    std::vector<CMat> B;
    for (int i = 0; i < n; ++i) B.push_back(random_matrix(d, g));
    const CMat tup = heat.chain_tuple(B, false, 1e9);
    const CMat prn = heat.chain_tuple(B, true, 1e9);
    const CMat vl = heat.chain_van_loan(B);
    const CMat ct = heat.chain_contour(B, 32);
    const double s = std::max(1.0, vl.norm());
    CHECK((tup - vl).norm() < 1e-11 * s);
    CHECK((prn - tup).norm() < 1e-9 * s);
    CHECK((ct - vl).norm() < 1e-8 * s);
    const auto pre = heat.chain_contour_prefixes(B, 32);
    REQUIRE(pre.size() == B.size() + 1);
    for (int m = 0; m <= n; ++m) {
      const std::vector<CMat> head(B.begin(), B.begin() + m);
      const CMat ref = heat.chain_van_loan(head);
      CHECK((pre[m] - ref).norm() < 1e-8 * std::max(1.0, ref.norm()));
    }
  }
}

TEST_CASE("power series against Van Loan chains of copies") {
  CounterRng g(14);
  const int d = 4;
  const HeatChain heat = HeatChain::for_operator(HermitianOperator(random_hermitian(d, 77, 2.0)), 1.0);
  const CMat Q = random_matrix(d, g);
  const auto T = heat.power_series(Q, 6);
  REQUIRE(T.size() == 7);
  for (int m = 0; m <= 6; ++m) {
    const CMat ref = heat.chain_van_loan(std::vector<CMat>(m, Q));
    CHECK((T[m] - ref).norm() < 1e-10 * std::max(1.0, ref.norm()));
  }
}

TEST_CASE("n = 0 chain is the heat operator") {
  const HermitianOperator D(random_hermitian(5, 88));
  const double t = 0.7;
  const HeatChain heat = HeatChain::for_operator(D, t);
  const CMat W = heat.from_eigenbasis(heat.chain({}));
  const CMat ref = CMat(-t * t * D.entries() * D.entries()).exp();
  CHECK((W - ref).norm() < 1e-12);
}

TEST_CASE("pruning keeps a wide-spectrum chain accurate") {
  // Widely spread nodes make most tuples negligible; the pruned sum must
  // still match the exact block-matrix value.
  RVec mu(12);
  for (int i = 0; i < 12; ++i) mu(i) = -0.5 * i * i;
  const HeatChain heat(mu, random_unitary(12, 99));
  CounterRng g(15);
  std::vector<CMat> B;
  for (int i = 0; i < 3; ++i) B.push_back(random_matrix(12, g));
  const CMat ref = heat.chain_van_loan(B);
  CHECK((heat.chain_tuple(B, true, 1e9) - ref).norm() < 1e-9 * std::max(1.0, ref.norm()));
}

TEST_CASE("the tuple sum refuses oversized work") {
  const HeatChain heat(RVec::Constant(40, -1.0), CMat::Identity(40, 40));
  std::vector<CMat> B(6, CMat::Ones(40, 40));
  CHECK_THROWS(heat.chain_tuple(B, false, 1e6));
}

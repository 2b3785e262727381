#include <doctest.h>

#include <cmath>

#include "speclab/cyclic_algebra.hpp"
#include "speclab/operator_core.hpp"
#include "speclab/rng.hpp"

using namespace speclab;

namespace {

AlgebraElement random_element(int points, int rank, CounterRng& g) {
  AlgebraElement e;
  for (int p = 0; p < points; ++p) {
    CMat m(rank, rank);
    for (int i = 0; i < rank; ++i)
      for (int j = 0; j < rank; ++j) m(i, j) = cd(2 * g.uniform() - 1, 2 * g.uniform() - 1);
    e.values.push_back(m);
  }
  return e;
}

double max_dense(const CyclicChain& c, int top) {
  double w = 0;
  for (int d = 0; d <= top; ++d) {
    const CVec v = densify(c, d);
    if (v.size()) w = std::max(w, v.cwiseAbs().maxCoeff());
  }
  return w;
}

}  // namespace

TEST_CASE("b on degree 0 and 1") {
  CounterRng g(1);
  auto pool = std::make_shared<ElementPool>(2, 2);
  const int a0 = pool->add(random_element(2, 2, g)), a1 = pool->add(random_element(2, 2, g));
  CyclicChain c0(pool);
  c0.add(1.0, {a0});
  CHECK(hochschild_b(c0).empty());
  CyclicChain c1(pool);
  c1.add(1.0, {a0, a1});
  const CyclicChain b = hochschild_b(c1);
  std::vector<CMat> sum(2, CMat::Zero(2, 2));
  for (const ChainTerm& t : b.terms()) {
    REQUIRE(t.degree() == 0);
    for (int p = 0; p < 2; ++p) sum[p] += t.coef * (*pool)[t.slots[0]].values[p];
  }
  for (int p = 0; p < 2; ++p) {
    const CMat& x = (*pool)[a0].values[p];
    const CMat& y = (*pool)[a1].values[p];
    CHECK((sum[p] - (x * y - y * x)).norm() < 1e-14);
  }
}

TEST_CASE("B on degree 0 inserts the unit") {
  CounterRng g(2);
  auto pool = std::make_shared<ElementPool>(3, 1);
  const int a0 = pool->add(random_element(3, 1, g));
  CyclicChain c(pool);
  c.add(1.0, {a0});
  const CyclicChain B = connes_B(c);
  REQUIRE(B.terms().size() == 1);
  CHECK(B.terms()[0].slots == std::vector<int>{ElementPool::kUnit, a0});
  CHECK(std::abs(B.terms()[0].coef - cd(1.0)) < 1e-15);
}

TEST_CASE("b^2 = B^2 = (b+B)^2 = 0 and the trace map is a chain map") {
  CounterRng g(3);
  double worst = 0, chain = 0;
  for (int t = 0; t < 30; ++t) {
    const int n = t % 6;
    auto pool = std::make_shared<ElementPool>(3, 1);
    CyclicChain c(pool);
    for (int q = 0; q < 2; ++q) {
      std::vector<int> s;
      for (int k = 0; k <= n; ++k) s.push_back(pool->add(random_element(3, 1, g)));
      c.add(cd(g.uniform(), g.uniform()), s);
    }
    worst = std::max({worst, max_dense(hochschild_b(hochschild_b(c)), n + 2),
                      max_dense(connes_B(connes_B(c)), n + 2), max_dense(b_plus_B(b_plus_B(c)), n + 2)});
    auto pool2 = std::make_shared<ElementPool>(2, 2);
    CyclicChain m(pool2);
    std::vector<int> s;
    for (int k = 0; k <= n; ++k) s.push_back(pool2->add(random_element(2, 2, g)));
    m.add(1.0, s);
    for (int d = 0; d <= n + 1; ++d) {
      const CVec x = densify(matrix_trace_map(hochschild_b(m)), d) - densify(hochschild_b(matrix_trace_map(m)), d);
      const CVec y = densify(matrix_trace_map(connes_B(m)), d) - densify(connes_B(matrix_trace_map(m)), d);
      if (x.size()) chain = std::max(chain, x.cwiseAbs().maxCoeff());
      if (y.size()) chain = std::max(chain, y.cwiseAbs().maxCoeff());
    }
  }
  CHECK(worst < 1e-12);
  CHECK(chain < 1e-12);
}

TEST_CASE("constants in slots >= 1 do not change b") {
  CounterRng g(4);
  auto pool = std::make_shared<ElementPool>(3, 1);
  std::vector<int> s;
  for (int k = 0; k <= 3; ++k) s.push_back(pool->add(random_element(3, 1, g)));
  AlgebraElement shifted = (*pool)[s[2]];
  for (CMat& v : shifted.values) v(0, 0) += 2.5;
  std::vector<int> s2 = s;
  s2[2] = pool->add(shifted);
  CyclicChain a(pool), b(pool);
  a.add(1.0, s);
  b.add(1.0, s2);
  const ProductFunctional phi(3, 4, 9);
  CHECK(std::abs(phi.evaluate(hochschild_b(a)) - phi.evaluate(hochschild_b(b))) < 1e-12);
  CHECK(std::abs(phi.evaluate(connes_B(a)) - phi.evaluate(connes_B(b))) < 1e-12);
}

TEST_CASE("Chern character: coefficients and closedness") {
  CHECK(chern_coefficient(3, ChernConvention::kUnsigned) == doctest::Approx(6.0));
  CHECK(chern_coefficient(3, ChernConvention::kClosed) == doctest::Approx(-6.0));
  AlgebraElement gu;
  for (int p = 0; p < 3; ++p) gu.values.push_back(random_unitary(2, 20 + p));
  CHECK(gu.is_unitary());
  const int K = 3;
  const CyclicChain d = b_plus_B(chern_character(gu, K, ChernConvention::kClosed));
  const ProductFunctional phi(3, 2 * K + 2, 5);
  for (int deg = 0; deg <= 2 * K; ++deg) {
    const CyclicChain c = d.component(deg);
    if (c.empty()) continue;
    CHECK(std::abs(phi.evaluate(c)) <= 1e-10 * std::max(1.0, phi.magnitude(c)));
  }
  // The unit has a trivial Chern character.
  const AlgebraElement one = AlgebraElement::unit(3, 2);
  const CyclicChain u = b_plus_B(chern_character(one, K, ChernConvention::kClosed));
  for (int deg = 0; deg <= 2 * K; ++deg) CHECK(std::abs(phi.evaluate(u.component(deg))) < 1e-12);
}

TEST_CASE("de Rham Chern form and pairing") {
  const int M = 256;
  const double h = 2 * kPi / M;
  for (int n : {0, 1, 2}) {
    std::vector<CMat> g;
    for (int j = 0; j < M; ++j) g.push_back(CMat::Constant(1, 1, std::polar(1.0, n * j * h)));
    const DifferentialFormField f = de_rham_chern(g, h, true);
    for (Eigen::Index j = 0; j < f.degree1.size(); ++j) CHECK(std::abs(f.degree1(j) - n / (2 * kPi)) < 1e-10);
    CHECK(de_rham_pairing_periodic(f, h) == doctest::Approx(n).epsilon(1e-10));
  }
  // Phase 2 pi n accumulated inside the interior of a b-geometry.
  const BGeometry1D geo(-5, 5, 8, 0.05);
  std::vector<CMat> g;
  for (int j = 0; j < geo.size(); ++j) {
    const double x = geo.grid()(j);
    const double s = std::clamp((x + 5) / 10, 0.0, 1.0);
    const double r = s * s * s * (10 - 15 * s + 6 * s * s);
    g.push_back(CMat::Constant(1, 1, std::polar(1.0, 2 * kPi * 2 * r)));
  }
  const auto v = de_rham_pairing(de_rham_chern(g, geo.spacing()), geo);
  CHECK(std::abs(v.scalar().real() - 2.0) < 1e-4);
  CHECK(std::abs(de_rham_pairing(de_rham_chern(std::vector<CMat>(geo.size(), CMat::Identity(1, 1)), geo.spacing()),
                                  geo).scalar()) < 1e-14);
}

TEST_CASE("entire norm of the zero chain") {
  auto pool = std::make_shared<ElementPool>(2, 1);
  const CyclicChain z(pool);
  CHECK(entire_norm(z, 1.0, NormBackend::kOperator).value == 0.0);
}

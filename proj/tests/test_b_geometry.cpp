#include <doctest.h>

#include <cmath>

#include "speclab/dirac.hpp"
#include "speclab/rng.hpp"

using namespace speclab;

namespace {

// 3 + 5 e^y on both ends, continued by the junction value inside.
RVec model_function(const BGeometry1D& g, double c, double d, double quad = 0) {
  RVec f(g.size());
  for (int j = 0; j < g.size(); ++j) {
    double y = 0;
    for (End e : kEnds)
      if (g.in_end(e, j)) y = g.end_coordinate(e, j);
    f(j) = c + d * std::exp(y) + quad * std::exp(2 * y);
  }
  return f;
}

MassProfile diag_mass(double a, double b, double coupling) {
  MassProfile m;
  m.left_limit = CMat::Zero(2, 2);
  m.left_limit(0, 0) = a;
  m.left_limit(1, 1) = b;
  m.right_limit = m.left_limit;
  const CMat W0 = m.left_limit;
  m.W = [W0, coupling](double x) {
    CMat W = W0;
    W(0, 1) = W(1, 0) = coupling / std::cosh(x);
    return W;
  };
  return m;
}

}  // namespace

TEST_CASE("geometry: weights and grid") {
  const BGeometry1D g(-5, 5, 20, 0.05);
  CHECK(g.weights().sum() == doctest::Approx(g.total_length()).epsilon(1e-12));
  for (int j = 1; j < g.size(); ++j) CHECK(g.grid()(j) > g.grid()(j - 1));
}

TEST_CASE("split_exp on model functions") {
  const BGeometry1D g(-5, 5, 12, 0.05);
  const BFunction c = split_exp(model_function(g, 3, 0), g);
  for (End e : kEnds) {
    CHECK(std::abs(c.end_constant[int(e)](0, 0) - 3.0) < 1e-12);
    for (const CMat& v : c.end_decaying[int(e)]) CHECK(std::abs(v(0, 0)) < 1e-10);
  }
  const BFunction m = split_exp(model_function(g, 3, 5), g);
  for (End e : kEnds) {
    // The constant is read off the outermost samples, where 5 e^y is ~1e-5.
    CHECK(std::abs(m.end_constant[int(e)](0, 0) - 3.0) < 1e-4);
    const auto [b, f] = g.end_range(e);
    for (int j = b; j < f; ++j)
      if (g.end_coordinate(e, j) > -2) CHECK(std::abs(m.end_decaying[int(e)][j - b](0, 0) - 5.0) < 1e-3);
  }
  const BFunction q = split_exp(model_function(g, 3, 5, 1), g);
  for (End e : kEnds) CHECK(std::abs(q.end_constant[int(e)](0, 0) - 3.0) < 1e-4);
}

TEST_CASE("b-norm") {
  const BGeometry1D g(-5, 5, 12, 0.05);
  CHECK(b_norm(split_exp(RVec(RVec::Ones(g.size())), g)) == doctest::Approx(1.0));
  // Submultiplicativity on random smooth pairs.
  CounterRng rng(3);
  for (int trial = 0; trial < 50; ++trial) {
    const double a1 = 2 * rng.uniform() - 1, a2 = 2 * rng.uniform() - 1, b1 = 2 * rng.uniform() - 1,
                 b2 = 2 * rng.uniform() - 1;
    RVec f = model_function(g, a1, a2), h = model_function(g, b1, b2);
    for (int j = 0; j < g.size(); ++j) {
      const double x = g.grid()(j);
      if (g.is_interior(j)) {
        f(j) += 0.3 * std::sin(x) * (x - 5) * (x + 5) / 25;
        h(j) += 0.2 * std::cos(2 * x) * (x - 5) * (x + 5) / 25;
      }
    }
    const double nf = b_norm(split_exp(f, g)), nh = b_norm(split_exp(h, g));
    const double nfh = b_norm(split_exp(RVec(f.cwiseProduct(h)), g));
    CHECK(nfh <= nf * nh * (1 + 1e-9));
  }
}

TEST_CASE("regularized integral") {
  const BGeometry1D g(-5, 5, 20, 0.01);
  // Interior 8 over length 10; each end contributes int 5 e^y = 5.
  const auto r = regularized_integral(split_exp(model_function(g, 3, 5), g));
  CHECK(std::abs(r.scalar().real() - 90.0) < 1e-3);
  // y e^y on both ends: -1 each.
  RVec f = RVec::Zero(g.size());
  for (int j = 0; j < g.size(); ++j)
    for (End e : kEnds)
      if (g.in_end(e, j)) {
        const double y = g.end_coordinate(e, j);
        f(j) = y * std::exp(y);
      }
  CHECK(std::abs(regularized_integral(split_exp(f, g)).scalar().real() + 2.0) < 1e-4);
  // Interior support: the plain integral.
  RVec bump = RVec::Zero(g.size());
  for (int j = 0; j < g.size(); ++j) {
    const double x = g.grid()(j);
    bump(j) = std::abs(x) < 4 ? std::exp(-1 / (1 - x * x / 16)) : 0.0;
  }
  CHECK(std::abs(regularized_integral(split_exp(bump, g)).scalar().real() - g.weights().dot(bump)) < 1e-12);
}

TEST_CASE("Dirac operator: hermitian, boundary data, indicial family") {
  const BGeometry1D g(-3, 3, 4, 0.2);
  const BDiracOperator D(g, diag_mass(1, 2, 0.5));
  const CMat M = D.dense();
  CHECK((M - M.adjoint()).norm() < 1e-12 * M.norm());
  CHECK(D.boundary_gap() == doctest::Approx(1.0));
  for (End e : kEnds) {
    const CMat dD = D.boundary_operator(e);
    CHECK((D.indicial(0, e) - dD).norm() < 1e-14);
    for (double l : {-2.0, 0.3, 5.0}) {
      const CMat I = D.indicial(l, e);
      const CMat expect = dD * dD + l * l * CMat::Identity(dD.rows(), dD.cols());
      CHECK((I.adjoint() * I - expect).norm() < 1e-12);
      const Eigen::JacobiSVD<CMat> svd(I);
      CHECK(svd.singularValues().minCoeff() >= D.boundary_gap() - 1e-12);
    }
  }
}

TEST_CASE("Dirac operator: Jackiw-Rebbi mode") {
  // k = 1, W from -1 to +1 across the interior: one interior zero mode.
  const BGeometry1D g(-5, 5, 6, 0.2);
  MassProfile m;
  m.left_limit = CMat::Constant(1, 1, -1.0);
  m.right_limit = CMat::Constant(1, 1, 1.0);
  m.W = [](double x) { return CMat::Constant(1, 1, std::tanh(2 * x)); };
  const BDiracOperator D(g, m);
  const HermitianOperator H = D.hermitian();
  const auto& s = H.spectrum();
  // The truncated lattice carries a second zero mode at its outer edge, and the
  // two may hybridize; the near-zero subspace holds exactly one interior state.
  double interior_weight = 0;
  int near_zero = 0;
  for (Eigen::Index k = 0; k < s.dim(); ++k) {
    if (std::abs(s.eigenvalues(k)) > 0.2) continue;
    ++near_zero;
    for (Eigen::Index site = 0; site < D.lattice_x().size(); ++site)
      if (std::abs(D.lattice_x()(site)) < 5)
        interior_weight += s.eigenvectors.col(k).segment(site * 2, 2).squaredNorm();
  }
  CHECK(near_zero == 2);
  CHECK(interior_weight == doctest::Approx(1.0).epsilon(1e-3));
}

TEST_CASE("Dirac operator: constant mass has no interior gap state") {
  const BGeometry1D g(-5, 5, 6, 0.2);
  MassProfile m;
  m.left_limit = m.right_limit = CMat::Constant(1, 1, 1.0);
  m.W = [](double) { return CMat::Constant(1, 1, 1.0); };
  const BDiracOperator D(g, m);
  const HermitianOperator H = D.hermitian();
  const auto& s = H.spectrum();
  for (Eigen::Index k = 0; k < s.dim(); ++k) {
    if (std::abs(s.eigenvalues(k)) >= 0.9) continue;
    double w = 0;
    for (Eigen::Index site = 0; site < D.lattice_x().size(); ++site)
      if (std::abs(D.lattice_x()(site)) < 5) w += s.eigenvectors.col(k).segment(site * 2, 2).squaredNorm();
    CHECK(w < 0.5);
  }
}

TEST_CASE("b-trace of an interior-supported operator is its trace") {
  const BGeometry1D g(-3, 3, 4, 0.25);
  const BDiracOperator D(g, diag_mass(1, 2, 0.5));
  const auto& lay = D.layout();
  CMat A = CMat::Zero(lay.dim(), lay.dim());
  for (int s = 0; s < lay.sites; ++s)
    if (std::abs(D.lattice_x()(s)) < 2.5)
      for (int c = 0; c < lay.fiber; ++c) A(s * lay.fiber + c, s * lay.fiber + c) = 1.0 + 0.1 * c;
  CHECK(std::abs(b_trace(A, lay, g).scalar() - A.trace()) < 1e-8);
}

TEST_CASE("commutator defect: interior pairs vanish, bilinear in K") {
  // Ends long enough for the kernels of Q and K to settle into the
  // exponential model.
  const BGeometry1D g(-3, 3, 6, 0.25);
  DiracOptions o;
  o.padding = 6;
  const BDiracOperator D(g, diag_mass(1, 2, 0.5), o);
  RVec step(g.size()), bump(g.size());
  for (int j = 0; j < g.size(); ++j) {
    const double x = g.grid()(j);
    step(j) = 0.5 * (1 + std::tanh(2 * x));
    bump(j) = std::abs(x) < 2 ? std::exp(-1 / (1 - x * x / 4)) : 0.0;
  }
  DefectOperand Q, K;
  Q.spectral = [](double x) { return std::exp(-0.5 * x * x); };
  Q.fiber = random_hermitian(4, 1);
  K.fiber = random_hermitian(4, 2);
  K.spectral = [](double x) { return x / (1 + x * x); };
  K.left = bump;
  const DefectResult z = commutator_defect(Q, K, D);
  CHECK(std::abs(z.lhs) < 1e-10);
  CHECK(std::abs(z.rhs) < 1e-10);
  K.left = step;
  const DefectResult r1 = commutator_defect(Q, K, D);
  K.fiber *= 2.0;
  const DefectResult r2 = commutator_defect(Q, K, D);
  CHECK(std::abs(r2.lhs - 2.0 * r1.lhs) < 1e-10 * std::max(1.0, std::abs(r1.lhs)));
  CHECK(std::abs(r2.rhs - 2.0 * r1.rhs) < 1e-10 * std::max(1.0, std::abs(r1.rhs)));
  CHECK(std::abs(r1.lhs) > 1e-6);
}

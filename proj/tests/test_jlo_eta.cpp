#include <doctest.h>

#include <cmath>

#include "speclab/jlo_eta.hpp"
#include "speclab/lab.hpp"

using namespace speclab;

namespace {

CMat diag(std::initializer_list<cd> v) {
  CVec d(static_cast<Eigen::Index>(v.size()));
  Eigen::Index i = 0;
  for (cd x : v) d(i++) = x;
  return d.asDiagonal();
}

// Graded end M = m sigma_x, Gamma = sigma_z, g = diag(e^{i a}, e^{i b}).
EtaEnd two_level_end(double m, double a, double b) {
  EtaEnd e;
  e.boundary_operator = m * pauli(1);
  e.grading = pauli(3);
  e.g = diag({std::polar(1.0, a), std::polar(1.0, b)});
  return e;
}

}  // namespace

TEST_CASE("JLO cochain vanishes on operators commuting with D") {
  const CMat D = diag({1.0, -0.5, 2.0});
  const CMat g = diag({std::polar(1.0, 0.3), std::polar(1.0, -1.1), cd(1.0)});
  const JloEvaluator ev{HermitianOperator(D), 0.9};
  for (int k = 0; k <= 2; ++k) CHECK(std::abs(ev.cochain(chern_tensor(g, k))) < 1e-14);
  CHECK(std::abs(alpha_at(HermitianOperator(D), g, 3, 0.9).value) < 1e-14);
}

TEST_CASE("chern tensor layout") {
  const CMat g = random_unitary(3, 5);
  const auto a = chern_tensor(g, 2);
  REQUIRE(a.size() == 6);
  for (std::size_t i = 0; i < a.size(); ++i) CHECK((a[i] - (i % 2 ? g : CMat(g.adjoint()))).norm() < 1e-15);
}

TEST_CASE("eta pairing: trivial unitary") {
  EtaEnd e = two_level_end(1.0, 0, 0);
  const EtaPairing p = eta_pairing({e}, 4);
  CHECK(std::abs(p.value) < 1e-14);
  CHECK(std::abs(p.closed_form) < 1e-15);
}

TEST_CASE("eta pairing matches the determinant phase formula") {
  const EtaEnd e = two_level_end(1.0, 0.3, 0.1);
  const EtaPairing p4 = eta_pairing({e}, 4), p6 = eta_pairing({e}, 6);
  CHECK(p6.closed_form == doctest::Approx(0.2 / (2 * kPi)).epsilon(1e-13));
  CHECK(std::abs(p6.value - p6.closed_form) < 1e-8);
  CHECK(std::abs(p4.value - p6.value) < 1e-5);
  CHECK(p6.commutator_ratio < 1);
  // Reversing the grading reverses the sign.
  EtaEnd f = e;
  f.grading = -f.grading;
  CHECK(eta_pairing({f}, 6).value == doctest::Approx(-p6.value).epsilon(1e-10));
}

TEST_CASE("eta cochain refuses data outside its radius") {
  const EtaCochain c(0.2 * pauli(1), pauli(3));
  const CMat g = diag({std::polar(1.0, 2.0), cd(1.0)});
  CHECK_THROWS_AS(c.evaluate(chern_tensor(g, 1)), OutsideConvergenceRadius);
}

TEST_CASE("superconnection grid: p squares to -1 and trivial g has vanishing contours") {
  const CMat D = random_hermitian(3, 31);
  const SuperconnectionGrid grid(D, CMat::Identity(3, 3), 1.0);
  CHECK((grid.p() * grid.p() + CMat::Identity(grid.dim(), grid.dim())).norm() < 1e-14);
  for (Contour c : {Contour::kGamma0, Contour::kGamma1, Contour::kGammaS0, Contour::kGammaSmax})
    CHECK(std::abs(contour_integral(grid, c).value) < 1e-10);
}

TEST_CASE("Stokes residual on a random unitary") {
  const SuperconnectionGrid grid(random_hermitian(3, 41), random_unitary(3, 42), 1.0);
  const StokesReport r = stokes_residual(grid);
  CHECK(r.residual() < 1e-8);
  CHECK(std::abs(r.gamma_smax) < 1e-8);
  CHECK(std::abs(grid.ds_component_series(0.3, 1.2) - grid.ds_component(0.3, 1.2)) < 1e-10);
}

TEST_CASE("circle: alpha at small t is twice the winding") {
  const auto m = lab::circle_model(64, 1);
  const AlphaPoint a = alpha_at(HermitianOperator(m.D), m.shift, 4, 0.05);
  CHECK(std::abs(a.value - 2.0) < 1e-4);
  CHECK(std::abs(a.imag) < 1e-8);
}

#include <algorithm>
#include <cmath>

#include "speclab/jlo_eta.hpp"

namespace speclab {

const char* to_string(Contour c) {
  switch (c) {
    case Contour::kGamma0: return "Gamma_0";
    case Contour::kGamma1: return "Gamma_1";
    case Contour::kGammaS0: return "gamma_0";
    case Contour::kGammaSmax: return "gamma_Smax";
  }
  return "?";
}

SuperconnectionGrid::SuperconnectionGrid(const CMat& D, const CMat& g, double t, const NumericPolicy& policy)
    : t_(t), policy_(policy) {
  const Eigen::Index n = D.rows();
  if (D.cols() != n || g.rows() != n || g.cols() != n) throw ValidationError("SuperconnectionGrid: shape mismatch");
  if (!(t > 0)) throw ValidationError("SuperconnectionGrid: t must be positive");
  if ((g.adjoint() * g - CMat::Identity(n, n)).norm() > policy.unitarity_tol * std::max<double>(1.0, n))
    throw ValidationError("SuperconnectionGrid: g is not unitary");
  const CMat I = CMat::Identity(n, n);
  const Eigen::Index h = 2 * n;  // one C^{1|1} block: spinor doubling (x) H
  Dfrak_ = CMat::Zero(2 * h, 2 * h);
  e1_ = CMat::Zero(2 * h, 2 * h);
  p_ = CMat::Zero(2 * h, 2 * h);
  grading_.resize(2 * h);
  for (int c = 0; c < 2; ++c) {
    const Eigen::Index o = c * h;
    Dfrak_.block(o, o + n, n, n) = kI * D;
    Dfrak_.block(o + n, o, n, n) = kI * D;
    e1_.block(o, o + n, n, n) = I;
    e1_.block(o + n, o, n, n) = -I;
    const double gc = c == 0 ? 1.0 : -1.0;
    grading_.segment(o, n).setConstant(gc);
    grading_.segment(o + n, n).setConstant(-gc);
  }
  // p = (0, -g^{-1}; g, 0) on C^{1|1}; the super tensor product puts the
  // spinor grading in front of it.
  const CMat gi = g.adjoint();
  p_.block(0, h, n, n) = -gi;
  p_.block(n, h + n, n, n) = gi;
  p_.block(h, 0, n, n) = g;
  p_.block(h + n, n, n, n) = -g;
  pDp_ = p_ * Dfrak_ * p_;
  Gamma_ = grading_.cast<cd>().asDiagonal();

  auto anti = [&](const CMat& X) { return CMat(X * p_ + p_ * X); };
  K_ = 0.5 * t * std::max(anti(Dfrak_).operatorNorm(), anti(pDp_).operatorNorm());
  // e^{-s^2 + 2 K s} = 1e-10 at the cut.
  s_max_ = K_ + std::sqrt(K_ * K_ + std::log(1e10));
}

cd SuperconnectionGrid::str1(const CMat& A) const {
  const cd tr = (Gamma_ * e1_ * A).trace();
  return tr / (2.0 * kI * std::sqrt(kPi));
}

namespace {

// e^{X^2} for skew-adjoint X through the Hermitian iX.
CMat exp_square(const CMat& X) {
  const CMat Y = kI * X;
  Eigen::SelfAdjointEigenSolver<CMat> es(0.5 * (Y + Y.adjoint()));
  const RVec w = (-es.eigenvalues().array().square()).exp();
  return es.eigenvectors() * w.cast<cd>().asDiagonal() * es.eigenvectors().adjoint();
}

}  // namespace

cd SuperconnectionGrid::du_component(double u, double s) const {
  return str1(t_ * Du_dot() * exp_square(Dus(u, s)));
}

cd SuperconnectionGrid::ds_component(double u, double s) const { return str1(p_ * exp_square(Dus(u, s))); }

cd SuperconnectionGrid::ds_component_series(double u, double s, int* order_used) const {
  // X^2 = H + s Q - s^2 with H = t^2 D_u^2 and Q = t [D_u, p]; the Duhamel
  // terms T_N = <Q, ..., Q>_N share one Talbot contour, so all orders come
  // from running products.
  const CMat Du0 = Du(u);
  const CMat Q = t_ * (Du0 * p_ + p_ * Du0);
  const CMat Y = kI * t_ * Du0;
  Eigen::SelfAdjointEigenSolver<CMat> es(0.5 * (Y + Y.adjoint()));
  const HeatChain heat((-es.eigenvalues().array().square()).matrix(), es.eigenvectors());
  const CMat Qe = heat.to_eigenbasis(Q), pe = heat.to_eigenbasis(p_);
  const CMat We = heat.to_eigenbasis(Gamma_ * e1_);
  const double qn = Q.operatorNorm();
  // Order from the tail bound e^{-s^2} (s |Q|)^N / N! < 1e-10.
  int order = 0;
  {
    double term = std::exp(-s * s);
    while (term * s * qn / (order + 1) >= 1e-10 || order < 2 * s * qn) {
      term *= s * qn / (order + 1);
      ++order;
      if (order >= 400) break;
    }
  }
  if (order_used) *order_used = order;
  const RVec& mu = heat.nodes();
  const double shift = mu.maxCoeff();
  const int nodes = 32;
  constexpr double a0 = -0.6122, a1 = 0.5017, alpha = 0.6407, a2 = 0.2645;
  const Eigen::Index d = heat.dim();
  cd total = 0;
  for (int k = 0; k < nodes; ++k) {
    const double th = -kPi + (k + 0.5) * 2 * kPi / nodes;
    const double sn = std::sin(alpha * th), c = std::cos(alpha * th) / sn;
    const cd z = static_cast<double>(nodes) * cd(a0 + a1 * th * c, a2 * th);
    const cd dz = static_cast<double>(nodes) * cd(a1 * c - a1 * alpha * th / (sn * sn), a2);
    CVec r(d);
    for (Eigen::Index i = 0; i < d; ++i) r(i) = 1.0 / (z - (mu(i) - shift));
    // S = sum_N s^N R (Q R)^N, accumulated term by term.
    CMat term = r.asDiagonal();
    CMat S = term;
    for (int N = 1; N <= order; ++N) {
      term = (s * (term * Qe)) * r.asDiagonal();
      S += term;
    }
    total += std::exp(z) * dz * (We * pe * S).trace();
  }
  total *= std::exp(shift - s * s) / (kI * static_cast<double>(nodes));
  return total / (2.0 * kI * std::sqrt(kPi));
}

namespace {

template <class F>
ContourValue gauss_adaptive(F&& f, double a, double b, double rel_tol) {
  RVec x, w;
  gauss_legendre(16, x, w);
  auto level = [&](int panels) {
    cd sum = 0;
    const double hp = (b - a) / panels;
    for (int p = 0; p < panels; ++p) {
      const double lo = a + p * hp;
      for (Eigen::Index q = 0; q < x.size(); ++q) sum += w(q) * 0.5 * hp * f(lo + 0.5 * hp * (x(q) + 1));
    }
    return sum;
  };
  ContourValue out;
  cd prev = level(2);
  for (int panels = 4; panels <= 256; panels *= 2) {
    const cd cur = level(panels);
    out.quad_error = std::abs(cur - prev);
    prev = cur;
    if (out.quad_error <= rel_tol * std::max(1.0, std::abs(cur))) break;
  }
  out.value = prev;
  return out;
}

}  // namespace

ContourValue contour_integral(const SuperconnectionGrid& grid, Contour c, double rel_tol, double u_end) {
  switch (c) {
    case Contour::kGamma0:
      return gauss_adaptive([&](double s) { return grid.ds_component(0.0, s); }, 0.0, grid.s_max(), rel_tol);
    case Contour::kGamma1:
      return gauss_adaptive([&](double s) { return grid.ds_component(u_end, s); }, 0.0, grid.s_max(), rel_tol);
    case Contour::kGammaS0:
      return gauss_adaptive([&](double u) { return grid.du_component(u, 0.0); }, 0.0, u_end, rel_tol);
    case Contour::kGammaSmax:
      return gauss_adaptive([&](double u) { return grid.du_component(u, grid.s_max()); }, 0.0, u_end, rel_tol);
  }
  return {};
}

cd lemma_pairing(const SuperconnectionGrid& grid, int* terms, double tol) {
  const CMat D0 = grid.Du(0.0);
  const CMat& p = grid.p();
  const double t = grid.t();
  const CMat Q = t * (D0 * p + p * D0);
  const CMat Y = kI * t * D0;
  Eigen::SelfAdjointEigenSolver<CMat> es(0.5 * (Y + Y.adjoint()));
  const HeatChain heat((-es.eigenvalues().array().square()).matrix(), es.eigenvectors());
  const CMat Qe = heat.to_eigenbasis(Q), pe = heat.to_eigenbasis(p);
  const CMat We = heat.to_eigenbasis(grid.str1_weight());
  // Top degree from k! q^{2k+1} / (2k+1)! < tol past the peak of the terms.
  const double q = Q.operatorNorm();
  int kmax = 0;
  {
    double bound = q;  // k = 0
    while ((bound >= tol || kmax < q * q / 4) && kmax < 100) {
      ++kmax;
      bound *= kmax * q * q / ((2.0 * kmax) * (2.0 * kmax + 1));
    }
  }
  const std::vector<CMat> T = heat.power_series(Qe, 2 * kmax + 1);
  cd total = 0;
  double fact = 1;
  for (int k = 0; k <= kmax; ++k) {
    if (k > 0) fact *= k;
    // <p, Q, ..., Q> with 2k + 1 copies of Q, Str_(1) = Str(e_1 .) / (2 sqrt(-pi)).
    const cd bracket = (We * pe * T[2 * k + 1]).trace() / (2.0 * kI * std::sqrt(kPi));
    total += 0.5 * fact * bracket;
  }
  if (terms) *terms = kmax + 1;
  return total;
}

StokesReport stokes_residual(const SuperconnectionGrid& grid, double rel_tol, double u_end) {
  StokesReport r;
  const ContourValue a = contour_integral(grid, Contour::kGamma0, rel_tol, u_end);
  const ContourValue b = contour_integral(grid, Contour::kGamma1, rel_tol, u_end);
  const ContourValue c = contour_integral(grid, Contour::kGammaS0, rel_tol, u_end);
  const ContourValue d = contour_integral(grid, Contour::kGammaSmax, rel_tol, u_end);
  r.gamma0_u = a.value;
  r.gamma1_u = b.value;
  r.gamma_s0 = c.value;
  r.gamma_smax = d.value;
  r.quad_error = a.quad_error + b.quad_error + c.quad_error + d.quad_error;
  r.lemma_pairing = lemma_pairing(grid, &r.lemma_terms);
  return r;
}

}  // namespace speclab

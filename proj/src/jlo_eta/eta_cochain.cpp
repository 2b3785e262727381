#include <algorithm>
#include <cmath>

#include <unsupported/Eigen/MatrixFunctions>

#include "speclab/jlo_eta.hpp"

namespace speclab {

namespace {

CMat commutator_eig(const RVec& beta, const CMat& a, double t) {
  CMat c = a;
  for (Eigen::Index j = 0; j < c.cols(); ++j)
    for (Eigen::Index i = 0; i < c.rows(); ++i) c(i, j) *= t * (beta(i) - beta(j));
  return c;
}

// Two-layer block exponential for H = diag(mu) and edges A_1..A_n: block
// (layer 0, 0) -> (layer 1, m) is sum_{i <= m} (-1)^i of the simplex integral
// with X inserted after A_i, for every m at once.
std::vector<CMat> insertion_chains(const RVec& mu, const std::vector<CMat>& A, const CMat& X) {
  const int n = static_cast<int>(A.size());
  const Eigen::Index d = mu.size();
  const int blocks = 2 * (n + 1);
  const double shift = mu.maxCoeff();
  CMat big = CMat::Zero(blocks * d, blocks * d);
  auto at = [&](int layer, int b) { return static_cast<Eigen::Index>(layer * (n + 1) + b) * d; };
  for (int k = 0; k < blocks; ++k)
    for (Eigen::Index i = 0; i < d; ++i) big(k * d + i, k * d + i) = mu(i) - shift;
  for (int layer = 0; layer < 2; ++layer)
    for (int b = 0; b < n; ++b) big.block(at(layer, b), at(layer, b + 1), d, d) = A[b];
  for (int b = 0; b <= n; ++b) big.block(at(0, b), at(1, b), d, d) = (b % 2 ? -1.0 : 1.0) * X;
  const CMat E = big.exp();
  std::vector<CMat> out;
  const double scale = std::exp(shift);
  for (int m = 0; m <= n; ++m) out.push_back(scale * E.block(at(0, 0), at(1, m), d, d));
  return out;
}

double sign_k(int k) { return k % 2 ? -1.0 : 1.0; }

}  // namespace

EtaCochain::EtaCochain(CMat boundary_operator, CMat grading, const NumericPolicy& policy)
    : M_(std::move(boundary_operator)), G_(std::move(grading)), policy_(policy),
      heat_unit_(RVec::Zero(0), CMat::Zero(0, 0)) {
  Mh_ = HermitianOperator(M_, policy);
  if (G_.rows() != M_.rows()) throw ValidationError("EtaCochain: grading shape mismatch");
  const double anti = (G_ * M_ + M_ * G_).norm();
  if (anti > 1e-10 * std::max(1.0, M_.norm()))
    throw ValidationError("EtaCochain: grading does not anticommute with the boundary operator");
  const RVec& beta = Mh_.spectrum().eigenvalues;
  lambda_ = beta.cwiseAbs().minCoeff();
  if (lambda_ <= policy.kernel_rel_tol * std::max(1.0, beta.cwiseAbs().maxCoeff()))
    throw ValidationError("EtaCochain: boundary operator is not invertible");
  heat_unit_ = HeatChain(-beta.array().square().matrix(), Mh_.spectrum().eigenvectors);
}

double EtaCochain::commutator_norm(const CMat& a) const { return (M_ * a - a * M_).operatorNorm(); }

cd EtaCochain::integrand(const std::vector<CMat>& a, double t) const {
  const int n = static_cast<int>(a.size()) - 1;
  if (n < 1 || n % 2 == 0) throw ValidationError("eta cochain: degree must be odd");
  const RVec& beta = Mh_.spectrum().eigenvalues;
  const RVec mu = (t * t) * heat_unit_.nodes();
  std::vector<CMat> A;
  for (int i = 1; i <= n; ++i) A.push_back(commutator_eig(beta, heat_unit_.to_eigenbasis(a[i]), t));
  const CMat X = beta.cast<cd>().asDiagonal();
  const CMat W = insertion_chains(mu, A, X)[n];
  const CMat Ge = heat_unit_.to_eigenbasis(G_);
  const cd str = (Ge * heat_unit_.to_eigenbasis(a[0]) * W).trace();
  const int k = (n - 1) / 2;
  return sign_k(k) / (2.0 * kPi * kI) * str;
}

namespace {

// int_0^inf f(t) dt by t = tan(pi tau / 2) and 64-node Gauss panels on
// tau in (0, 1), doubled until two levels agree; f returns a vector.
template <class F>
CVec tan_quadrature(F&& f, Eigen::Index size, double rel_tol, double* err_out) {
  RVec x, w;
  gauss_legendre(64, x, w);
  auto level = [&](int panels) {
    CVec sum = CVec::Zero(size);
    for (int p = 0; p < panels; ++p) {
      const double a = static_cast<double>(p) / panels, b = static_cast<double>(p + 1) / panels;
      for (Eigen::Index q = 0; q < x.size(); ++q) {
        const double tau = 0.5 * (a + b) + 0.5 * (b - a) * x(q);
        const double t = std::tan(0.5 * kPi * tau);
        const double jac = 0.5 * kPi * (1 + t * t) * 0.5 * (b - a);
        if (!std::isfinite(t)) continue;
        const CVec v = f(t);
        if (v.allFinite()) sum += (w(q) * jac) * v;
      }
    }
    return sum;
  };
  CVec prev = level(1);
  double err = 0;
  for (int panels = 2; panels <= 64; panels *= 2) {
    const CVec cur = level(panels);
    err = (cur - prev).cwiseAbs().maxCoeff();
    const double scale = std::max(1.0, cur.cwiseAbs().maxCoeff());
    prev = cur;
    if (err <= rel_tol * scale) break;
  }
  if (err_out) *err_out = err;
  return prev;
}

}  // namespace

cd EtaCochain::evaluate(const std::vector<CMat>& a, double* quad_error) const {
  for (const CMat& ai : a)
    if (commutator_norm(ai) >= lambda_)
      throw OutsideConvergenceRadius("eta cochain: |[dD, a]| >= lambda, outside the radius of convergence");
  const CVec r = tan_quadrature([&](double t) { return CVec::Constant(1, integrand(a, t)); }, 1,
                                policy_.quad_rel_tol, quad_error);
  return r(0);
}

namespace {

// k! eta^{2k+1}(g^{-1}, g, ...) integrands for k = 0..K at t from one layered
// exponential (the Chern tensors share their prefixes).
CVec chern_integrands(const EtaCochain& eta, const HeatChain& unit, const RVec& beta, const CMat& g, int K,
                      double t) {
  const int n = 2 * K + 1;
  const CMat ge = unit.to_eigenbasis(g), gie = unit.to_eigenbasis(g.adjoint());
  const CMat cg = commutator_eig(beta, ge, t), cgi = commutator_eig(beta, gie, t);
  std::vector<CMat> A;
  for (int i = 1; i <= n; ++i) A.push_back(i % 2 ? cg : cgi);
  const RVec mu = (t * t) * unit.nodes();
  const auto W = insertion_chains(mu, A, beta.cast<cd>().asDiagonal());
  const CMat left = unit.to_eigenbasis(eta.grading()) * gie;
  CVec out(K + 1);
  double fact = 1;
  for (int k = 0; k <= K; ++k) {
    if (k > 0) fact *= k;
    const cd str = (left * W[2 * k + 1]).trace();
    out(k) = fact * sign_k(k) / (2.0 * kPi * kI) * str;
  }
  return out;
}

double arg_det_compressed(const CMat& g, const CMat& projector) {
  Eigen::SelfAdjointEigenSolver<CMat> es(projector);
  std::vector<Eigen::Index> cols;
  for (Eigen::Index i = 0; i < es.eigenvalues().size(); ++i)
    if (es.eigenvalues()(i) > 0.5) cols.push_back(i);
  CMat U(g.rows(), static_cast<Eigen::Index>(cols.size()));
  for (std::size_t c = 0; c < cols.size(); ++c) U.col(c) = es.eigenvectors().col(cols[c]);
  if (cols.empty()) return 0;
  return std::arg((U.adjoint() * g * U).determinant());
}

}  // namespace

EtaPairing eta_pairing(const std::vector<EtaEnd>& ends, int K, const NumericPolicy& policy) {
  if (K < 0 || K > 8) throw ValidationError("eta_pairing: K must be in [0, 8]");
  EtaPairing out;
  out.terms.assign(ends.size(), std::vector<double>(K + 1, 0.0));
  std::vector<cd> top(ends.size());
  cd total = 0;
  for (std::size_t e = 0; e < ends.size(); ++e) {
    const EtaEnd& end = ends[e];
    EtaCochain eta(end.boundary_operator, end.grading, policy);
    const double c = std::max(eta.commutator_norm(end.g), eta.commutator_norm(CMat(end.g.adjoint())));
    out.commutator_ratio = std::max(out.commutator_ratio, c / eta.lambda());
    if (c >= eta.lambda())
      throw OutsideConvergenceRadius("eta_pairing: |[dD, g]| >= lambda, outside the radius of convergence");
    const HermitianOperator Mh(end.boundary_operator, policy);
    const RVec& beta = Mh.spectrum().eigenvalues;
    const HeatChain unit(-beta.array().square().matrix(), Mh.spectrum().eigenvectors);
    double err = 0;
    const CVec v = tan_quadrature([&](double t) { return chern_integrands(eta, unit, beta, end.g, K, t); }, K + 1,
                                  policy.quad_rel_tol, &err);
    out.quad_error = std::max(out.quad_error, err);
    cd s = 0;
    for (int k = 0; k <= K; ++k) {
      out.terms[e][k] = v(k).real();
      s += v(k);
    }
    top[e] = v(K);
    out.per_end.push_back(s.real());
    total += s;

    const Eigen::Index d = end.grading.rows();
    const CMat Pp = 0.5 * (CMat::Identity(d, d) + end.grading), Pm = 0.5 * (CMat::Identity(d, d) - end.grading);
    out.closed_form += (arg_det_compressed(end.g, Pp) - arg_det_compressed(end.g, Pm)) / (2 * kPi);
  }
  cd tail = 0;
  for (const cd& x : top) tail += x;
  out.tail = std::abs(tail);
  out.value = total.real();
  out.imag = total.imag();
  return out;
}

std::vector<EtaEnd> boundary_ends(const BDiracOperator& D, const CMat& g_left, const CMat& g_right,
                                  bool flip_orientation) {
  std::vector<EtaEnd> ends;
  for (End e : kEnds) {
    EtaEnd x;
    x.boundary_operator = D.boundary_operator(e);
    x.grading = kI * D.conormal(e);
    if (flip_orientation) x.grading = -x.grading;
    x.g = e == End::kLeft ? g_left : g_right;
    ends.push_back(std::move(x));
  }
  return ends;
}

double eta_pairing_integrand(const std::vector<EtaEnd>& ends, int K, double t, const NumericPolicy& policy) {
  double s = 0;
  for (const EtaEnd& end : ends) {
    EtaCochain eta(end.boundary_operator, end.grading, policy);
    const HermitianOperator Mh(end.boundary_operator, policy);
    const RVec& beta = Mh.spectrum().eigenvalues;
    const HeatChain unit(-beta.array().square().matrix(), Mh.spectrum().eigenvectors);
    s += chern_integrands(eta, unit, beta, end.g, K, t).sum().real();
  }
  return s;
}

}  // namespace speclab

#include <cmath>

#include <Eigen/Eigenvalues>

#include "speclab/dirac.hpp"

namespace speclab {

namespace {

// Lattice matrix of l(x) F phi(D) r(x).
CMat operand_matrix(const DefectOperand& op, const BDiracOperator& D, const SpectralDecomposition& s) {
  const LatticeLayout& lay = D.layout();
  const Eigen::Index n = lay.dim();
  const int f = lay.fiber;
  CMat M;
  if (op.spectral) {
    M = s.apply(op.spectral);
  } else {
    M = CMat::Identity(n, n);
  }
  if (op.fiber.size() > 0) {
    if (op.fiber.rows() != f) throw ValidationError("commutator_defect: fiber matrix has wrong size");
    for (int st = 0; st < lay.sites; ++st) M.middleRows(st * f, f) = (op.fiber * M.middleRows(st * f, f)).eval();
  }
  auto lattice_field = [&](const RVec& v) {
    RVec out = RVec::Ones(n);
    if (v.size() == 0) return out;
    if (v.size() != D.geometry().size()) throw ValidationError("commutator_defect: multiplier size");
    for (int st = 0; st < lay.sites; ++st) {
      const int j = std::clamp(st - lay.offset, 0, D.geometry().size() - 1);
      out.segment(st * f, f).setConstant(v(j));
    }
    return out;
  };
  M = lattice_field(op.left).asDiagonal() * M;
  M = M * lattice_field(op.right).asDiagonal();
  return M;
}

double end_value(const RVec& v, const BGeometry1D& g, End e) {
  if (v.size() == 0) return 1.0;
  return e == End::kLeft ? v(0) : v(g.size() - 1);
}

// a_e F phi(I) as the indicial family of an operand.
struct Symbol {
  double scale;
  CMat fiber;
  std::function<double(double)> f;
};

Symbol symbol_of(const DefectOperand& op, const BGeometry1D& g, End e, int dim) {
  Symbol s;
  s.scale = end_value(op.left, g, e) * end_value(op.right, g, e);
  s.fiber = op.fiber.size() > 0 ? op.fiber : CMat::Identity(dim, dim);
  s.f = op.spectral ? op.spectral : [](double) { return 1.0; };
  return s;
}

// tr( d/dlambda [F_Q phi(I)] F_K psi(I) ) for one lambda.
cd integrand(const Symbol& q, const Symbol& k, const CMat& I, const CMat& dI) {
  Eigen::SelfAdjointEigenSolver<CMat> es(0.5 * (I + I.adjoint()));
  SpectralDecomposition s{es.eigenvalues(), es.eigenvectors()};
  const double h = 1e-6;
  auto dphi = [&](double x) {
    const double sc = std::max(1.0, std::abs(x));
    return (q.f(x + h * sc) - q.f(x - h * sc)) / (2 * h * sc);
  };
  const CMat d_phi = functional_derivative(s, dI, q.f, dphi);
  const CMat psi = s.apply(k.f);
  return q.scale * k.scale * (q.fiber * d_phi * k.fiber * psi).trace();
}

}  // namespace

DefectResult commutator_defect(const DefectOperand& Q, const DefectOperand& K, const BDiracOperator& D,
                               const NumericPolicy& policy) {
  if (!Q.smoothing() && !K.smoothing())
    throw ValidationError("commutator_defect: neither operator is smoothing (trace-class hypothesis)");
  const SpectralDecomposition s = decompose(D.hermitian());
  const CMat q = operand_matrix(Q, D, s), k = operand_matrix(K, D, s);
  const CMat comm = q * k - k * q;
  DefectResult r;
  const RegularizedValue lhs = b_trace(comm, D.layout(), D.geometry(), policy);
  r.lhs = lhs.scalar();
  r.flagged = lhs.flagged;

  const int dim = D.site_dim();
  const double h = D.geometry().spacing();
  const cd pref = -1.0 / (2.0 * kPi * kI);
  // Trapezoid over the periodic Brillouin zone converges geometrically; the
  // half-resolution value gives the error estimate.
  auto bz = [&](int N) {
    cd total = 0;
    for (End e : kEnds) {
      const Symbol sq = symbol_of(Q, D.geometry(), e, dim), sk = symbol_of(K, D.geometry(), e, dim);
      cd sum = 0;
      for (int j = 0; j < N; ++j) {
        const double lam = -kPi / h + (2 * kPi / h) * j / N;
        sum += integrand(sq, sk, D.lattice_indicial(lam, e), D.lattice_indicial_derivative(lam, e));
      }
      total += sum * (2 * kPi / h) / static_cast<double>(N);
    }
    return pref * total;
  };
  const int N = 4096;
  r.rhs = bz(N);
  r.quadrature_error = std::abs(r.rhs - bz(N / 2));

  // Continuum family on [-Lambda, Lambda]; Lambda doubles until the integrand
  // at the cut is negligible.
  double Lambda = 8.0;
  for (int it = 0; it < 12; ++it) {
    double worst = 0;
    for (End e : kEnds) {
      const Symbol sq = symbol_of(Q, D.geometry(), e, dim), sk = symbol_of(K, D.geometry(), e, dim);
      worst = std::max(worst, std::abs(integrand(sq, sk, D.indicial(Lambda, e), kI * D.conormal(e))));
      worst = std::max(worst, std::abs(integrand(sq, sk, D.indicial(-Lambda, e), kI * D.conormal(e))));
    }
    if (worst < policy.lambda_tail) break;
    Lambda *= 1.5;
  }
  const int M = 4000;
  cd cont = 0;
  for (End e : kEnds) {
    const Symbol sq = symbol_of(Q, D.geometry(), e, dim), sk = symbol_of(K, D.geometry(), e, dim);
    // Composite Simpson.
    cd sum = 0;
    for (int j = 0; j <= M; ++j) {
      const double lam = -Lambda + 2 * Lambda * j / M;
      const double w = (j == 0 || j == M) ? 1.0 : (j % 2 ? 4.0 : 2.0);
      sum += w * integrand(sq, sk, D.indicial(lam, e), kI * D.conormal(e));
    }
    cont += sum * (2 * Lambda / M) / 3.0;
  }
  r.rhs_continuum = pref * cont;
  return r;
}

}  // namespace speclab

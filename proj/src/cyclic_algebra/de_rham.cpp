#include <cmath>

#include "speclab/cyclic_algebra.hpp"

namespace speclab {

DifferentialFormField wedge(const DifferentialFormField& a, const DifferentialFormField& b) {
  if (a.degree0.size() != b.degree0.size()) throw ValidationError("wedge: grid mismatch");
  DifferentialFormField out;
  out.degree0 = a.degree0.cwiseProduct(b.degree0);
  // dx ^ dx = 0 on a one-dimensional base.
  out.degree1 = a.degree0.cwiseProduct(b.degree1) + a.degree1.cwiseProduct(b.degree0);
  out.imaginary_residue = std::max(a.imaginary_residue, b.imaginary_residue);
  return out;
}

DifferentialFormField de_rham_chern(const std::vector<CMat>& g, double h, bool periodic,
                                    const std::vector<CMat>* derivative, const NumericPolicy& policy) {
  const int n = static_cast<int>(g.size());
  if (n < 2) throw ValidationError("de_rham_chern: need at least two samples");
  DifferentialFormField f;
  f.degree0 = CVec::Zero(n);
  f.degree1 = CVec::Zero(n);
  if (derivative) {
    if (static_cast<int>(derivative->size()) != n) throw ValidationError("de_rham_chern: derivative sample count");
    double worst = 0;
    for (int j = 0; j < n; ++j) {
      const cd c = (g[j].adjoint() * (*derivative)[j]).trace() / (2.0 * kPi * kI);
      worst = std::max(worst, std::abs(c.imag()));
      f.degree1(j) = c.real();
    }
    f.imaginary_residue = worst;
    if (worst > policy.reconstruction_tol * std::max(1.0, f.degree1.cwiseAbs().maxCoeff()))
      throw ValidationError("de_rham_chern: coefficient not real (g not unitary?)");
    return f;
  }
  // i d/dx arg det g = tr(g^{-1} g') for unitary g.
  auto phase_step = [&](int a, int b) { return std::arg((g[a].adjoint() * g[b]).determinant()); };
  for (int j = 0; j < n; ++j) {
    double d;
    if (periodic) {
      d = phase_step((j + n - 1) % n, (j + 1) % n) / (2 * h);
    } else if (j == 0) {
      d = phase_step(0, 1) / h;
    } else if (j == n - 1) {
      d = phase_step(n - 2, n - 1) / h;
    } else {
      d = phase_step(j - 1, j + 1) / (2 * h);
    }
    f.degree1(j) = d / (2 * kPi);
  }
  return f;
}

DifferentialFormField a_hat(int points) {
  DifferentialFormField f;
  f.degree0 = CVec::Ones(points);
  f.degree1 = CVec::Zero(points);
  return f;
}

RegularizedValue de_rham_pairing(const DifferentialFormField& form, const BGeometry1D& geometry,
                                 QuadratureRule rule, const NumericPolicy& policy) {
  const BFunction f = split_exp(form.degree1, geometry, policy);
  RegularizedValue r = regularized_integral(f, rule);
  if (std::abs(r.scalar().imag()) > 1e-10 * std::max(1.0, std::abs(r.scalar())))
    throw ValidationError("de_rham_pairing: imaginary residue in the pairing");
  return r;
}

double de_rham_pairing_periodic(const DifferentialFormField& form, double h) {
  return form.degree1.real().sum() * h;
}

}  // namespace speclab

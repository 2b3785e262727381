#include <cmath>

#include "speclab/graded.hpp"

namespace speclab {

void GradedMatrix::validate(double tol) const {
  const auto n = base.rows();
  if (base.cols() != n || grading.size() != n)
    throw ValidationError("GradedMatrix: dimension mismatch");
  if (clifford_degree < 0 || clifford_degree > 2 ||
      static_cast<int>(generators.size()) != clifford_degree)
    throw ValidationError("GradedMatrix: unsupported Clifford degree");
  const CMat Id = CMat::Identity(n, n);
  for (int i = 0; i < clifford_degree; ++i) {
    if ((generators[i].adjoint() + generators[i]).norm() > tol * n)
      throw ValidationError("GradedMatrix: generator not skew-adjoint");
    for (int j = 0; j < clifford_degree; ++j) {
      const CMat ac = generators[i] * generators[j] + generators[j] * generators[i];
      const CMat want = (i == j ? -2.0 : 0.0) * Id;
      if ((ac - want).norm() > tol * n)
        throw ValidationError("GradedMatrix: Clifford relation violated");
    }
    // Generators are odd: they anticommute with the grading operator.
    const CMat G = grading.cast<cd>().asDiagonal();
    if ((G * generators[i] + generators[i] * G).norm() > tol * n)
      throw ValidationError("GradedMatrix: generator not odd");
  }
}

cd supertrace(const CMat& A, const RVec& grading) {
  cd s = 0;
  for (Eigen::Index i = 0; i < A.rows(); ++i) s += grading(i) * A(i, i);
  return s;
}

cd normalized_supertrace(const GradedMatrix& A) {
  if (A.clifford_degree < 1 || A.clifford_degree > 2)
    throw ValidationError("normalized_supertrace: unsupported degree q");
  CMat M = A.base;
  for (int i = A.clifford_degree - 1; i >= 0; --i) M = A.generators[i] * M;
  // (-4 pi)^{-q/2}, principal branch: q = 1 gives 1 / (2 i sqrt(pi)).
  const cd norm = A.clifford_degree == 1 ? 1.0 / (2.0 * kI * std::sqrt(kPi)) : cd(-1.0 / (4.0 * kPi));
  return norm * supertrace(M, A.grading);
}

GradedMatrix spinor_double(const CMat& D) {
  const auto n = D.rows();
  GradedMatrix g;
  g.base = CMat::Zero(2 * n, 2 * n);
  g.base.topRightCorner(n, n) = kI * D;
  g.base.bottomLeftCorner(n, n) = kI * D;
  g.grading = RVec::Ones(2 * n);
  g.grading.tail(n).setConstant(-1.0);
  g.clifford_degree = 1;
  CMat e1 = CMat::Zero(2 * n, 2 * n);
  e1.topRightCorner(n, n) = CMat::Identity(n, n);
  e1.bottomLeftCorner(n, n) = -CMat::Identity(n, n);
  g.generators = {e1};
  return g;
}

GradedMatrix even_double(const CMat& a, const GradedMatrix& like) {
  const auto n = a.rows();
  GradedMatrix g = like;
  g.base = CMat::Zero(2 * n, 2 * n);
  g.base.topLeftCorner(n, n) = a;
  g.base.bottomRightCorner(n, n) = a;
  return g;
}

}  // namespace speclab

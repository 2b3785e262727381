#pragma once

#include <vector>

#include "speclab/numeric_policy.hpp"

namespace speclab {

// A matrix acting on a Z2-graded space that also carries a representation of
// the Clifford algebra Cl_q by odd, skew-adjoint generators.
struct GradedMatrix {
  CMat base;
  RVec grading;               // +1 / -1 per basis vector
  int clifford_degree = 0;    // q in {0,1,2}
  std::vector<CMat> generators;

  void validate(double tol = 1e-12) const;
};

// Sum of grading_i * A_ii.
cd supertrace(const CMat& A, const RVec& grading);
// (-4 pi)^{-q/2} Str(e_1 ... e_q A).
cd normalized_supertrace(const GradedMatrix& A);

// The doubled operator i [[0, D], [D, 0]] on H (+) H with grading diag(1,-1)
// and e_1 = [[0, 1], [-1, 0]].
GradedMatrix spinor_double(const CMat& D);
// Same doubling for an even operator a: diag(a, a).
GradedMatrix even_double(const CMat& a, const GradedMatrix& like);

}  // namespace speclab

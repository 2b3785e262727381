#pragma once

#include <functional>

#include "speclab/b_geometry.hpp"
#include "speclab/block_tridiag.hpp"
#include "speclab/graded.hpp"
#include "speclab/operator_core.hpp"

namespace speclab {

// Pauli matrices and small Kronecker helpers.
CMat pauli(int which);  // 0 -> identity, 1..3 -> sigma_1..3
CMat kron(const CMat& a, const CMat& b);

// Hermitian k x k mass field with its end limits.
struct MassProfile {
  std::function<CMat(double)> W;
  CMat left_limit, right_limit;
  int fiber_dim() const { return static_cast<int>(left_limit.rows()); }
  const CMat& limit(End e) const { return e == End::kLeft ? left_limit : right_limit; }
};

struct DiracOptions {
  int order = 2;          // central differences of order 2 or 4
  double wilson = 1.0;    // doubler mass coefficient r
  double padding = 8.0;   // frozen-mass lattice beyond each end before the Dirichlet wall
};

// Lattice realization of D = -i sigma_1 d/dx (x) 1 + sigma_2 (x) W(x) plus a
// Wilson term sigma_2 (x) (r h^{2p-1}) (-Delta)^p that lifts the lattice
// doublers to mass ~ 2r/h. Site components are ordered spinor-major:
// index = site * 2k + spinor * k + fiber.
class BDiracOperator {
 public:
  BDiracOperator(BGeometry1D geometry, MassProfile mass, DiracOptions options = {});

  const BGeometry1D& geometry() const { return geometry_; }
  const MassProfile& mass() const { return mass_; }
  const DiracOptions& options() const { return options_; }
  int fiber_dim() const { return k_; }
  int site_dim() const { return 2 * k_; }
  const LatticeLayout& layout() const { return layout_; }
  const RVec& lattice_x() const { return lattice_x_; }
  int sites_per_block() const { return options_.order == 4 ? 2 : 1; }

  const BlockTridiagonal& blocks() const { return blocks_; }
  CMat dense() const { return blocks_.to_dense(); }
  HermitianOperator hermitian() const { return HermitianOperator(dense()); }

  CMat boundary_operator(End e) const;  // sigma_2 (x) W_boundary
  CMat conormal(End e) const;           // c(nu) = -i s_e sigma_1 (x) 1, s_left = +1
  double end_sign(End e) const { return e == End::kLeft ? 1.0 : -1.0; }
  double boundary_gap() const { return gap_; }
  double mass_decay_constant() const { return decay_; }

  // Continuum indicial family and the symbol of the lattice operator frozen at
  // the end (Brillouin zone |lambda| <= pi/h).
  CMat indicial(double lambda, End e) const;
  CMat lattice_indicial(double lambda, End e) const;
  CMat lattice_indicial_derivative(double lambda, End e) const;

  // Block-diagonal multiplication by per-site 2k x 2k matrices.
  CMat site_operator(const std::vector<CMat>& per_site) const;
  // u* T u for a block-diagonal u given per site.
  BlockTridiagonal conjugate(const BlockTridiagonal& T, const std::vector<CMat>& per_site) const;

  // Extend a per-geometry-sample field to the lattice: padding sites copy the
  // outermost sample.
  std::vector<CMat> extend_to_lattice(const std::vector<CMat>& per_sample) const;

 private:
  BGeometry1D geometry_;
  MassProfile mass_;
  DiracOptions options_;
  int k_ = 0;
  LatticeLayout layout_;
  RVec lattice_x_;
  BlockTridiagonal blocks_;
  double gap_ = 0, decay_ = 0;
};

BDiracOperator build_dirac(const BGeometry1D& geometry, const MassProfile& mass,
                           const DiracOptions& options = {});

// Supertrace of a graded lattice operator: A acts on `copies` stacked copies
// of the lattice space (index = copy * dim + lattice index), the grading is
// constant on each copy and generators e_1..e_q act across copies.
RegularizedValue b_supertrace_q(const GradedMatrix& A, const LatticeLayout& layout,
                                const BGeometry1D& geometry,
                                const NumericPolicy& policy = default_policy());

// b-trace commutator defect. Q = l(x) F phi(D) r(x) with scalar fields l, r
// on the geometry grid (constant on each end) and a constant site matrix F;
// likewise K. lhs is the b-trace of [Q, K] assembled from the lattice kernels,
// rhs the indicial-family integral
//   -(1/2 pi i) sum_e int tr( dI(Q)/dlambda I(K) ) dlambda
// in each end's own coordinate (the conormal carries the orientation) over the
// Brillouin zone of the lattice symbol. rhs_continuum uses the continuum
// family dD + i lambda c(nu) on the real line instead.
struct DefectOperand {
  RVec left, right;                        // empty means 1
  CMat fiber;                              // 2k x 2k, empty means 1
  std::function<double(double)> spectral;  // empty means no spectral factor
  bool smoothing() const { return static_cast<bool>(spectral); }
};
struct DefectResult {
  cd lhs = 0, rhs = 0, rhs_continuum = 0;
  double quadrature_error = 0;  // |rhs(N) - rhs(N/2)|
  bool flagged = false;
  double difference() const { return std::abs(lhs - rhs); }
};
DefectResult commutator_defect(const DefectOperand& Q, const DefectOperand& K,
                               const BDiracOperator& D,
                               const NumericPolicy& policy = default_policy());

}  // namespace speclab

#pragma once

#include <deque>
#include <memory>
#include <mutex>
#include <unordered_map>
#include <vector>

#include "speclab/b_geometry.hpp"
#include "speclab/numeric_policy.hpp"

namespace speclab {

// r x r matrix-valued function on P points (P = 1 for a constant, e.g. the
// boundary algebra). Products are pointwise.
struct AlgebraElement {
  std::vector<CMat> values;
  bool is_unit = false;

  int points() const { return static_cast<int>(values.size()); }
  int rank() const { return values.empty() ? 0 : static_cast<int>(values[0].rows()); }

  static AlgebraElement unit(int points, int rank);
  static AlgebraElement constant(const CMat& m, int points);
  AlgebraElement operator*(const AlgebraElement& o) const;
  AlgebraElement adjoint() const;
  // Entry (i, j) as a scalar-valued element.
  AlgebraElement entry(int i, int j) const;
  bool is_unitary(double tol = 1e-10) const;
  double sup_norm() const;  // max over points of the operator norm
};

// Append-only store of the elements a family of chains refers to. Id 0 is the
// unit; products are memoized so that b of a chain with few distinct slots
// stays small.
class ElementPool {
 public:
  ElementPool(int points, int rank);
  int points() const { return points_; }
  int rank() const { return rank_; }
  int add(AlgebraElement e);
  int product(int a, int b);
  const AlgebraElement& operator[](int id) const;
  int size() const;
  static constexpr int kUnit = 0;

 private:
  int points_, rank_;
  mutable std::mutex mu_;
  std::deque<AlgebraElement> elems_;  // stable references
  std::unordered_map<long long, int> products_;
};

// Finite linear combination of elementary tensors (a_0, ..., a_n); slots
// refer to elements of a shared pool.
struct ChainTerm {
  cd coef;
  std::vector<int> slots;
  int degree() const { return static_cast<int>(slots.size()) - 1; }
};

class CyclicChain {
 public:
  explicit CyclicChain(std::shared_ptr<ElementPool> pool) : pool_(std::move(pool)) {}

  const std::shared_ptr<ElementPool>& pool() const { return pool_; }
  const std::vector<ChainTerm>& terms() const { return terms_; }
  void add(cd coef, std::vector<int> slots);
  void append(const CyclicChain& other, cd scale = 1.0);
  CyclicChain component(int degree) const;
  int max_degree() const;
  bool empty() const { return terms_.empty(); }

 private:
  std::shared_ptr<ElementPool> pool_;
  std::vector<ChainTerm> terms_;
};

CyclicChain hochschild_b(const CyclicChain& c);
CyclicChain connes_B(const CyclicChain& c);
inline CyclicChain b_plus_B(const CyclicChain& c) {
  CyclicChain out = hochschild_b(c);
  out.append(connes_B(c));
  return out;
}

// Tr: C_n(M_r(A)) -> C_n(A) by index contraction. The result lives in a new
// pool of scalar (rank 1) elements.
CyclicChain matrix_trace_map(const CyclicChain& c);

// Product functional phi_0 (x) ... (x) phi_n with phi_i(a) = sum_p w_{i,p} a(p)
// (entrywise for matrix values); slots i >= 1 use mean-zero weights so the
// functional vanishes on tensors with a constant in slot i >= 1, i.e. it is a
// functional on the normalized complex A (x) (A/C)^{(x) n}.
class ProductFunctional {
 public:
  ProductFunctional(int points, int max_degree, unsigned long long seed);
  // Sum over terms of coef * prod_i phi_i(a_i) (scalar algebras) and of
  // coef * tr(Phi_0(a_0) ... Phi_n(a_n)) with Phi_i the entrywise functional
  // matrix (matrix algebras: this equals the functional of the trace-mapped
  // chain).
  cd evaluate(const CyclicChain& c) const;
  // Sum of |coef| prod |phi_i(a_i)|: the size scale for zero checks.
  double magnitude(const CyclicChain& c) const;

 private:
  CMat slot_value(const AlgebraElement& a, int slot) const;
  std::vector<CVec> w_;
};

// Exact dense tensor of a scalar chain in the normalized complex (slots >= 1
// projected onto mean-zero functions); for small point counts only.
CVec densify(const CyclicChain& c, int degree);

enum class NormBackend { kBNorm, kOperator };
struct EntireNorm {
  double value = 0;              // +inf when the weighted norms still grow at the top degree
  std::vector<double> weighted;  // lambda^n / Gamma(n/2) |c_n| per degree
  double tail_ratio = 0;         // weighted[top] / weighted[top - 2]
};
// Projective bound |c_n| <= sum |coef| prod |a_i|, slots >= 1 normalized
// (mean-times-unit removed). The b-norm backend needs the geometry the points
// sample.
EntireNorm entire_norm(const CyclicChain& c, double lambda, NormBackend backend,
                       const BGeometry1D* geometry = nullptr);

// The unsigned chain sum_k k! (g^{-1}, g, ..., g^{-1}, g)_{2k+1} is not closed
// for b + B with the sign conventions used here; sum_k (-1)^k k! (...) is.
enum class ChernConvention { kUnsigned, kClosed };
const char* to_string(ChernConvention c);
ChernConvention chern_convention_from_string(const std::string& s);
double chern_coefficient(int k, ChernConvention c);

// Ch_{<=K}(g) for a unitary g over M_r(A), with the trace map applied when
// `trace` is set.
CyclicChain chern_character(const AlgebraElement& g, int K, ChernConvention conv = ChernConvention::kClosed,
                            bool trace = true, const NumericPolicy& policy = default_policy());

// Differential forms on a 1D grid: degree 0 and degree 1 coefficients.
struct DifferentialFormField {
  CVec degree0;
  CVec degree1;
  double imaginary_residue = 0;
};
DifferentialFormField wedge(const DifferentialFormField& a, const DifferentialFormField& b);

// (1/2 pi i) tr(g^{-1} g') dx; higher terms vanish on a 1D base. Without
// derivative samples the coefficient is (1/2 pi) d/dx arg det g by the
// centered stencil arg det(g_{j-1}^* g_{j+1}) / (2h), which is real by
// construction. Samples must be uniformly spaced with spacing h; periodic
// samples (a closed curve, last sample adjacent to the first) wrap the stencil.
DifferentialFormField de_rham_chern(const std::vector<CMat>& g, double h, bool periodic = false,
                                    const std::vector<CMat>* derivative = nullptr,
                                    const NumericPolicy& policy = default_policy());
DifferentialFormField a_hat(int points);
// Regularized integral of the degree-1 coefficient.
RegularizedValue de_rham_pairing(const DifferentialFormField& form, const BGeometry1D& geometry,
                                 QuadratureRule rule = QuadratureRule::kTrapezoid,
                                 const NumericPolicy& policy = default_policy());
// Closed-curve version (periodic trapezoid with spacing h).
double de_rham_pairing_periodic(const DifferentialFormField& form, double h);

}  // namespace speclab

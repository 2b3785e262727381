#pragma once

#include <array>
#include <vector>

#include "speclab/numeric_policy.hpp"

namespace speclab {

enum class End { kLeft = 0, kRight = 1 };
inline constexpr std::array<End, 2> kEnds{End::kLeft, End::kRight};

enum class QuadratureRule { kTrapezoid, kGregory };

// Uniform grid on [x_lo - L, x_hi + L]; the interior is [x_lo, x_hi] and each
// side carries a cylindrical end of length L. The end coordinate y runs from
// 0 at the junction to -L at the outer edge.
class BGeometry1D {
 public:
  BGeometry1D(double x_lo, double x_hi, double end_length, double spacing,
              QuadratureRule rule = QuadratureRule::kTrapezoid);

  double x_lo() const { return x_lo_; }
  double x_hi() const { return x_hi_; }
  double end_length() const { return L_; }
  double spacing() const { return h_; }
  int size() const { return static_cast<int>(grid_.size()); }
  const RVec& grid() const { return grid_; }
  const RVec& weights() const { return weights_; }
  RVec weights(QuadratureRule rule) const;
  QuadratureRule rule() const { return rule_; }

  // Index ranges [begin, end) of the end samples (junction excluded).
  std::pair<int, int> end_range(End e) const;
  // End coordinate y <= 0 of sample j on end e.
  double end_coordinate(End e, int j) const;
  bool in_end(End e, int j) const;
  bool is_interior(int j) const { return !in_end(End::kLeft, j) && !in_end(End::kRight, j); }
  // Samples in the outermost fraction of an end.
  std::vector<int> outer_samples(End e, double fraction) const;
  double total_length() const { return x_hi_ - x_lo_ + 2 * L_; }

 private:
  double x_lo_, x_hi_, L_, h_;
  int n_end_ = 0, n_int_ = 0;
  QuadratureRule rule_;
  RVec grid_, weights_;
};

// f = f_c + e^y f_inf on each end; samples are r x r matrices (r = 1 for
// scalars).
struct BFunction {
  const BGeometry1D* geometry = nullptr;
  std::vector<CMat> samples;
  std::array<CMat, 2> end_constant;             // f_c per end
  std::array<std::vector<CMat>, 2> end_decaying; // f_inf per end sample
  double remainder = 0;                          // largest split remainder seen
  bool flagged = false;

  int rank() const { return samples.empty() ? 0 : static_cast<int>(samples[0].rows()); }
};

BFunction split_exp(const std::vector<CMat>& raw, const BGeometry1D& geometry,
                    const NumericPolicy& policy = default_policy());
BFunction split_exp(const RVec& raw, const BGeometry1D& geometry,
                    const NumericPolicy& policy = default_policy());
BFunction split_exp(const CVec& raw, const BGeometry1D& geometry,
                    const NumericPolicy& policy = default_policy());

// Discrete C^1 norm: max |f| plus max difference quotient, operator norms for
// matrix samples.
double c1_norm(const std::vector<CMat>& samples, double h);
// b-norm |a|_1 + 2 |a_inf|_1. The decaying part is measured on the inner half
// of each end, where e^{-y} does not amplify the f_c estimation error.
double b_norm(const BFunction& a);

struct RegularizedValue {
  CMat value;
  bool flagged = false;
  cd scalar() const { return value(0, 0); }
};
// Sum_j w_j f_j - sum over ends of L * f_c (the constant part is dropped from
// each end; the remainder is integrated).
RegularizedValue regularized_integral(const BFunction& f);
RegularizedValue regularized_integral(const BFunction& f, QuadratureRule rule);

// How grid operators map to geometry samples: site s of the lattice carries
// `fiber` components at indices s*fiber + c; geometry sample j is lattice site
// j + offset.
struct LatticeLayout {
  int sites = 0;
  int fiber = 0;
  int offset = 0;
  double cell = 0;  // lattice cell length h
  Eigen::Index dim() const { return static_cast<Eigen::Index>(sites) * fiber; }
};

// Fiber-traced matrix diagonal per lattice site (optionally with a fiber
// grading inserted before the trace).
RVec site_traces(const CMat& A, const LatticeLayout& layout);
CVec site_traces_complex(const CMat& A, const LatticeLayout& layout, const CMat* grading = nullptr);
// Same for the diagonal of L * M * R^* without forming the full product.
CVec site_traces_of_product(const CMat& Lm, const CMat& M, const CMat& Rm,
                            const LatticeLayout& layout, const CMat* grading = nullptr);
// Convert per-site traces to the kernel density on the geometry grid and take
// its regularized integral.
RegularizedValue b_trace_from_sites(const CVec& site_tr, const LatticeLayout& layout,
                                    const BGeometry1D& geometry,
                                    const NumericPolicy& policy = default_policy());
RegularizedValue b_trace(const CMat& A, const LatticeLayout& layout, const BGeometry1D& geometry,
                         const NumericPolicy& policy = default_policy());
// Plain matrix trace restricted to the sites of the geometry grid.
cd grid_trace(const CMat& A, const LatticeLayout& layout, const BGeometry1D& geometry);

}  // namespace speclab

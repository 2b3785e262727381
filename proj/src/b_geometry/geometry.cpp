#include <algorithm>
#include <cmath>

#include "speclab/b_geometry.hpp"

namespace speclab {

namespace {

int exact_steps(double length, double h, const char* what) {
  const double q = length / h;
  const long r = std::lround(q);
  if (r < 1 || std::abs(q - r) > 1e-9 * std::max(1.0, q))
    throw ValidationError(std::string("BGeometry1D: ") + what + " is not a multiple of the spacing");
  return static_cast<int>(r);
}

// Endpoint-corrected trapezoid (fourth order) on one segment of n intervals.
void add_gregory(RVec& w, int first, int n, double h) {
  if (n < 6) {
    for (int i = 0; i <= n; ++i) w(first + i) += (i == 0 || i == n ? 0.5 : 1.0) * h;
    return;
  }
  const double c[3] = {3.0 / 8.0, 7.0 / 6.0, 23.0 / 24.0};
  for (int i = 0; i <= n; ++i) {
    double f = 1.0;
    if (i < 3) f = c[i];
    if (n - i < 3) f = c[n - i];
    w(first + i) += f * h;
  }
}

double max_norm(const CMat& m) { return m.size() == 1 ? std::abs(m(0, 0)) : m.operatorNorm(); }

}  // namespace

BGeometry1D::BGeometry1D(double x_lo, double x_hi, double end_length, double spacing,
                         QuadratureRule rule)
    : x_lo_(x_lo), x_hi_(x_hi), L_(end_length), h_(spacing), rule_(rule) {
  if (!(spacing > 0) || !(end_length > 0) || !(x_hi > x_lo))
    throw ValidationError("BGeometry1D: need x_lo < x_hi and positive end length and spacing");
  n_end_ = exact_steps(end_length, spacing, "end length");
  n_int_ = exact_steps(x_hi - x_lo, spacing, "interior length");
  const int n = 2 * n_end_ + n_int_ + 1;
  grid_.resize(n);
  for (int j = 0; j < n; ++j) {
    // Anchor each segment at its own endpoint so junctions are exact.
    if (j <= n_end_)
      grid_(j) = x_lo - (n_end_ - j) * h_;
    else if (j <= n_end_ + n_int_)
      grid_(j) = x_lo + (j - n_end_) * h_;
    else
      grid_(j) = x_hi + (j - n_end_ - n_int_) * h_;
  }
  weights_ = weights(rule);
}

RVec BGeometry1D::weights(QuadratureRule rule) const {
  RVec w = RVec::Zero(size());
  if (rule == QuadratureRule::kTrapezoid) {
    w.setConstant(h_);
    w(0) = w(size() - 1) = 0.5 * h_;
    return w;
  }
  add_gregory(w, 0, n_end_, h_);
  add_gregory(w, n_end_, n_int_, h_);
  add_gregory(w, n_end_ + n_int_, n_end_, h_);
  return w;
}

std::pair<int, int> BGeometry1D::end_range(End e) const {
  if (e == End::kLeft) return {0, n_end_};
  return {n_end_ + n_int_ + 1, size()};
}

double BGeometry1D::end_coordinate(End e, int j) const {
  return e == End::kLeft ? grid_(j) - x_lo_ : x_hi_ - grid_(j);
}

bool BGeometry1D::in_end(End e, int j) const {
  const auto [b, f] = end_range(e);
  return j >= b && j < f;
}

std::vector<int> BGeometry1D::outer_samples(End e, double fraction) const {
  std::vector<int> out;
  const auto [b, f] = end_range(e);
  const double cut = -(1.0 - fraction) * L_ + 1e-9 * h_;
  for (int j = b; j < f; ++j)
    if (end_coordinate(e, j) <= cut) out.push_back(j);
  if (out.empty()) out.push_back(e == End::kLeft ? b : f - 1);
  return out;
}

BFunction split_exp(const std::vector<CMat>& raw, const BGeometry1D& geometry,
                    const NumericPolicy& policy) {
  if (static_cast<int>(raw.size()) != geometry.size())
    throw ValidationError("split_exp: sample count does not match the grid");
  BFunction f;
  f.geometry = &geometry;
  f.samples = raw;
  const double L = geometry.end_length();
  for (End e : kEnds) {
    const int ei = static_cast<int>(e);
    const auto outer = geometry.outer_samples(e, 0.1);
    CMat fc = CMat::Zero(raw[0].rows(), raw[0].cols());
    for (int j : outer) fc += raw[j];
    fc /= static_cast<double>(outer.size());
    f.end_constant[ei] = fc;

    const auto [b, fin] = geometry.end_range(e);
    auto& dec = f.end_decaying[ei];
    dec.clear();
    double scale = 1.0, yq_dist = 1e300;
    int jq = b;
    for (int j = b; j < fin; ++j) {
      const double y = geometry.end_coordinate(e, j);
      dec.push_back(std::exp(-y) * (raw[j] - fc));
      scale = std::max(scale, max_norm(raw[j]));
      if (std::abs(y + 0.75 * L) < yq_dist) {
        yq_dist = std::abs(y + 0.75 * L);
        jq = j;
      }
    }
    // Freeze f_inf at the quarter point and test the exponential model on the
    // outermost quarter.
    const CMat finf = dec[jq - b];
    const double yq = geometry.end_coordinate(e, jq);
    double rem = 0;
    for (int j = b; j < fin; ++j) {
      const double y = geometry.end_coordinate(e, j);
      if (y > yq + 1e-12) continue;
      rem = std::max(rem, max_norm(raw[j] - fc - std::exp(y) * finf));
    }
    f.remainder = std::max(f.remainder, rem / scale);
  }
  f.flagged = f.remainder > policy.remainder_tol;
  return f;
}

BFunction split_exp(const RVec& raw, const BGeometry1D& geometry, const NumericPolicy& policy) {
  std::vector<CMat> s(raw.size());
  for (Eigen::Index j = 0; j < raw.size(); ++j) s[j] = CMat::Constant(1, 1, raw(j));
  return split_exp(s, geometry, policy);
}

BFunction split_exp(const CVec& raw, const BGeometry1D& geometry, const NumericPolicy& policy) {
  std::vector<CMat> s(raw.size());
  for (Eigen::Index j = 0; j < raw.size(); ++j) s[j] = CMat::Constant(1, 1, raw(j));
  return split_exp(s, geometry, policy);
}

double c1_norm(const std::vector<CMat>& samples, double h) {
  double vmax = 0, dmax = 0;
  for (size_t j = 0; j < samples.size(); ++j) {
    vmax = std::max(vmax, max_norm(samples[j]));
    if (j + 1 < samples.size()) dmax = std::max(dmax, max_norm(samples[j + 1] - samples[j]) / h);
  }
  return vmax + dmax;
}

double b_norm(const BFunction& a) {
  const BGeometry1D& g = *a.geometry;
  double inf_norm = 0;
  for (End e : kEnds) {
    const int ei = static_cast<int>(e);
    const auto [b, f] = g.end_range(e);
    std::vector<CMat> inner;
    for (int j = b; j < f; ++j)
      if (g.end_coordinate(e, j) >= -0.5 * g.end_length() - 1e-12) inner.push_back(a.end_decaying[ei][j - b]);
    if (e == End::kRight) std::reverse(inner.begin(), inner.end());
    inf_norm = std::max(inf_norm, c1_norm(inner, g.spacing()));
  }
  return c1_norm(a.samples, g.spacing()) + 2.0 * inf_norm;
}

RegularizedValue regularized_integral(const BFunction& f) {
  return regularized_integral(f, f.geometry->rule());
}

RegularizedValue regularized_integral(const BFunction& f, QuadratureRule rule) {
  const BGeometry1D& g = *f.geometry;
  const RVec w = rule == g.rule() ? g.weights() : g.weights(rule);
  RegularizedValue r;
  r.value = CMat::Zero(f.samples[0].rows(), f.samples[0].cols());
  for (int j = 0; j < g.size(); ++j) r.value += w(j) * f.samples[j];
  for (End e : kEnds) r.value -= g.end_length() * f.end_constant[static_cast<int>(e)];
  r.flagged = f.flagged;
  return r;
}

namespace {

void check_layout(const CMat& A, const LatticeLayout& layout) {
  if (A.rows() != layout.dim() || A.cols() != layout.dim())
    throw ValidationError("lattice operator does not match its layout");
}

}  // namespace

RVec site_traces(const CMat& A, const LatticeLayout& layout) {
  return site_traces_complex(A, layout).real();
}

CVec site_traces_complex(const CMat& A, const LatticeLayout& layout, const CMat* grading) {
  check_layout(A, layout);
  const int f = layout.fiber;
  CVec out(layout.sites);
  for (int s = 0; s < layout.sites; ++s) {
    const auto blk = A.block(static_cast<Eigen::Index>(s) * f, static_cast<Eigen::Index>(s) * f, f, f);
    out(s) = grading ? (*grading * blk).trace() : blk.trace();
  }
  return out;
}

CVec site_traces_of_product(const CMat& Lm, const CMat& M, const CMat& Rm,
                            const LatticeLayout& layout, const CMat* grading) {
  if (Lm.rows() != layout.dim() || Rm.rows() != layout.dim())
    throw ValidationError("site_traces_of_product: layout mismatch");
  const CMat LM = Lm * M;
  const int f = layout.fiber;
  CVec out(layout.sites);
  for (int s = 0; s < layout.sites; ++s) {
    const Eigen::Index o = static_cast<Eigen::Index>(s) * f;
    // Block (L M R^*)_{ss} = LM_rows * R_rows^*.
    const CMat blk = LM.middleRows(o, f) * Rm.middleRows(o, f).adjoint();
    out(s) = grading ? (*grading * blk).trace() : blk.trace();
  }
  return out;
}

RegularizedValue b_trace_from_sites(const CVec& site_tr, const LatticeLayout& layout,
                                    const BGeometry1D& geometry, const NumericPolicy& policy) {
  if (layout.offset < 0 || layout.offset + geometry.size() > layout.sites)
    throw ValidationError("b_trace: geometry grid not contained in the lattice");
  CVec density(geometry.size());
  for (int j = 0; j < geometry.size(); ++j) density(j) = site_tr(j + layout.offset) / layout.cell;
  const BFunction f = split_exp(density, geometry, policy);
  return regularized_integral(f, QuadratureRule::kTrapezoid);
}

RegularizedValue b_trace(const CMat& A, const LatticeLayout& layout, const BGeometry1D& geometry,
                         const NumericPolicy& policy) {
  return b_trace_from_sites(site_traces_complex(A, layout), layout, geometry, policy);
}

cd grid_trace(const CMat& A, const LatticeLayout& layout, const BGeometry1D& geometry) {
  const CVec s = site_traces_complex(A, layout);
  return s.segment(layout.offset, geometry.size()).sum();
}

}  // namespace speclab

#include <algorithm>
#include <cmath>

#include "speclab/jlo_eta.hpp"

namespace speclab {

namespace {

// t [D, a] in the eigenbasis of D: entries t (beta_i - beta_j) a_ij.
CMat scaled_commutator(const RVec& beta, const CMat& a_eig, double t) {
  CMat c = a_eig;
  for (Eigen::Index j = 0; j < c.cols(); ++j)
    for (Eigen::Index i = 0; i < c.rows(); ++i) c(i, j) *= t * (beta(i) - beta(j));
  return c;
}

double jlo_prefactor(int n) {
  if (n % 2 == 0) throw ValidationError("b-JLO cochain: even degree (the odd character has no even component)");
  const int k = (n - 1) / 2;
  return (k % 2 ? -1.0 : 1.0) / std::sqrt(kPi);
}

}  // namespace

JloEvaluator::JloEvaluator(HermitianOperator D, double t, TraceSpec trace, BracketOptions opt,
                           const NumericPolicy& policy)
    : D_(std::move(D)), t_(t), trace_(trace), opt_(opt), policy_(policy), heat_(HeatChain::for_operator(D_, t)) {
  if (!(t > 0)) throw ValidationError("JloEvaluator: scale t must be positive");
  D_eig_ = D_.spectrum().eigenvalues.cast<cd>().asDiagonal();
}

cd JloEvaluator::raw(const std::vector<CMat>& a) const {
  if (a.empty()) throw ValidationError("JloEvaluator: empty tensor");
  const RVec& beta = D_.spectrum().eigenvalues;
  std::vector<CMat> A;
  A.reserve(a.size());
  A.push_back(heat_.to_eigenbasis(a[0]));
  for (std::size_t i = 1; i < a.size(); ++i) A.push_back(scaled_commutator(beta, heat_.to_eigenbasis(a[i]), t_));
  return simplex_bracket(heat_, A, trace_, opt_, policy_);
}

std::vector<cd> JloEvaluator::raw_prefixes(const std::vector<CMat>& a) const {
  if (a.empty()) throw ValidationError("JloEvaluator: empty tensor");
  const RVec& beta = D_.spectrum().eigenvalues;
  std::vector<CMat> A;
  A.push_back(heat_.to_eigenbasis(a[0]));
  for (std::size_t i = 1; i < a.size(); ++i) A.push_back(scaled_commutator(beta, heat_.to_eigenbasis(a[i]), t_));
  return simplex_bracket_prefixes(heat_, A, trace_, opt_.contour_nodes, policy_);
}

cd JloEvaluator::cochain(const std::vector<CMat>& a) const {
  const int n = static_cast<int>(a.size()) - 1;
  return jlo_prefactor(n) * raw(a);
}

cd JloEvaluator::insertion_sum(const std::vector<CMat>& a, const CMat& X) const {
  if (a.empty()) throw ValidationError("JloEvaluator: empty tensor");
  const RVec& beta = D_.spectrum().eigenvalues;
  std::vector<CMat> A;
  A.push_back(heat_.to_eigenbasis(a[0]));
  for (std::size_t i = 1; i < a.size(); ++i) A.push_back(scaled_commutator(beta, heat_.to_eigenbasis(a[i]), t_));
  const CMat Xe = heat_.to_eigenbasis(X);
  cd sum = 0;
  for (std::size_t i = 0; i < A.size(); ++i) {
    std::vector<CMat> B(A.begin(), A.begin() + i + 1);
    B.push_back(Xe);
    B.insert(B.end(), A.begin() + i + 1, A.end());
    sum += (i % 2 ? -1.0 : 1.0) * simplex_bracket(heat_, B, trace_, opt_, policy_);
  }
  return sum;
}

cd JloEvaluator::transgression(const std::vector<CMat>& a) const {
  const int n = static_cast<int>(a.size()) - 1;
  return jlo_prefactor(n) * insertion_sum(a, D_.entries());
}

std::vector<CMat> chern_tensor(const CMat& g, int k) {
  const CMat gi = g.adjoint();
  std::vector<CMat> out;
  out.reserve(2 * k + 2);
  for (int i = 0; i <= k; ++i) {
    out.push_back(gi);
    out.push_back(g);
  }
  return out;
}

EntirenessFit entireness_fit(const JloEvaluator& ev, const std::vector<CMat>& a, const std::vector<double>& norms,
                             const std::vector<int>& degrees) {
  if (degrees.empty()) throw ValidationError("entireness_fit: no degrees");
  const int top = *std::max_element(degrees.begin(), degrees.end());
  if (static_cast<int>(a.size()) < top + 1 || static_cast<int>(norms.size()) < top + 1)
    throw ValidationError("entireness_fit: tensor shorter than the top degree");
  const std::vector<cd> raw = ev.raw_prefixes(std::vector<CMat>(a.begin(), a.begin() + top + 1));
  EntirenessFit f;
  for (int n : degrees) {
    if (n < 1 || (!f.degrees.empty() && n <= f.degrees.back()))
      throw ValidationError("entireness_fit: degrees must be positive and increasing");
    double prod = 1, fact = 1;
    for (int i = 0; i <= n; ++i) prod *= norms[i];
    for (int i = 2; i <= n; ++i) fact *= i;
    const double v = std::abs(jlo_prefactor(n) * raw[n]);
    f.degrees.push_back(n);
    f.value.push_back(v);
    f.norm_product.push_back(prod);
    f.ratio.push_back(v * fact / (std::ldexp(1.0, n) * (n + 1) * prod));
  }
  for (std::size_t i = 0; i + 1 < f.ratio.size(); ++i) {
    const double q = std::pow(f.ratio[i + 1] / f.ratio[i], 1.0 / (f.degrees[i + 1] - f.degrees[i]));
    f.growth.push_back(q);
    f.base = std::max(f.base, q);
  }
  for (std::size_t i = 0; i + 1 < f.growth.size(); ++i)
    f.max_growth_increase = std::max(f.max_growth_increase, f.growth[i + 1] / f.growth[i] - 1.0);
  return f;
}

AlphaPoint alpha_at(const HermitianOperator& D, const CMat& g, int K, double t, TraceSpec trace,
                    BracketOptions opt, const NumericPolicy& policy) {
  JloEvaluator ev(D, t, trace, opt, policy);
  const CMat gi = g.adjoint();
  AlphaPoint p;
  p.t = t;
  double fact = 1;
  cd total = 0;
  for (int k = 0; k <= K; ++k) {
    if (k > 0) fact *= k;
    const cd term = fact * (ev.cochain(chern_tensor(g, k)) - ev.cochain(chern_tensor(gi, k)));
    total += term;
    p.per_degree.push_back(term.real());
    if (k == K) p.tail = std::abs(term);
  }
  p.value = total.real();
  p.imag = total.imag();
  return p;
}

AlphaCurve alpha_curve(const HermitianOperator& D, const CMat& g, int K, const std::vector<double>& t_grid,
                       TraceSpec trace, BracketOptions opt, const std::function<double(double)>& boundary_rate,
                       double tail_tol, const NumericPolicy& policy) {
  for (std::size_t i = 1; i < t_grid.size(); ++i)
    if (!(t_grid[i] > t_grid[i - 1])) throw ValidationError("alpha_curve: t-grid must be strictly increasing");
  AlphaCurve c;
  for (double t : t_grid) {
    c.points.push_back(alpha_at(D, g, K, t, trace, opt, policy));
    if (c.points.back().tail > tail_tol) c.tail_warning = true;
  }
  const auto& P = c.points;
  const std::size_t m = P.size();
  if (m >= 2) {
    // alpha is even and smooth in t near 0; the large-t approach is taken as
    // O(t^-2).
    const double t1 = P[0].t, t2 = P[1].t;
    c.lim_small = P[0].value - (P[1].value - P[0].value) * t1 * t1 / (t2 * t2 - t1 * t1);
    const double s1 = 1 / (P[m - 1].t * P[m - 1].t), s2 = 1 / (P[m - 2].t * P[m - 2].t);
    c.lim_large = P[m - 1].value - (P[m - 2].value - P[m - 1].value) * s1 / (s2 - s1);
  } else if (m == 1) {
    c.lim_small = c.lim_large = P[0].value;
  }
  for (std::size_t i = 1; i + 1 < m; ++i) {
    c.derivative_fd.push_back((P[i + 1].value - P[i - 1].value) / (P[i + 1].t - P[i - 1].t));
    c.derivative_rhs.push_back(boundary_rate ? boundary_rate(P[i].t) : 0.0);
  }
  return c;
}

}  // namespace speclab

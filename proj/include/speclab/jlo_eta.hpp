#pragma once

#include <functional>
#include <string>
#include <vector>

#include "speclab/b_geometry.hpp"
#include "speclab/cyclic_algebra.hpp"
#include "speclab/dirac.hpp"
#include "speclab/operator_core.hpp"
#include "speclab/spectral_flow.hpp"

namespace speclab {

// exp[mu_0, ..., mu_n], the simplex integral of e^{sigma . mu}. Sorted-node
// recurrence; sub-tables whose nodes lie within a unit window (or the
// policy's relative cluster width, whichever is larger) use the Taylor series
// about their mean.
double divided_difference_exp(std::vector<double> nodes, const NumericPolicy& policy = default_policy());
// Oracle: top-right entry of the exponential of the upper-bidiagonal matrix
// with the nodes on the diagonal.
double divided_difference_exp_bidiagonal(const std::vector<double>& nodes);

enum class BracketMethod { kAuto, kTupleSum, kVanLoan, kContour };
const char* to_string(BracketMethod m);

struct BracketOptions {
  BracketMethod method = BracketMethod::kAuto;
  bool prune = true;
  double tuple_budget = 5e7;   // leaves of the tuple sum before it is refused
  int van_loan_max_dim = 1200; // largest (n + 1) dim block matrix
  int contour_nodes = 32;      // Talbot quadrature nodes
};

// Simplex integrals for the heat semigroup e^{sigma H}, H = V diag(mu) V^* with
// mu <= 0 (mu = -t^2 beta^2 for a Hermitian D). Operands are given in the
// eigenbasis.
class HeatChain {
 public:
  HeatChain(RVec mu, CMat V);
  // H = -t^2 D^2.
  static HeatChain for_operator(const HermitianOperator& D, double t);

  const RVec& nodes() const { return mu_; }
  const CMat& basis() const { return V_; }
  Eigen::Index dim() const { return mu_.size(); }
  CMat to_eigenbasis(const CMat& A) const { return V_.adjoint() * A * V_; }
  CMat from_eigenbasis(const CMat& A) const { return V_ * A * V_.adjoint(); }

  // W = int_{Delta^n} e^{s_0 H} B_1 e^{s_1 H} ... B_n e^{s_n H} ds (n = B.size(),
  // W = e^H for n = 0), eigenbasis in and out.
  CMat chain(const std::vector<CMat>& B, const BracketOptions& opt = {},
             const NumericPolicy& policy = default_policy()) const;
  BracketMethod choose(const std::vector<CMat>& B, const BracketOptions& opt) const;

  CMat chain_tuple(const std::vector<CMat>& B, bool prune, double budget,
                   const NumericPolicy& policy = default_policy()) const;
  CMat chain_van_loan(const std::vector<CMat>& B) const;
  CMat chain_contour(const std::vector<CMat>& B, int nodes) const;
  // Chains of every prefix B_1..B_m, m = 0..n, from one contour pass.
  std::vector<CMat> chain_contour_prefixes(const std::vector<CMat>& B, int nodes) const;
  // T_0..T_N with T_m the chain of m copies of Q: the s-Taylor coefficients of
  // e^{H + sQ}, by scaling and squaring in matrix polynomials truncated at
  // degree N.
  std::vector<CMat> power_series(const CMat& Q, int N) const;

 private:
  RVec mu_;
  CMat V_;
};

// <A_0, ..., A_n> = int Tr(A_0 e^{s_0 H} A_1 ... A_n e^{s_n H}) with the matrix
// trace, or with the b-trace of the kernel diagonal. Operands in the
// eigenbasis; `weight` (original basis, e.g. a grading) is applied before the
// trace.
struct TraceSpec {
  TraceBackend backend = TraceBackend::kMatrix;
  const BTraceContext* context = nullptr;
  const CMat* weight = nullptr;
};
cd simplex_bracket(const HeatChain& heat, const std::vector<CMat>& A_eig, const TraceSpec& trace = {},
                   const BracketOptions& opt = {}, const NumericPolicy& policy = default_policy());
// Brackets of every prefix (A_0, ..., A_m), m = 0..n, by one contour pass.
std::vector<cd> simplex_bracket_prefixes(const HeatChain& heat, const std::vector<CMat>& A_eig,
                                         const TraceSpec& trace = {}, int contour_nodes = 32,
                                         const NumericPolicy& policy = default_policy());

// Reduced form of the b-JLO cochain of tD: for n = 2k + 1,
//   bCh^n(tD)(a_0, ..., a_n) = (-1)^k / sqrt(pi) <a_0, [tD, a_1], ..., [tD, a_n]>.
// The one-form (dt) component inserts D after each slot with sign (-1)^i and
// carries the same prefactor.
class JloEvaluator {
 public:
  JloEvaluator(HermitianOperator D, double t, TraceSpec trace = {}, BracketOptions opt = {},
               const NumericPolicy& policy = default_policy());

  double t() const { return t_; }
  const HeatChain& heat() const { return heat_; }
  const HermitianOperator& op() const { return D_; }

  cd cochain(const std::vector<CMat>& a) const;
  cd transgression(const std::vector<CMat>& a) const;
  // Sum_i (-1)^i <a_0, [tD, a_1], ..., [tD, a_i], X, [tD, a_{i+1}], ...> for any
  // parity of n (no prefactor).
  cd insertion_sum(const std::vector<CMat>& a, const CMat& X) const;
  // <a_0, [tD, a_1], ..., [tD, a_n]> without prefactor.
  cd raw(const std::vector<CMat>& a) const;
  // raw() of every prefix (a_0, ..., a_m), m = 0..n, sharing one contour pass.
  std::vector<cd> raw_prefixes(const std::vector<CMat>& a) const;

 private:
  HermitianOperator D_;
  double t_;
  TraceSpec trace_;
  BracketOptions opt_;
  NumericPolicy policy_;
  HeatChain heat_;
  CMat D_eig_;
};

// The tensors (g^{-1}, g, ..., g^{-1}, g) of length 2k + 2 as operators.
std::vector<CMat> chern_tensor(const CMat& g, int k);

// Growth of |bCh^n(a_0, ..., a_n)| against the entireness bound shape
// 2^n (n + 1) / n! * prod |a_i|: ratio_n = |bCh^n| n! / (2^n (n + 1) prod |a_i|)
// must grow at most geometrically. growth[i] = (ratio_{n_{i+1}} / ratio_{n_i})^{1/(n_{i+1} - n_i)};
// base is the largest such factor.
struct EntirenessFit {
  std::vector<int> degrees;
  std::vector<double> value, norm_product, ratio, growth;
  double base = 0;
  double max_growth_increase = 0;  // largest relative increase between successive factors
};
EntirenessFit entireness_fit(const JloEvaluator& ev, const std::vector<CMat>& a, const std::vector<double>& norms,
                             const std::vector<int>& degrees);

struct AlphaPoint {
  double t = 0;
  double value = 0;       // sum_{k <= K} k! [bCh^{2k+1}(g^{-1}, g, ...) - bCh^{2k+1}(g, g^{-1}, ...)]
  double imag = 0;        // imaginary residue (0 in exact arithmetic)
  double tail = 0;        // |top-degree term|
  std::vector<double> per_degree;
};
struct AlphaCurve {
  std::vector<AlphaPoint> points;
  double lim_small = 0, lim_large = 0;  // Richardson-style extrapolations in t
  std::vector<double> derivative_fd;     // centered differences at interior grid points
  std::vector<double> derivative_rhs;    // transgression prediction (0 without a boundary)
  bool tail_warning = false;
};
// alpha(t) on the grid. `boundary_rate`, when given, returns the predicted
// d alpha / dt (twice the eta-pairing integrand for a b-operator).
AlphaCurve alpha_curve(const HermitianOperator& D, const CMat& g, int K, const std::vector<double>& t_grid,
                       TraceSpec trace = {}, BracketOptions opt = {},
                       const std::function<double(double)>& boundary_rate = nullptr,
                       double tail_tol = 1e-3, const NumericPolicy& policy = default_policy());
AlphaPoint alpha_at(const HermitianOperator& D, const CMat& g, int K, double t, TraceSpec trace = {},
                    BracketOptions opt = {}, const NumericPolicy& policy = default_policy());

// Higher eta cochain of a graded boundary operator M (grading Gamma
// anticommuting with M):
//   eta^{2k+1}(a) = (-1)^k / (2 pi i) int_0^inf sum_i (-1)^i
//                   Str_Gamma <a_0, [tM, a_1], ..., [tM, a_i], M, ...> dt.
class OutsideConvergenceRadius : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class EtaCochain {
 public:
  EtaCochain(CMat boundary_operator, CMat grading, const NumericPolicy& policy = default_policy());

  double lambda() const { return lambda_; }  // lowest |eigenvalue| of M
  const CMat& op() const { return M_; }
  const CMat& grading() const { return G_; }

  cd integrand(const std::vector<CMat>& a, double t) const;
  // Tangent substitution t = tan(pi tau / 2), 64-node Gauss panels doubled to
  // convergence. Throws OutsideConvergenceRadius unless |[M, a_i]| < lambda.
  cd evaluate(const std::vector<CMat>& a, double* quad_error = nullptr) const;
  double commutator_norm(const CMat& a) const;

 private:
  CMat M_, G_;
  HermitianOperator Mh_;
  double lambda_ = 0;
  NumericPolicy policy_;
  HeatChain heat_unit_;
};

struct EtaEnd {
  CMat boundary_operator;
  CMat grading;   // i c(nu) for the end's conormal
  CMat g;         // boundary value of the unitary
};
struct EtaPairing {
  double value = 0;                    // sum over ends and k <= K of k! eta^{2k+1}_e
  std::vector<double> per_end;
  std::vector<std::vector<double>> terms;  // [end][k]
  double tail = 0;                     // |sum over ends of the k = K term|
  double imag = 0;
  double quad_error = 0;
  double commutator_ratio = 0;         // max_e |[M_e, g_e]| / lambda_e
  double closed_form = 0;              // sum_e (1/2 pi) [arg det g|_{Gamma=+1} - arg det g|_{Gamma=-1}]
};
EtaPairing eta_pairing(const std::vector<EtaEnd>& ends, int K, const NumericPolicy& policy = default_policy());
// Boundary data of a lattice Dirac operator; the unitary is the fiber matrix
// at each end.
std::vector<EtaEnd> boundary_ends(const BDiracOperator& D, const CMat& g_left, const CMat& g_right,
                                  bool flip_orientation = false);
// Signed eta-pairing integrand at t (sum over ends and degrees).
double eta_pairing_integrand(const std::vector<EtaEnd>& ends, int K, double t,
                             const NumericPolicy& policy = default_policy());

// Superconnection A = d + D_{u,s}, D_{u,s} = t D_u + s p on H (x) C^{1|1} (spinor
// doubling) (x) C^{1|1} (the graded C^{r|r} of p), matrix backend. Index
// order (c, spinor, h) with c the C^{1|1} factor of p.
class SuperconnectionGrid {
 public:
  SuperconnectionGrid(const CMat& D, const CMat& g, double t, const NumericPolicy& policy = default_policy());

  Eigen::Index dim() const { return p_.rows(); }
  double t() const { return t_; }
  double s_max() const { return s_max_; }
  double commutator_bound() const { return K_; }  // |[t D_u, p]| / 2 over u
  const CMat& p() const { return p_; }
  CMat Du(double u) const { return (1 - u) * Dfrak_ + u * pDp_; }
  CMat Du_dot() const { return pDp_ - Dfrak_; }
  CMat Dus(double u, double s) const { return t_ * Du(u) + s * p_; }
  // Str_(1)(A) = Str(e_1 A) / (2 sqrt(-pi)).
  cd str1(const CMat& A) const;
  CMat str1_weight() const { return Gamma_ * e1_; }  // Str(e_1 A) = tr(weight A)

  // One-form coefficients of Ch(A) at (u, s): du -> Str_(1)(t Ddot_u e^{X^2}), ds ->
  // Str_(1)(p e^{X^2}), X = D_{u,s}.
  cd du_component(double u, double s) const;
  cd ds_component(double u, double s) const;
  // ds component by the Duhamel series in s about D_u (order chosen from the
  // Gaussian tail bound), the terms computed as simplex brackets.
  cd ds_component_series(double u, double s, int* order_used = nullptr) const;

 private:
  CMat Dfrak_, pDp_, p_, e1_, Gamma_;
  RVec grading_;
  double t_, K_, s_max_;
  NumericPolicy policy_;
};

enum class Contour { kGamma0, kGamma1, kGammaS0, kGammaSmax };
const char* to_string(Contour c);
struct ContourValue {
  cd value = 0;
  double quad_error = 0;
};
// Gamma_1 stands for the contour at u = u_end and the gamma contours run over
// [0, u_end] (u_end = 1 is the full rectangle).
ContourValue contour_integral(const SuperconnectionGrid& grid, Contour c, double rel_tol = 1e-10,
                              double u_end = 1.0);

struct StokesReport {
  cd gamma0_u, gamma1_u, gamma_s0, gamma_smax;  // Gamma_0, Gamma_1, gamma_0, gamma_{S_max}
  cd interior = 0;                             // int dCh (0 for the matrix backend)
  cd lemma_pairing = 0;   // (1/2) sum_k k! <p, [tD, p], ..., [tD, p]>_{2k+1}
  int lemma_terms = 0;
  double quad_error = 0;
  double residual() const { return std::abs(gamma1_u - gamma0_u + gamma_s0 - gamma_smax - interior); }
};
StokesReport stokes_residual(const SuperconnectionGrid& grid, double rel_tol = 1e-10, double u_end = 1.0);
// (1/2) sum_k k! <p, Q, ..., Q> with 2k + 1 copies of Q = [t D_0, p], Str_(1);
// terms are added until they fall below tol.
cd lemma_pairing(const SuperconnectionGrid& grid, int* terms = nullptr, double tol = 1e-14);

}  // namespace speclab

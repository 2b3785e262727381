#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "speclab/b_geometry.hpp"
#include "speclab/block_tridiag.hpp"
#include "speclab/operator_core.hpp"

namespace speclab {

// Endpoint kernels count as nonnegative (literal reading) or are excluded.
enum class Endpoint { kNonnegative, kPositive };
enum class TraceBackend { kMatrix, kBTrace };

const char* to_string(Endpoint e);
Endpoint endpoint_from_string(const std::string& s);

// Where b-traces of dense lattice operators are taken.
struct BTraceContext {
  LatticeLayout layout;
  const BGeometry1D* geometry = nullptr;
};

// Path (1-u) T0 + u T1 of block-tridiagonal operators.
class BlockPath {
 public:
  BlockPath(BlockTridiagonal t0, BlockTridiagonal t1);
  BlockTridiagonal sample(double u) const { return BlockTridiagonal::combine(1 - u, t0_, u, t1_); }
  double derivative_norm_bound() const { return dot_norm_; }
  // Convexity bound on the norm of sample(u).
  double norm_bound(double u) const { return (1 - u) * norm0_ + u * norm1_; }
  const BlockTridiagonal& endpoint0() const { return t0_; }
  const BlockTridiagonal& endpoint1() const { return t1_; }

 private:
  BlockTridiagonal t0_, t1_;
  double dot_norm_, norm0_, norm1_;
};

struct PointedGapInterval {
  double a = 0, b = 0, u0 = 0;
  double lambda0 = 0;    // counting level for this interval
  int n_a = 0, n_b = 0;  // eigenvalues in [0, lambda0) (or (0, lambda0)) at a and b
  int q_plus = 0, q_minus = 0;  // upward / downward zero crossings seen inside
  int window_count = 0;         // branches in (-lambda0, lambda0) at u0
  int kernel_dim_u0 = 0;
  double margin = 0;            // least distance of the sampled spectrum from +-lambda0
};

struct Crossing {
  double u = 0;
  int direction = 0;          // +1 upward through zero
  double doubler_weight = 0;  // classifier value at the sample after the crossing
  bool physical = true;
};

struct TrackingOptions {
  double lambda0 = 0;  // window radius; 0 picks 0.5 for matrix paths
  Endpoint endpoint = Endpoint::kNonnegative;
  double max_step = 0.05;
  double artifact_threshold = 0.5;
  // Per-eigenvector classifier; crossings with value above the threshold are
  // lattice artifacts.
  std::function<double(const CVec&)> classifier;
};

struct SpectralFlowReport {
  int total = 0;     // sum of n_b - n_a over the pointed gap intervals
  int crossing_sum = 0;  // sum of crossing directions (must equal total)
  int physical = 0, artifact = 0;
  std::vector<PointedGapInterval> intervals;
  std::vector<Crossing> crossings;
  std::string method;
  Endpoint endpoint = Endpoint::kNonnegative;
  int samples = 0;
  double lambda0 = 0;
};

SpectralFlowReport spectral_flow_tracking(const OperatorPath& path, const TrackingOptions& opt = {},
                                          const NumericPolicy& policy = default_policy());
SpectralFlowReport spectral_flow_tracking(const BlockPath& path, const TrackingOptions& opt,
                                          const NumericPolicy& policy = default_policy());
// Tracking on [a, b] only (additivity checks).
SpectralFlowReport spectral_flow_tracking(const OperatorPath& path, double a, double b,
                                          const TrackingOptions& opt = {},
                                          const NumericPolicy& policy = default_policy());
// Net counterclockwise crossings of the phase pi by the eigenvalues of the
// Cayley transform, which is formed by a linear solve and diagonalized by a
// general complex eigensolver.
SpectralFlowReport spectral_flow_winding(const OperatorPath& path, const TrackingOptions& opt = {},
                                         const NumericPolicy& policy = default_policy());

// (1/4) <psi, (-Delta_h h^2) psi> over the lattice sites: ~0 for smooth modes,
// ~1 for modes at the edge of the Brillouin zone.
double doubler_weight(const CVec& psi, int site_dim);

// Truncated eta invariant.
double eta_truncated(const HermitianOperator& D, double eps, TraceBackend backend = TraceBackend::kMatrix,
                     const BTraceContext* ctx = nullptr, const NumericPolicy& policy = default_policy());
double xi_truncated(const HermitianOperator& D, double eps, TraceBackend backend = TraceBackend::kMatrix,
                    const BTraceContext* ctx = nullptr, const NumericPolicy& policy = default_policy());
// Per-mode weight (2/sqrt pi) int_eps^T beta e^{-t^2 beta^2} dt by Gauss-Legendre
// panels (the quadrature used by the b-trace backend).
double eta_mode_weight(double beta, double eps, double t_max);

// Invertible part B = f(D) with f(x) = x for |x| >= lambda0 and 1 inside; its
// derivative along Ddot by Daleckii-Krein.
struct InvertibleFamilyPoint {
  HermitianOperator B;
  CMat Bdot;
};
InvertibleFamilyPoint invertible_part(const OperatorPath& path, double u, double lambda0,
                                      const NumericPolicy& policy = default_policy());

// E_eps for the family through B with velocity Bdot.
double E_term(const HermitianOperator& B, const CMat& Bdot, double eps, TraceBackend backend,
              const BTraceContext* ctx = nullptr, const NumericPolicy& policy = default_policy());
// -(2 eps / sqrt pi) bTr(Bdot e^{-eps^2 B^2}).
double eta_local_term(const HermitianOperator& B, const CMat& Bdot, double eps, TraceBackend backend,
                      const BTraceContext* ctx = nullptr, const NumericPolicy& policy = default_policy());
// Tensor-product (s, t) quadrature of the defining double integral of E_eps;
// independent of the closed-form weights.
double E_term_quadrature(const HermitianOperator& B, const CMat& Bdot, double eps, const BTraceContext& ctx,
                         int s_nodes = 24, int t_panels = 48, const NumericPolicy& policy = default_policy());

struct EtaDerivativeCheck {
  double finite_difference = 0, local = 0, E = 0;
  double u_used = 0;
  double residual() const { return std::abs(finite_difference - (local + E)); }
};
// Family B_u = f(D_u) (lambda0 > 0) or B_u = D_u (lambda0 = 0).
EtaDerivativeCheck eta_derivative_check(const OperatorPath& path, double u, double eps, double lambda0,
                                        TraceBackend backend, const BTraceContext* ctx = nullptr,
                                        double du = 1e-4, const NumericPolicy& policy = default_policy());

struct GetzlerResult {
  double value = 0;
  int order = 0;
  double last_change = 0;
};
GetzlerResult getzler_integral(const OperatorPath& path, double eps, TraceBackend backend = TraceBackend::kMatrix,
                               const BTraceContext* ctx = nullptr, const NumericPolicy& policy = default_policy());

// Gauss-Legendre nodes and weights on [-1, 1].
void gauss_legendre(int n, RVec& x, RVec& w);

}  // namespace speclab

#include <cmath>
#include <map>
#include <mutex>

#include "speclab/spectral_flow.hpp"

namespace speclab {

void gauss_legendre(int n, RVec& x, RVec& w) {
  static std::mutex mu;
  static std::map<int, std::pair<RVec, RVec>> cache;
  {
    std::lock_guard<std::mutex> lock(mu);
    auto it = cache.find(n);
    if (it != cache.end()) {
      x = it->second.first;
      w = it->second.second;
      return;
    }
  }
  x.resize(n);
  w.resize(n);
  for (int i = 0; i < (n + 1) / 2; ++i) {
    double z = std::cos(kPi * (i + 0.75) / (n + 0.5));
    double dp = 0;
    for (int it = 0; it < 100; ++it) {
      double p0 = 1, p1 = z;
      for (int k = 2; k <= n; ++k) {
        const double p2 = ((2 * k - 1) * z * p1 - (k - 1) * p0) / k;
        p0 = p1;
        p1 = p2;
      }
      dp = n * (z * p1 - p0) / (z * z - 1);
      const double dz = p1 / dp;
      z -= dz;
      if (std::abs(dz) < 1e-16) break;
    }
    {
      double p0 = 1, p1 = z;
      for (int k = 2; k <= n; ++k) {
        const double p2 = ((2 * k - 1) * z * p1 - (k - 1) * p0) / k;
        p0 = p1;
        p1 = p2;
      }
      dp = n * (z * p1 - p0) / (z * z - 1);
    }
    x(i) = -z;
    x(n - 1 - i) = z;
    w(i) = w(n - 1 - i) = 2.0 / ((1 - z * z) * dp * dp);
  }
  std::lock_guard<std::mutex> lock(mu);
  cache[n] = {x, w};
}

namespace {

double kernel_tol(const HermitianOperator& D, const NumericPolicy& p) {
  return p.kernel_rel_tol * std::max(1.0, D.spectral_radius());
}

void require_ctx(const BTraceContext* ctx, const HermitianOperator& D) {
  if (!ctx || !ctx->geometry) throw ValidationError("b-trace backend needs a lattice context");
  if (ctx->layout.dim() != D.dim()) throw ValidationError("b-trace backend: layout does not match operator");
}

// Real part of bTr(V diag(f) V^*).
double btrace_diag_function(const SpectralDecomposition& s, const RVec& f, const BTraceContext& ctx,
                            const NumericPolicy& pol) {
  const RVec rows = s.eigenvectors.cwiseAbs2() * f;
  CVec sites = CVec::Zero(ctx.layout.sites);
  const int fd = ctx.layout.fiber;
  for (int st = 0; st < ctx.layout.sites; ++st) sites(st) = rows.segment(st * fd, fd).sum();
  return b_trace_from_sites(sites, ctx.layout, *ctx.geometry, pol).scalar().real();
}

// bTr(V M V^*) for a matrix M given in the eigenbasis.
cd btrace_eigenbasis(const SpectralDecomposition& s, const CMat& M, const BTraceContext& ctx,
                     const NumericPolicy& pol) {
  const CVec sites = site_traces_of_product(s.eigenvectors, M, s.eigenvectors, ctx.layout);
  return b_trace_from_sites(sites, ctx.layout, *ctx.geometry, pol).scalar();
}

}  // namespace

double eta_mode_weight(double beta, double eps, double t_max) {
  if (beta == 0) return 0;
  const double a = std::abs(beta);
  // (2/sqrt pi) sign(beta) int_{eps a}^{T a} e^{-s^2} ds on unit-width panels.
  const double lo = eps * a, hi = std::min(t_max * a, 7.0);
  if (hi <= lo) return 0;
  RVec x, w;
  gauss_legendre(16, x, w);
  const int panels = std::max(1, static_cast<int>(std::ceil((hi - lo) / 0.5)));
  const double width = (hi - lo) / panels;
  double acc = 0;
  for (int p = 0; p < panels; ++p) {
    const double c = lo + (p + 0.5) * width;
    for (int i = 0; i < x.size(); ++i) {
      const double s = c + 0.5 * width * x(i);
      acc += 0.5 * width * w(i) * std::exp(-s * s);
    }
  }
  return (beta > 0 ? 1.0 : -1.0) * 2.0 / std::sqrt(kPi) * acc;
}

double eta_truncated(const HermitianOperator& D, double eps, TraceBackend backend, const BTraceContext* ctx,
                     const NumericPolicy& policy) {
  if (!(eps > 0)) throw ValidationError("eta_truncated: eps must be positive");
  const SpectralDecomposition& s = D.spectrum();
  const double ktol = kernel_tol(D, policy);
  if (backend == TraceBackend::kMatrix) {
    double acc = 0;
    for (Eigen::Index k = 0; k < s.dim(); ++k) {
      const double b = s.eigenvalues(k);
      if (std::abs(b) < ktol) continue;
      acc += (b > 0 ? 1.0 : -1.0) * std::erfc(eps * std::abs(b));
    }
    return acc;
  }
  require_ctx(ctx, D);
  const double gap = s.eigenvalues.cwiseAbs().minCoeff();
  if (gap < ktol) throw ValidationError("eta_truncated: b-backend gap estimate not positive; tail not controllable");
  const double t_max = std::sqrt(policy.eta_gap_tmax_product) / gap;
  RVec f(s.dim());
  for (Eigen::Index k = 0; k < s.dim(); ++k) f(k) = eta_mode_weight(s.eigenvalues(k), eps, t_max);
  return btrace_diag_function(s, f, *ctx, policy);
}

double xi_truncated(const HermitianOperator& D, double eps, TraceBackend backend, const BTraceContext* ctx,
                    const NumericPolicy& policy) {
  const double ktol = kernel_tol(D, policy);
  int kern = 0;
  for (Eigen::Index k = 0; k < D.dim(); ++k)
    if (std::abs(D.spectrum().eigenvalues(k)) < ktol) ++kern;
  if (backend == TraceBackend::kBTrace && kern > 0)
    throw ValidationError("xi_truncated: b-backend needs an invertible operator");
  const double eta = eta_truncated(D, eps, backend, ctx, policy);
  return 0.5 * (eta + kern);
}

InvertibleFamilyPoint invertible_part(const OperatorPath& path, double u, double lambda0,
                                      const NumericPolicy& policy) {
  const HermitianOperator Du = path.sample(u);
  if (lambda0 <= 0) return {Du, path.derivative().entries()};
  const SpectralDecomposition& s = Du.spectrum();
  for (Eigen::Index k = 0; k < s.dim(); ++k)
    if (std::abs(std::abs(s.eigenvalues(k)) - lambda0) < policy.gap_tol)
      throw AmbiguousWindow("invertible_part: eigenvalue at the window edge");
  auto f = [lambda0](double x) { return std::abs(x) >= lambda0 ? x : 1.0; };
  auto df = [lambda0](double x) { return std::abs(x) >= lambda0 ? 1.0 : 0.0; };
  CMat B = s.apply(f);
  CMat Bdot = functional_derivative(s, path.derivative().entries(), f, df);
  return {HermitianOperator(0.5 * (B + B.adjoint())), 0.5 * (Bdot + Bdot.adjoint())};
}

namespace {

// phi(a) = int_eps^infty e^{-t^2 a} dt and its derivative.
double phi(double a, double eps) { return 0.5 * std::sqrt(kPi) * std::erfc(eps * std::sqrt(a)) / std::sqrt(a); }
double dphi(double a, double eps) {
  const double r = std::sqrt(a);
  return -eps * std::exp(-eps * eps * a) / (2 * a) - 0.25 * std::sqrt(kPi) * std::erfc(eps * r) / (a * r);
}
double phi_dd(double ai, double aj, double eps) {
  if (std::abs(ai - aj) <= 1e-6 * std::max(ai, aj)) return dphi(0.5 * (ai + aj), eps);
  return (phi(ai, eps) - phi(aj, eps)) / (ai - aj);
}

}  // namespace

double E_term(const HermitianOperator& B, const CMat& Bdot, double eps, TraceBackend backend,
              const BTraceContext* ctx, const NumericPolicy& policy) {
  // The honest trace kills the commutator terms identically.
  if (backend == TraceBackend::kMatrix) return 0.0;
  require_ctx(ctx, B);
  const SpectralDecomposition& s = B.spectrum();
  const Eigen::Index n = s.dim();
  if (s.eigenvalues.cwiseAbs().minCoeff() < kernel_tol(B, policy))
    throw ValidationError("E_term: B is not invertible");
  CMat M = s.eigenvectors.adjoint() * Bdot * s.eigenvectors;
  const double c = 2.0 / std::sqrt(kPi);
  for (Eigen::Index i = 0; i < n; ++i) {
    const double bi = s.eigenvalues(i), ai = bi * bi;
    for (Eigen::Index j = 0; j < n; ++j) {
      const double bj = s.eigenvalues(j), aj = bj * bj;
      const double w = bi * (bi + bj) * phi_dd(ai, aj, eps) - 2 * aj * dphi(aj, eps);
      M(i, j) *= c * w;
    }
  }
  return btrace_eigenbasis(s, M, *ctx, policy).real();
}

double E_term_quadrature(const HermitianOperator& B, const CMat& Bdot, double eps, const BTraceContext& ctx,
                         int s_nodes, int t_panels, const NumericPolicy& policy) {
  require_ctx(&ctx, B);
  const SpectralDecomposition& s = B.spectrum();
  const Eigen::Index n = s.dim();
  const double gap = s.eigenvalues.cwiseAbs().minCoeff();
  const double t_max = std::sqrt(policy.eta_gap_tmax_product) / gap;
  RVec xs, ws, xt, wt;
  gauss_legendre(s_nodes, xs, ws);
  gauss_legendre(16, xt, wt);
  const RVec a = s.eigenvalues.array().square();
  // Weight matrix accumulated over (s, t) nodes:
  //   b_i * d/du e^{-t^2 B^2} + 2 t^2 Bdot B^2 e^{-t^2 B^2}, Duhamel in s.
  RMat W = RMat::Zero(n, n);
  // Geometric panels resolve the fast decay of large modes near t = eps.
  const double ratio = std::pow(t_max / eps, 1.0 / t_panels);
  double t0 = eps;
  for (int p = 0; p < t_panels; ++p) {
    const double t1 = t0 * ratio;
    for (int q = 0; q < xt.size(); ++q) {
      const double t = 0.5 * (t0 + t1) + 0.5 * (t1 - t0) * xt(q);
      const double wtq = 0.5 * (t1 - t0) * wt(q);
      const double t2 = t * t;
      RVec ej = (-t2 * a).array().exp();
      for (Eigen::Index i = 0; i < n; ++i) {
        for (Eigen::Index j = 0; j < n; ++j) {
          double duh = 0;
          for (int r = 0; r < s_nodes; ++r) {
            const double sv = 0.5 * (1 + xs(r));
            duh += 0.5 * ws(r) * std::exp(-sv * t2 * a(i) - (1 - sv) * t2 * a(j));
          }
          const double bi = s.eigenvalues(i), bj = s.eigenvalues(j);
          W(i, j) += wtq * (-t2 * bi * (bi + bj) * duh + 2 * t2 * a(j) * ej(j));
        }
      }
    }
    t0 = t1;
  }
  CMat M = s.eigenvectors.adjoint() * Bdot * s.eigenvectors;
  M = M.cwiseProduct(W.cast<cd>()) * (2.0 / std::sqrt(kPi));
  return btrace_eigenbasis(s, M, ctx, policy).real();
}

double eta_local_term(const HermitianOperator& B, const CMat& Bdot, double eps, TraceBackend backend,
                      const BTraceContext* ctx, const NumericPolicy& policy) {
  const SpectralDecomposition& s = B.spectrum();
  CMat M = s.eigenvectors.adjoint() * Bdot * s.eigenvectors;
  const double c = -2.0 * eps / std::sqrt(kPi);
  if (backend == TraceBackend::kMatrix) {
    double acc = 0;
    for (Eigen::Index k = 0; k < s.dim(); ++k)
      acc += M(k, k).real() * std::exp(-eps * eps * s.eigenvalues(k) * s.eigenvalues(k));
    return c * acc;
  }
  require_ctx(ctx, B);
  for (Eigen::Index j = 0; j < s.dim(); ++j)
    M.col(j) *= std::exp(-eps * eps * s.eigenvalues(j) * s.eigenvalues(j));
  return c * btrace_eigenbasis(s, M, *ctx, policy).real();
}

EtaDerivativeCheck eta_derivative_check(const OperatorPath& path, double u, double eps, double lambda0,
                                        TraceBackend backend, const BTraceContext* ctx, double du,
                                        const NumericPolicy& policy) {
  EtaDerivativeCheck r;
  const double nu = path.derivative().spectral_radius();
  // Stay away from kernel crossings and window-edge hits of the family.
  double uu = u;
  for (int attempt = 0; attempt < 50; ++attempt) {
    const HermitianOperator Du = path.sample(uu);
    const SpectralDecomposition& s = Du.spectrum();
    double worst = 1e300;
    for (Eigen::Index k = 0; k < s.dim(); ++k) {
      const double b = std::abs(s.eigenvalues(k));
      worst = std::min(worst, b);
      if (lambda0 > 0) worst = std::min(worst, std::abs(b - lambda0));
    }
    if (worst > 4 * nu * du + 1e-6) break;
    uu += 5 * du;
  }
  r.u_used = uu;
  auto eta_at = [&](double v) {
    const auto p = invertible_part(path, v, lambda0, policy);
    return eta_truncated(p.B, eps, backend, ctx, policy);
  };
  r.finite_difference = (eta_at(uu + du) - eta_at(uu - du)) / (2 * du);
  const auto p = invertible_part(path, uu, lambda0, policy);
  r.local = eta_local_term(p.B, p.Bdot, eps, backend, ctx, policy);
  r.E = E_term(p.B, p.Bdot, eps, backend, ctx, policy);
  return r;
}

GetzlerResult getzler_integral(const OperatorPath& path, double eps, TraceBackend backend, const BTraceContext* ctx,
                               const NumericPolicy& policy) {
  const CMat& Dd = path.derivative().entries();
  auto integrand = [&](double u) {
    const HermitianOperator Du = path.sample(u);
    const SpectralDecomposition& s = Du.spectrum();
    if (backend == TraceBackend::kMatrix) {
      double acc = 0;
      for (Eigen::Index k = 0; k < s.dim(); ++k)
        acc += (s.eigenvectors.col(k).adjoint() * Dd * s.eigenvectors.col(k))(0, 0).real() *
               std::exp(-eps * eps * s.eigenvalues(k) * s.eigenvalues(k));
      return acc;
    }
    require_ctx(ctx, Du);
    CMat M = s.eigenvectors.adjoint() * Dd * s.eigenvectors;
    for (Eigen::Index j = 0; j < s.dim(); ++j) M.col(j) *= std::exp(-eps * eps * s.eigenvalues(j) * s.eigenvalues(j));
    return btrace_eigenbasis(s, M, *ctx, policy).real();
  };
  GetzlerResult res;
  double prev = 0;
  for (int n = 16; n <= 1024; n *= 2) {
    RVec x, w;
    gauss_legendre(n, x, w);
    double acc = 0;
    for (int i = 0; i < n; ++i) acc += 0.5 * w(i) * integrand(0.5 * (1 + x(i)));
    const double val = eps / std::sqrt(kPi) * acc;
    res.value = val;
    res.order = n;
    if (n > 16) {
      res.last_change = std::abs(val - prev);
      if (res.last_change < 1e-8) break;
    }
    prev = val;
  }
  return res;
}

}  // namespace speclab

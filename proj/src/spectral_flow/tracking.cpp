#include <algorithm>
#include <cmath>

#include <Eigen/Eigenvalues>

#include "speclab/spectral_flow.hpp"

namespace speclab {

const char* to_string(Endpoint e) { return e == Endpoint::kNonnegative ? "nonnegative" : "positive"; }

Endpoint endpoint_from_string(const std::string& s) {
  if (s == "nonnegative") return Endpoint::kNonnegative;
  if (s == "positive") return Endpoint::kPositive;
  throw ValidationError("unknown endpoint convention '" + s + "'");
}

BlockPath::BlockPath(BlockTridiagonal t0, BlockTridiagonal t1) : t0_(std::move(t0)), t1_(std::move(t1)) {
  dot_norm_ = BlockTridiagonal::combine(-1.0, t0_, 1.0, t1_).certified_norm();
  norm0_ = t0_.norm_bound();
  norm1_ = t1_.norm_bound();
}

double doubler_weight(const CVec& psi, int site_dim) {
  const Eigen::Index sites = psi.size() / site_dim;
  double acc = 0;
  for (Eigen::Index s = 0; s < sites; ++s) {
    const auto p = psi.segment(s * site_dim, site_dim);
    CVec lap = 2.0 * p;
    if (s > 0) lap -= psi.segment((s - 1) * site_dim, site_dim);
    if (s + 1 < sites) lap -= psi.segment((s + 1) * site_dim, site_dim);
    acc += p.dot(lap).real();
  }
  return 0.25 * acc / std::max(1e-300, psi.squaredNorm());
}

namespace {

// Eigenpairs with |beta| < lambda0 at one path parameter.
struct Window {
  RVec values;
  CMat vectors;
  double kernel_tol = 0;
};

class Sampler {
 public:
  virtual ~Sampler() = default;
  virtual Window window(double u, double lambda0) const = 0;
  virtual double derivative_norm() const = 0;
};

class DenseSampler : public Sampler {
 public:
  DenseSampler(const OperatorPath& p, const NumericPolicy& pol) : path_(p), pol_(pol) {}
  Window window(double u, double lambda0) const override {
    const HermitianOperator H = path_.sample(u);
    const SpectralDecomposition& s = H.spectrum();
    std::vector<int> idx;
    for (Eigen::Index k = 0; k < s.dim(); ++k)
      if (std::abs(s.eigenvalues(k)) < lambda0) idx.push_back(static_cast<int>(k));
    Window w;
    w.values.resize(idx.size());
    w.vectors.resize(s.dim(), idx.size());
    for (size_t q = 0; q < idx.size(); ++q) {
      w.values(q) = s.eigenvalues(idx[q]);
      w.vectors.col(q) = s.eigenvectors.col(idx[q]);
    }
    w.kernel_tol = pol_.kernel_rel_tol * std::max(1.0, H.spectral_radius());
    return w;
  }
  double derivative_norm() const override {
    return std::max(1e-300, path_.derivative().spectral_radius());
  }

 private:
  const OperatorPath& path_;
  const NumericPolicy& pol_;
};

class BlockSampler : public Sampler {
 public:
  BlockSampler(const BlockPath& p, const NumericPolicy& pol) : path_(p), pol_(pol) {}
  Window window(double u, double lambda0) const override {
    const BlockTridiagonal T = path_.sample(u);
    auto w = T.eigenpairs_in(-lambda0, lambda0);
    Window out{w.values, w.vectors, 0};
    out.kernel_tol = pol_.kernel_rel_tol * std::max(1.0, path_.norm_bound(u));
    return out;
  }
  double derivative_norm() const override { return std::max(1e-300, path_.derivative_norm_bound()); }

 private:
  const BlockPath& path_;
  const NumericPolicy& pol_;
};

bool nonneg_state(double beta, double ktol, Endpoint e) {
  return e == Endpoint::kNonnegative ? beta > -ktol : beta >= ktol;
}

int count_level(const Window& w, double c, Endpoint e) {
  int n = 0;
  for (Eigen::Index k = 0; k < w.values.size(); ++k)
    if (nonneg_state(w.values(k), w.kernel_tol, e) && w.values(k) < c) ++n;
  return n;
}

int kernel_dim(const Window& w) {
  int n = 0;
  for (Eigen::Index k = 0; k < w.values.size(); ++k)
    if (std::abs(w.values(k)) < w.kernel_tol) ++n;
  return n;
}

double level_margin(const Window& w, double c, double lambda0) {
  double d = lambda0 - c;
  for (Eigen::Index k = 0; k < w.values.size(); ++k) d = std::min(d, std::abs(std::abs(w.values(k)) - c));
  return d;
}

// Matches every possible zero crosser of prev (|beta| <= reach) to a branch of
// next. Returns pairs (k, l); throws StepTooLarge on weak overlaps.
std::vector<std::pair<int, int>> match_crossers(const Window& prev, const Window& next, double reach,
                                                double min_overlap) {
  std::vector<int> cand;
  for (Eigen::Index k = 0; k < prev.values.size(); ++k)
    if (std::abs(prev.values(k)) <= reach) cand.push_back(static_cast<int>(k));
  if (cand.empty()) return {};
  const int m = static_cast<int>(cand.size()), n = static_cast<int>(next.values.size());
  if (n < m) throw StepTooLarge("window lost a crossing candidate");
  const RMat ov = (CMat(prev.vectors(Eigen::all, cand)).adjoint() * next.vectors).cwiseAbs2();
  // Cluster-sum overlaps over numerically degenerate next branches.
  const double dtol = 1e-9 * std::max(1.0, reach);
  RMat w = RMat::Zero(n, n);
  for (int a = 0; a < m; ++a)
    for (int l = 0; l < n; ++l) {
      double s = 0;
      for (int l2 = 0; l2 < n; ++l2)
        if (std::abs(next.values(l2) - next.values(l)) <= dtol) s += ov(a, l2);
      w(a, l) = s;
    }
  const auto assign = max_weight_assignment(w);
  std::vector<std::pair<int, int>> out;
  for (int a = 0; a < m; ++a) {
    if (w(a, assign[a]) < min_overlap)
      throw StepTooLarge("crossing branch overlap " + std::to_string(w(a, assign[a])));
    out.push_back({cand[a], assign[a]});
  }
  return out;
}

SpectralFlowReport track(const Sampler& sm, double ua, double ub, const TrackingOptions& opt,
                         const NumericPolicy& pol, const std::string& method) {
  SpectralFlowReport rep;
  rep.method = method;
  rep.endpoint = opt.endpoint;
  const double lambda0 = opt.lambda0 > 0 ? opt.lambda0 : 0.5;
  rep.lambda0 = lambda0;
  const double nu = sm.derivative_norm();
  // Any branch crossing zero inside a step is within nu*du of zero at both
  // ends, so it is inside the window at both samples.
  const double base_step = std::min(opt.max_step, 0.45 * lambda0 / nu);
  const double levels[] = {0.5, 0.6, 0.4, 0.7, 0.3, 0.8, 0.2};

  // Largest possible branch motion over a step, padded so that a branch
  // moving exactly nu * du cannot slip through a level by rounding.
  auto slack = [&](double du) { return nu * du * (1 + 1e-7) + 1e-12 * lambda0; };

  double u = ua;
  Window cur = sm.window(u, lambda0);
  rep.samples = 1;
  auto best_level = [&](const Window& a, const Window* b, double du, double& margin) {
    double best_c = -1;
    margin = -1;
    for (double f : levels) {
      const double c = f * lambda0;
      double m = level_margin(a, c, lambda0);
      if (b) {
        const double mb = level_margin(*b, c, lambda0);
        if (m + mb <= slack(du)) continue;
        m = std::min(m, mb);
      }
      if (m > margin) {
        margin = m;
        best_c = c;
      }
    }
    return best_c;
  };

  PointedGapInterval iv;
  double margin;
  iv.a = ua;
  iv.lambda0 = best_level(cur, nullptr, 0, margin);
  iv.margin = margin;
  iv.n_a = count_level(cur, iv.lambda0, opt.endpoint);
  iv.u0 = ua;
  iv.kernel_dim_u0 = kernel_dim(cur);
  iv.window_count = static_cast<int>(cur.values.size());

  auto close_interval = [&](double at, const Window& w) {
    iv.b = at;
    iv.n_b = count_level(w, iv.lambda0, opt.endpoint);
    rep.intervals.push_back(iv);
    rep.total += iv.n_b - iv.n_a;
  };

  while (u < ub - 1e-15) {
    double du = std::min(base_step, ub - u);
    int depth = 0;
    for (;;) {
      const double un = std::min(ub, u + du);
      const Window nxt = sm.window(un, lambda0);
      ++rep.samples;
      try {
        const auto pairs = match_crossers(cur, nxt, nu * du * 1.0000001 + cur.kernel_tol, pol.match_min_overlap);
        double m;
        const bool keep =
            level_margin(cur, iv.lambda0, lambda0) + level_margin(nxt, iv.lambda0, lambda0) > slack(du);
        double newc = -1;
        if (!keep) {
          newc = best_level(cur, &nxt, du, m);
          if (newc < 0) throw StepTooLarge("no clear counting level for this step");
        }
        for (auto [k, l] : pairs) {
          const bool s0 = nonneg_state(cur.values(k), cur.kernel_tol, opt.endpoint);
          const bool s1 = nonneg_state(nxt.values(l), nxt.kernel_tol, opt.endpoint);
          if (s0 == s1) continue;
          Crossing c;
          c.direction = s1 ? 1 : -1;
          const double b0 = cur.values(k), b1 = nxt.values(l);
          c.u = (b1 != b0) ? u + (un - u) * (-b0 / (b1 - b0)) : un;
          c.u = std::clamp(c.u, u, un);
          c.doubler_weight = opt.classifier ? opt.classifier(nxt.vectors.col(l)) : 0.0;
          c.physical = c.doubler_weight <= opt.artifact_threshold;
          rep.crossings.push_back(c);
          rep.crossing_sum += c.direction;
          (c.physical ? rep.physical : rep.artifact) += c.direction;
          (c.direction > 0 ? iv.q_plus : iv.q_minus) += 1;
        }
        if (!keep) {
          close_interval(u, cur);
          iv = PointedGapInterval{};
          iv.a = u;
          iv.lambda0 = newc;
          iv.margin = m;
          iv.n_a = count_level(cur, newc, opt.endpoint);
          iv.u0 = u;
          iv.kernel_dim_u0 = kernel_dim(cur);
          iv.window_count = static_cast<int>(cur.values.size());
        } else {
          iv.margin = std::min(iv.margin, level_margin(nxt, iv.lambda0, lambda0));
        }
        const int kd = kernel_dim(nxt);
        if (kd > iv.kernel_dim_u0) {
          iv.kernel_dim_u0 = kd;
          iv.u0 = un;
          iv.window_count = static_cast<int>(nxt.values.size());
        }
        cur = nxt;
        u = un;
        break;
      } catch (const StepTooLarge& err) {
        if (++depth > pol.max_refine_depth)
          throw std::runtime_error("spectral flow: refinement exhausted near u = " + std::to_string(u) + " (" +
                                   err.what() + ")");
        du *= 0.5;
      }
    }
  }
  close_interval(u, cur);
  return rep;
}

}  // namespace

SpectralFlowReport spectral_flow_tracking(const OperatorPath& path, const TrackingOptions& opt,
                                          const NumericPolicy& policy) {
  return spectral_flow_tracking(path, 0.0, 1.0, opt, policy);
}

SpectralFlowReport spectral_flow_tracking(const OperatorPath& path, double a, double b,
                                          const TrackingOptions& opt, const NumericPolicy& policy) {
  DenseSampler s(path, policy);
  return track(s, a, b, opt, policy, "tracking");
}

SpectralFlowReport spectral_flow_tracking(const BlockPath& path, const TrackingOptions& opt,
                                          const NumericPolicy& policy) {
  BlockSampler s(path, policy);
  return track(s, 0.0, 1.0, opt, policy, "tracking");
}

namespace {

RVec cayley_phases(const HermitianOperator& H) {
  const auto n = H.dim();
  const CMat Id = CMat::Identity(n, n);
  // kappa = (H - i)(H + i)^{-1}, i.e. kappa^T solves (H + i)^T X = (H - i)^T.
  const CMat kappa = (H.entries() + kI * Id).transpose().partialPivLu().solve((H.entries() - kI * Id).transpose()).transpose();
  Eigen::ComplexEigenSolver<CMat> es(kappa, false);
  RVec th(n);
  for (Eigen::Index k = 0; k < n; ++k) {
    double a = std::arg(es.eigenvalues()(k));
    if (a < 0) a += 2 * kPi;
    th(k) = a;
  }
  std::sort(th.data(), th.data() + n);
  return th;
}

double circ_delta(double from, double to) {
  double d = std::fmod(to - from, 2 * kPi);
  if (d > kPi) d -= 2 * kPi;
  if (d <= -kPi) d += 2 * kPi;
  return d;
}

}  // namespace

SpectralFlowReport spectral_flow_winding(const OperatorPath& path, const TrackingOptions& opt,
                                         const NumericPolicy& policy) {
  SpectralFlowReport rep;
  rep.method = "winding";
  rep.endpoint = opt.endpoint;
  rep.lambda0 = opt.lambda0 > 0 ? opt.lambda0 : 0.5;
  const double nu = std::max(1e-300, path.derivative().spectral_radius());
  // Eigenphases move at most 2 nu per unit u.
  const double base_step = std::min(opt.max_step, 0.45 * rep.lambda0 / nu);
  double rho = std::max(path.endpoint0().spectral_radius(), path.endpoint1().spectral_radius());
  const double ktol = policy.kernel_rel_tol * std::max(1.0, rho);
  auto state = [&](double theta) {
    const double beta = std::tan(0.5 * (theta - kPi));
    return nonneg_state(beta, ktol, opt.endpoint);
  };
  double u = 0;
  RVec cur = cayley_phases(path.sample(0));
  rep.samples = 1;
  while (u < 1 - 1e-15) {
    double du = std::min(base_step, 1 - u);
    for (int depth = 0;; ++depth) {
      const double un = std::min(1.0, u + du);
      const RVec nxt = cayley_phases(path.sample(un));
      ++rep.samples;
      const int n = static_cast<int>(cur.size());
      RMat w(n, n);
      for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) {
          const double d = circ_delta(cur(i), nxt(j));
          w(i, j) = -d * d;
        }
      const auto assign = max_weight_assignment(w);
      bool ambiguous = false;
      int net = 0;
      for (int i = 0; i < n && !ambiguous; ++i) {
        const double d = circ_delta(cur(i), nxt(assign[i]));
        if (std::abs(d) >= 0.5 * kPi) ambiguous = true;
        // An arc through the phase 0 would mean an eigenvalue through infinity.
        const double end = cur(i) + d;
        if (end < 0 || end >= 2 * kPi) ambiguous = true;
        net += static_cast<int>(state(nxt(assign[i]))) - static_cast<int>(state(cur(i)));
      }
      if (ambiguous) {
        if (depth >= policy.max_refine_depth)
          throw std::runtime_error("spectral flow winding: phase unwrapping ambiguous near u = " + std::to_string(u));
        du *= 0.5;
        continue;
      }
      rep.total += net;
      rep.crossing_sum += net;
      cur = nxt;
      u = un;
      break;
    }
  }
  rep.physical = rep.total;
  return rep;
}

}  // namespace speclab

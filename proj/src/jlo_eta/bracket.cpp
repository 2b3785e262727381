#include <algorithm>
#include <cmath>
#include <limits>

#include <unsupported/Eigen/MatrixFunctions>

#include "speclab/jlo_eta.hpp"

namespace speclab {

const char* to_string(BracketMethod m) {
  switch (m) {
    case BracketMethod::kAuto: return "auto";
    case BracketMethod::kTupleSum: return "tuple-sum";
    case BracketMethod::kVanLoan: return "van-loan";
    case BracketMethod::kContour: return "contour";
  }
  return "?";
}

HeatChain::HeatChain(RVec mu, CMat V) : mu_(std::move(mu)), V_(std::move(V)) {
  if (V_.rows() != mu_.size() || V_.cols() != mu_.size()) throw ValidationError("HeatChain: basis shape mismatch");
}

HeatChain HeatChain::for_operator(const HermitianOperator& D, double t) {
  const SpectralDecomposition& s = D.spectrum();
  RVec mu = -(t * t) * s.eigenvalues.array().square();
  return HeatChain(std::move(mu), s.eigenvectors);
}

namespace {

struct SparseRows {
  std::vector<std::vector<std::pair<int, cd>>> rows;
  double mean_nnz = 0;
};

SparseRows sparsify(const CMat& B, double threshold) {
  SparseRows s;
  s.rows.resize(B.rows());
  long long total = 0;
  for (Eigen::Index i = 0; i < B.rows(); ++i) {
    for (Eigen::Index j = 0; j < B.cols(); ++j) {
      if (std::abs(B(i, j)) > threshold) s.rows[i].emplace_back(static_cast<int>(j), B(i, j));
    }
    total += static_cast<long long>(s.rows[i].size());
  }
  s.mean_nnz = B.rows() ? static_cast<double>(total) / B.rows() : 0;
  return s;
}

double max_abs(const CMat& B) { return B.size() ? B.cwiseAbs().maxCoeff() : 0.0; }

double estimated_leaves(const std::vector<SparseRows>& rows, Eigen::Index dim) {
  double leaves = static_cast<double>(dim);
  for (const auto& r : rows) leaves *= std::max(r.mean_nnz, 1e-300);
  return leaves;
}

}  // namespace

BracketMethod HeatChain::choose(const std::vector<CMat>& B, const BracketOptions& opt) const {
  if (opt.method != BracketMethod::kAuto) return opt.method;
  const int n = static_cast<int>(B.size());
  if (n == 0) return BracketMethod::kTupleSum;
  std::vector<SparseRows> rows;
  for (const CMat& b : B) rows.push_back(sparsify(b, opt.prune ? default_policy().prune_rel * max_abs(b) : 0.0));
  const double leaves = estimated_leaves(rows, dim());
  const double tuple_cost = leaves * (n + 1) * (n + 1);
  const double block = static_cast<double>((n + 1) * dim());
  const double van_loan_cost = 30.0 * block * block * block;
  const double contour_cost = opt.contour_nodes * n * std::pow(static_cast<double>(dim()), 3.0);
  if (leaves <= opt.tuple_budget && tuple_cost <= std::min(van_loan_cost, contour_cost)) return BracketMethod::kTupleSum;
  if (block <= opt.van_loan_max_dim && van_loan_cost <= contour_cost) return BracketMethod::kVanLoan;
  if (leaves <= opt.tuple_budget && tuple_cost <= contour_cost) return BracketMethod::kTupleSum;
  return BracketMethod::kContour;
}

CMat HeatChain::chain(const std::vector<CMat>& B, const BracketOptions& opt, const NumericPolicy& policy) const {
  for (const CMat& b : B)
    if (b.rows() != dim() || b.cols() != dim()) throw ValidationError("HeatChain: operand shape mismatch");
  switch (choose(B, opt)) {
    case BracketMethod::kVanLoan: return chain_van_loan(B);
    case BracketMethod::kContour: return chain_contour(B, opt.contour_nodes);
    default: return chain_tuple(B, opt.prune, opt.tuple_budget, policy);
  }
}

CMat HeatChain::chain_tuple(const std::vector<CMat>& B, bool prune, double budget,
                            const NumericPolicy& policy) const {
  const int n = static_cast<int>(B.size());
  const Eigen::Index d = dim();
  CMat W = CMat::Zero(d, d);
  if (n == 0) {
    for (Eigen::Index i = 0; i < d; ++i) W(i, i) = std::exp(mu_(i));
    return W;
  }
  std::vector<SparseRows> rows;
  for (const CMat& b : B) rows.push_back(sparsify(b, prune ? policy.prune_rel * max_abs(b) : 0.0));
  if (estimated_leaves(rows, d) > budget)
    throw ValidationError("simplex bracket: tuple sum exceeds the dimension-growth guard");

  // Leaves below prune_rel of the largest leaf met so far are dropped. The a
  // priori bound e^{max mu} / n! * prod max|B| is far from attained when the
  // nodes spread, and the bracket may then sit below prune_rel of it.
  double running = 0;
  std::vector<int> idx(n + 1);
  std::vector<cd> prod(n + 1);
  std::vector<double> nodes(n + 1);
  std::vector<std::size_t> pos(n + 1);
  for (Eigen::Index a = 0; a < d; ++a) {
    idx[0] = static_cast<int>(a);
    prod[0] = 1.0;
    int level = 0;
    pos[0] = 0;
    // Depth-first over index paths a -> i_1 -> ... -> i_n following the
    // nonzeros of B_1, ..., B_n.
    while (level >= 0) {
      const auto& row = rows[level].rows[idx[level]];
      if (pos[level] >= row.size()) {
        --level;
        continue;
      }
      const auto& [j, v] = row[pos[level]++];
      idx[level + 1] = j;
      prod[level + 1] = prod[level] * v;
      if (level + 1 < n) {
        ++level;
        pos[level] = 0;
        continue;
      }
      for (int k = 0; k <= n; ++k) nodes[k] = mu_(idx[k]);
      const double w = divided_difference_exp(nodes, policy);
      const cd leaf = prod[n] * w;
      const double mag = std::abs(leaf);
      running = std::max(running, mag);
      if (prune && mag < policy.prune_rel * running) continue;
      W(a, j) += leaf;
    }
  }
  return W;
}

CMat HeatChain::chain_van_loan(const std::vector<CMat>& B) const {
  const int n = static_cast<int>(B.size());
  const Eigen::Index d = dim();
  const double shift = mu_.size() ? mu_.maxCoeff() : 0.0;
  if (n == 0) {
    CMat W = CMat::Zero(d, d);
    for (Eigen::Index i = 0; i < d; ++i) W(i, i) = std::exp(mu_(i));
    return W;
  }
  // Block upper-bidiagonal matrix with H - shift on the diagonal: the (0, n)
  // block of its exponential is the simplex integral.
  CMat big = CMat::Zero((n + 1) * d, (n + 1) * d);
  for (int k = 0; k <= n; ++k)
    for (Eigen::Index i = 0; i < d; ++i) big(k * d + i, k * d + i) = mu_(i) - shift;
  for (int k = 0; k < n; ++k) big.block(k * d, (k + 1) * d, d, d) = B[k];
  const CMat E = big.exp();
  return std::exp(shift) * E.block(0, n * d, d, d);
}

CMat HeatChain::chain_contour(const std::vector<CMat>& B, int nodes) const {
  const int n = static_cast<int>(B.size());
  const Eigen::Index d = dim();
  const double shift = mu_.size() ? mu_.maxCoeff() : 0.0;
  // Talbot contour z(th) = N (-0.6122 + 0.5017 th cot(0.6407 th) + 0.2645 i th)
  // around the nonpositive spectrum; midpoint rule in th.
  constexpr double a0 = -0.6122, a1 = 0.5017, alpha = 0.6407, a2 = 0.2645;
  const double N = nodes;
  CMat W = CMat::Zero(d, d);
  for (int k = 0; k < nodes; ++k) {
    const double th = -kPi + (k + 0.5) * 2 * kPi / nodes;
    const double c = std::cos(alpha * th) / std::sin(alpha * th);
    const cd z = N * cd(a0 + a1 * th * c, a2 * th);
    const double s = std::sin(alpha * th);
    const cd dz = N * cd(a1 * c - a1 * alpha * th / (s * s), a2);
    CVec r(d);
    for (Eigen::Index i = 0; i < d; ++i) r(i) = 1.0 / (z - (mu_(i) - shift));
    CMat X = r.asDiagonal() * B[0];
    for (int l = 1; l < n; ++l) X = (X * r.asDiagonal()) * B[l];
    if (n == 0) X = r.asDiagonal();
    else X = X * r.asDiagonal();
    W += (std::exp(z) * dz) * X;
  }
  // (1 / 2 pi i) * (2 pi / N) sum_k
  W *= 1.0 / (kI * N);
  return std::exp(shift) * W;
}

std::vector<CMat> HeatChain::chain_contour_prefixes(const std::vector<CMat>& B, int nodes) const {
  const int n = static_cast<int>(B.size());
  const Eigen::Index d = dim();
  const double shift = mu_.size() ? mu_.maxCoeff() : 0.0;
  constexpr double a0 = -0.6122, a1 = 0.5017, alpha = 0.6407, a2 = 0.2645;
  const double N = nodes;
  std::vector<CMat> W(n + 1, CMat::Zero(d, d));
  for (int k = 0; k < nodes; ++k) {
    const double th = -kPi + (k + 0.5) * 2 * kPi / nodes;
    const double s = std::sin(alpha * th), c = std::cos(alpha * th) / s;
    const cd z = N * cd(a0 + a1 * th * c, a2 * th);
    const cd dz = N * cd(a1 * c - a1 * alpha * th / (s * s), a2);
    CVec r(d);
    for (Eigen::Index i = 0; i < d; ++i) r(i) = 1.0 / (z - (mu_(i) - shift));
    const cd wk = std::exp(z) * dz;
    // X_m = R B_1 R ... B_m R; only the running product R B_1 ... R B_m is kept.
    CMat X = r.asDiagonal();
    W[0] += wk * X;
    for (int l = 0; l < n; ++l) {
      X = X * B[l];
      X = X * r.asDiagonal();
      W[l + 1] += wk * X;
    }
  }
  const cd scale = std::exp(shift) / (kI * N);
  for (CMat& w : W) w *= scale;
  return W;
}

std::vector<CMat> HeatChain::power_series(const CMat& Q, int N) const {
  const Eigen::Index d = dim();
  if (Q.rows() != d || Q.cols() != d) throw ValidationError("HeatChain: operand shape mismatch");
  const double shift = mu_.size() ? mu_.maxCoeff() : 0.0;
  const double h = mu_.size() ? (mu_.array() - shift).abs().maxCoeff() : 0.0;
  const double q = Q.operatorNorm();
  int j = 0;
  while (std::ldexp(std::max(h, q), -j) > 0.5) ++j;
  const RVec a0 = std::ldexp(1.0, -j) * (mu_.array() - shift).matrix();
  const CMat a1 = std::ldexp(1.0, -j) * Q;
  using Poly = std::vector<CMat>;
  auto times_A = [&](const Poly& P) {
    Poly R(N + 1);
    for (int m = 0; m <= N; ++m) {
      R[m] = a0.cast<cd>().asDiagonal() * P[m];
      if (m > 0) R[m] += a1 * P[m - 1];
    }
    return R;
  };
  // Horner for sum_{m <= 20} A(s)^m / m! with A(s) = a0 + s a1, |a0|, |a1| <= 1/2.
  Poly E(N + 1, CMat::Zero(d, d));
  E[0] = CMat::Identity(d, d);
  for (int m = 20; m >= 1; --m) {
    Poly R = times_A(E);
    for (int k = 0; k <= N; ++k) E[k] = R[k] / m;
    E[0] += CMat::Identity(d, d);
  }
  for (int s = 0; s < j; ++s) {
    Poly R(N + 1, CMat::Zero(d, d));
    for (int a = 0; a <= N; ++a)
      for (int b = 0; a + b <= N; ++b) R[a + b].noalias() += E[a] * E[b];
    E.swap(R);
  }
  const double scale = std::exp(shift);
  for (CMat& m : E) m *= scale;
  return E;
}

namespace {

cd trace_of(const HeatChain& heat, const CMat& Q, const TraceSpec& trace, const NumericPolicy& policy) {
  if (trace.backend == TraceBackend::kMatrix) {
    if (!trace.weight) return Q.trace();
    const CMat Wt = heat.to_eigenbasis(*trace.weight);
    return (Wt.cwiseProduct(Q.transpose())).sum();
  }
  if (!trace.context || !trace.context->geometry) throw ValidationError("simplex_bracket: b-trace needs a context");
  const CMat& V = heat.basis();
  const CVec sites = site_traces_of_product(V, Q, V, trace.context->layout, trace.weight);
  return b_trace_from_sites(sites, trace.context->layout, *trace.context->geometry, policy).scalar();
}

}  // namespace

std::vector<cd> simplex_bracket_prefixes(const HeatChain& heat, const std::vector<CMat>& A, const TraceSpec& trace,
                                         int contour_nodes, const NumericPolicy& policy) {
  if (A.empty()) throw ValidationError("simplex_bracket: no operands");
  const std::vector<CMat> B(A.begin() + 1, A.end());
  const std::vector<CMat> W = heat.chain_contour_prefixes(B, contour_nodes);
  std::vector<cd> out;
  for (const CMat& w : W) out.push_back(trace_of(heat, A[0] * w, trace, policy));
  return out;
}

cd simplex_bracket(const HeatChain& heat, const std::vector<CMat>& A, const TraceSpec& trace,
                   const BracketOptions& opt, const NumericPolicy& policy) {
  if (A.empty()) throw ValidationError("simplex_bracket: no operands");
  std::vector<CMat> B(A.begin() + 1, A.end());
  const CMat Q = A[0] * heat.chain(B, opt, policy);
  return trace_of(heat, Q, trace, policy);
}

}  // namespace speclab

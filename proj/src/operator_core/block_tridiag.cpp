#include <algorithm>
#include <cmath>

#include <Eigen/Eigenvalues>

#include "speclab/block_tridiag.hpp"

namespace speclab {

struct BlockTridiagonal::Factor {
  std::vector<CMat> s_inv;  // inverses of the Schur complements
  int negatives = 0;
};

namespace {

// Inertia of a small Hermitian matrix by Bunch-Kaufman pivoting (1x1 and 2x2
// pivots); false when a pivot is negligible, i.e. the matrix is numerically
// singular.
template <int N>
bool bk_inertia(Eigen::Matrix<cd, N, N> A, int& negatives) {
  const double alpha = (1.0 + std::sqrt(17.0)) / 8.0;
  const double scale = std::max(1e-300, A.cwiseAbs().maxCoeff());
  const double tiny = 1e-15 * scale;
  auto swap_sym = [&](int a, int b) {
    if (a == b) return;
    A.row(a).swap(A.row(b));
    A.col(a).swap(A.col(b));
  };
  int k = 0;
  while (k < N) {
    const double akk = std::abs(A(k, k).real());
    int r = k;
    double colmax = 0;
    for (int i = k + 1; i < N; ++i)
      if (std::abs(A(i, k)) > colmax) {
        colmax = std::abs(A(i, k));
        r = i;
      }
    if (std::max(akk, colmax) <= tiny) return false;
    int size = 1;
    if (akk < alpha * colmax) {
      double rowmax = 0;
      for (int j = k; j < N; ++j)
        if (j != r) rowmax = std::max(rowmax, std::abs(A(r, j)));
      if (akk * rowmax >= alpha * colmax * colmax) {
        // 1x1 pivot at k
      } else if (std::abs(A(r, r).real()) >= alpha * rowmax) {
        swap_sym(k, r);
      } else {
        swap_sym(k + 1, r);
        size = 2;
      }
    }
    if (size == 1) {
      const double d = A(k, k).real();
      if (std::abs(d) <= tiny) return false;
      if (d < 0) ++negatives;
      for (int i = k + 1; i < N; ++i)
        for (int j = k + 1; j < N; ++j) A(i, j) -= A(i, k) * std::conj(A(j, k)) / d;
      k += 1;
    } else {
      const double a = A(k, k).real(), c = A(k + 1, k + 1).real();
      const cd b = A(k + 1, k);
      const double det = a * c - std::norm(b);
      if (std::abs(det) <= tiny * tiny) return false;
      negatives += det < 0 ? 1 : (a + c < 0 ? 2 : 0);
      // E^{-1} = [[c, -conj(b)], [-b, a]] / det
      for (int i = k + 2; i < N; ++i) {
        const cd li0 = (A(i, k) * c - A(i, k + 1) * b) / det;
        const cd li1 = (A(i, k + 1) * a - A(i, k) * std::conj(b)) / det;
        for (int j = k + 2; j < N; ++j)
          A(i, j) -= li0 * std::conj(A(j, k)) + li1 * std::conj(A(j, k + 1));
      }
      k += 2;
    }
  }
  return true;
}

// Inertia count with fixed-size blocks; the dynamic path below is several
// times slower for the 2..8 dimensional blocks of the lattice operators.
template <int N>
bool count_fixed(const std::vector<CMat>& diag, const std::vector<CMat>& upper, double sigma,
                 int& negatives, std::vector<CMat>* store = nullptr) {
  using M = Eigen::Matrix<cd, N, N>;
  M s_inv, S, B;
  negatives = 0;
  for (size_t j = 0; j < diag.size(); ++j) {
    S = diag[j];
    S.diagonal().array() -= sigma;
    if (j > 0) {
      B = upper[j - 1];
      S.noalias() -= B.adjoint() * (s_inv * B);
    }
    S = (0.5 * (S + S.adjoint())).eval();
    if (!bk_inertia<N>(S, negatives)) return false;
    s_inv = S.partialPivLu().inverse();
    if (store) (*store)[j] = s_inv;
  }
  return true;
}

}  // namespace

BlockTridiagonal::BlockTridiagonal(std::vector<CMat> diag, std::vector<CMat> upper)
    : diag_(std::move(diag)), upper_(std::move(upper)) {
  if (diag_.empty()) throw ValidationError("BlockTridiagonal: no blocks");
  block_ = static_cast<int>(diag_[0].rows());
  if (upper_.size() + 1 != diag_.size())
    throw ValidationError("BlockTridiagonal: need blocks-1 coupling blocks");
  for (auto& d : diag_) {
    if (d.rows() != block_ || d.cols() != block_)
      throw ValidationError("BlockTridiagonal: inconsistent block size");
    if ((d - d.adjoint()).norm() > 1e-12 * std::max(1.0, d.norm()))
      throw ValidationError("BlockTridiagonal: diagonal block not Hermitian");
    d = 0.5 * (d + d.adjoint()).eval();
  }
}

BlockTridiagonal BlockTridiagonal::from_dense(const CMat& T, int block) {
  const auto n = T.rows();
  if (n % block != 0) throw ValidationError("from_dense: dimension not a multiple of block");
  const int nb = static_cast<int>(n / block);
  std::vector<CMat> d(nb), u(nb - 1);
  for (int j = 0; j < nb; ++j) {
    d[j] = T.block(j * block, j * block, block, block);
    if (j + 1 < nb) u[j] = T.block(j * block, (j + 1) * block, block, block);
  }
  return BlockTridiagonal(std::move(d), std::move(u));
}

BlockTridiagonal BlockTridiagonal::combine(double a, const BlockTridiagonal& A, double b,
                                           const BlockTridiagonal& B) {
  if (A.blocks() != B.blocks() || A.block_size() != B.block_size())
    throw ValidationError("combine: shapes differ");
  std::vector<CMat> d(A.blocks()), u(A.blocks() - 1);
  for (int j = 0; j < A.blocks(); ++j) {
    d[j] = a * A.diag_[j] + b * B.diag_[j];
    if (j + 1 < A.blocks()) u[j] = a * A.upper_[j] + b * B.upper_[j];
  }
  return BlockTridiagonal(std::move(d), std::move(u));
}

CMat BlockTridiagonal::to_dense() const {
  const auto n = dim();
  CMat T = CMat::Zero(n, n);
  for (int j = 0; j < blocks(); ++j) {
    T.block(j * block_, j * block_, block_, block_) = diag_[j];
    if (j + 1 < blocks()) {
      T.block(j * block_, (j + 1) * block_, block_, block_) = upper_[j];
      T.block((j + 1) * block_, j * block_, block_, block_) = upper_[j].adjoint();
    }
  }
  return T;
}

CVec BlockTridiagonal::apply(const CVec& x) const {
  CVec y = CVec::Zero(dim());
  for (int j = 0; j < blocks(); ++j) {
    y.segment(j * block_, block_) += diag_[j] * x.segment(j * block_, block_);
    if (j + 1 < blocks()) {
      y.segment(j * block_, block_) += upper_[j] * x.segment((j + 1) * block_, block_);
      y.segment((j + 1) * block_, block_) += upper_[j].adjoint() * x.segment(j * block_, block_);
    }
  }
  return y;
}

double BlockTridiagonal::norm_bound() const {
  double best = 0;
  for (int j = 0; j < blocks(); ++j) {
    double row = diag_[j].operatorNorm();
    if (j + 1 < blocks()) row += upper_[j].operatorNorm();
    if (j > 0) row += upper_[j - 1].operatorNorm();
    best = std::max(best, row);
  }
  return best;
}

double BlockTridiagonal::certified_norm() const {
  CVec x(dim());
  for (Eigen::Index i = 0; i < dim(); ++i) x(i) = cd(std::cos(0.7 * i + 0.3), std::sin(1.9 * i));
  double est = 0;
  for (int it = 0; it < 60; ++it) {
    x.normalize();
    x = apply(x);
    est = x.norm();
  }
  const double bound = norm_bound();
  if (est <= 0) return bound;
  double c = 1.02 * est;
  while (c < bound) {
    if (count_below(-c) == 0 && count_below(c) == dim()) return c;
    c *= 1.1;
  }
  return bound;
}

bool BlockTridiagonal::factor(double sigma, Factor& f) const {
  f.s_inv.assign(blocks(), CMat());
  f.negatives = 0;
  switch (block_) {
    case 2: return count_fixed<2>(diag_, upper_, sigma, f.negatives, &f.s_inv);
    case 4: return count_fixed<4>(diag_, upper_, sigma, f.negatives, &f.s_inv);
    case 8: return count_fixed<8>(diag_, upper_, sigma, f.negatives, &f.s_inv);
    default: break;
  }
  Eigen::SelfAdjointEigenSolver<CMat> es;
  CMat S;
  for (int j = 0; j < blocks(); ++j) {
    S = diag_[j];
    S.diagonal().array() -= sigma;
    if (j > 0) S.noalias() -= upper_[j - 1].adjoint() * (f.s_inv[j - 1] * upper_[j - 1]);
    S = 0.5 * (S + S.adjoint()).eval();
    es.compute(S);
    const RVec& ev = es.eigenvalues();
    const double scale = std::max(1.0, ev.cwiseAbs().maxCoeff());
    RVec inv(block_);
    for (int k = 0; k < block_; ++k) {
      if (std::abs(ev(k)) < 1e-300 || std::abs(ev(k)) < 1e-15 * scale) return false;
      if (ev(k) < 0) ++f.negatives;
      inv(k) = 1.0 / ev(k);
    }
    f.s_inv[j] = es.eigenvectors() * inv.cast<cd>().asDiagonal() * es.eigenvectors().adjoint();
  }
  return true;
}

int BlockTridiagonal::count_below(double sigma) const {
  Factor f;
  double s = sigma;
  const double nudge = 1e-13 * std::max(1.0, std::abs(sigma));
  for (int attempt = 0; attempt < 8; ++attempt) {
    int neg = 0;
    bool ok;
    switch (block_) {
      case 2: ok = count_fixed<2>(diag_, upper_, s, neg); break;
      case 4: ok = count_fixed<4>(diag_, upper_, s, neg); break;
      case 8: ok = count_fixed<8>(diag_, upper_, s, neg); break;
      default:
        ok = factor(s, f);
        neg = f.negatives;
        break;
    }
    if (ok) return neg;
    s = sigma - nudge * (attempt + 1);  // exact hits are classified as not-below
  }
  throw std::runtime_error("count_below: Schur complement singular after perturbation");
}

CVec BlockTridiagonal::solve(const Factor& f, const CVec& r) const {
  const int nb = blocks();
  std::vector<CVec> z(nb);
  for (int j = 0; j < nb; ++j) {
    CVec rhs = r.segment(j * block_, block_);
    if (j > 0) rhs -= upper_[j - 1].adjoint() * z[j - 1];
    z[j] = f.s_inv[j] * rhs;
  }
  CVec x(dim());
  x.segment((nb - 1) * block_, block_) = z[nb - 1];
  for (int j = nb - 2; j >= 0; --j) {
    x.segment(j * block_, block_) =
        z[j] - f.s_inv[j] * (upper_[j] * x.segment((j + 1) * block_, block_));
  }
  return x;
}

BlockTridiagonal::Window BlockTridiagonal::eigenpairs_in(double lo, double hi,
                                                         double cluster_tol) const {
  Window w;
  const int clo = count_below(lo), chi = count_below(hi);
  const int m = chi - clo;
  w.values = RVec::Zero(m);
  w.vectors = CMat::Zero(dim(), m);
  if (m == 0) return w;

  // Isolate by bisection on the counting function. Simple eigenvalues stop as
  // soon as they are alone in their piece; clusters are narrowed further.
  struct Piece {
    double a, b;
    int ca, cb;
  };
  auto bisect = [&](std::vector<Piece> todo, bool stop_isolated) {
    std::vector<Piece> done;
    while (!todo.empty()) {
      Piece p = todo.back();
      todo.pop_back();
      if (p.cb == p.ca) continue;
      const double width = p.b - p.a;
      const double scale = std::max(1.0, std::max(std::abs(p.a), std::abs(p.b)));
      const bool simple = p.cb - p.ca == 1;
      if ((simple && (stop_isolated || width < 1e-4 * scale)) || width < cluster_tol * scale) {
        done.push_back(p);
        continue;
      }
      const double mid = 0.5 * (p.a + p.b);
      const int cm = count_below(mid);
      todo.push_back({mid, p.b, cm, p.cb});
      todo.push_back({p.a, mid, p.ca, cm});
    }
    return done;
  };
  std::vector<Piece> done = bisect({{lo, hi, clo, chi}}, true);
  std::sort(done.begin(), done.end(), [](const Piece& x, const Piece& y) { return x.a < y.a; });

  auto start_vector = [&](int q) {
    CVec x(dim());
    for (Eigen::Index i = 0; i < dim(); ++i)
      x(i) = cd(std::sin(1.0 + 0.37 * i + 1.3 * q), std::cos(0.11 * i * (q + 1)));
    return x;
  };
  auto factor_near = [&](double sigma, double off, Factor& f) {
    for (int attempt = 0; attempt < 8; ++attempt) {
      if (factor(sigma + off, f)) return;
      off *= 1.7;
    }
    throw std::runtime_error("eigenpairs_in: inverse iteration factorization failed");
  };

  // Rayleigh quotient iteration for an eigenvalue known to be alone in (a, b).
  // Returns false if an iterate leaves the piece.
  auto rqi = [&](const Piece& p, CVec& x, double& value) {
    Factor f;
    const double scale = std::max(1.0, std::max(std::abs(p.a), std::abs(p.b)));
    factor_near(0.5 * (p.a + p.b), 1e-12 * scale, f);
    x = start_vector(0);
    for (int it = 0; it < 4; ++it) {
      x.normalize();
      x = solve(f, x);
    }
    x.normalize();
    value = x.dot(apply(x)).real();
    for (int it = 0; it < 8; ++it) {
      if (!(value > p.a && value < p.b)) return false;
      const CVec r = apply(x) - value * x;
      if (r.norm() < 1e-12 * scale) return true;
      factor_near(value, 1e-10 * scale, f);
      x = solve(f, x);
      x.normalize();
      value = x.dot(apply(x)).real();
    }
    return value > p.a && value < p.b;
  };

  int col = 0;
  for (const Piece& piece : done) {
    std::vector<Piece> parts{piece};
    if (piece.cb - piece.ca == 1) {
      CVec x;
      double value;
      if (rqi(piece, x, value)) {
        w.vectors.col(col) = x;
        w.values(col) = value;
        ++col;
        continue;
      }
      parts = bisect({piece}, false);
    }
    for (const Piece& p : parts) {
      const int mult = p.cb - p.ca;
      const double sigma = 0.5 * (p.a + p.b);
      // Shift slightly off the cluster so the factorization stays regular.
      Factor f;
      factor_near(sigma, (p.b - p.a) * 0.25 + 1e-12 * std::max(1.0, std::abs(sigma)), f);
      const int first = col;
      for (int q = 0; q < mult; ++q, ++col) {
        CVec x = start_vector(q);
        for (int it = 0; it < 6; ++it) {
          for (int c = first; c < col; ++c) x -= w.vectors.col(c) * (w.vectors.col(c).dot(x));
          x.normalize();
          x = solve(f, x);
        }
        for (int c = first; c < col; ++c) x -= w.vectors.col(c) * (w.vectors.col(c).dot(x));
        x.normalize();
        w.vectors.col(col) = x;
        w.values(col) = x.dot(apply(x)).real();
      }
      // Rayleigh-Ritz inside the cluster.
      if (mult > 1) {
        CMat Q = w.vectors.middleCols(first, mult);
        Eigen::HouseholderQR<CMat> qr(Q);
        Q = qr.householderQ() * CMat::Identity(dim(), mult);
        CMat TQ(dim(), mult);
        for (int c = 0; c < mult; ++c) TQ.col(c) = apply(Q.col(c));
        CMat small = Q.adjoint() * TQ;
        Eigen::SelfAdjointEigenSolver<CMat> es(0.5 * (small + small.adjoint()));
        w.vectors.middleCols(first, mult) = Q * es.eigenvectors();
        w.values.segment(first, mult) = es.eigenvalues();
      }
    }
  }
  return w;
}

}  // namespace speclab

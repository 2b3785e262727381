#pragma once

#include <memory>
#include <mutex>
#include <vector>

#include "speclab/numeric_policy.hpp"

namespace speclab {

struct SpectralDecomposition {
  RVec eigenvalues;  // ascending
  CMat eigenvectors; // unitary, columns phase-fixed

  Eigen::Index dim() const { return eigenvalues.size(); }
  // V f(beta) V^*
  template <class F>
  CMat apply(F&& f) const {
    CVec d(dim());
    for (Eigen::Index k = 0; k < dim(); ++k) d(k) = f(eigenvalues(k));
    return eigenvectors * d.asDiagonal() * eigenvectors.adjoint();
  }
};

// Self-adjoint matrix with a lazily computed, then immutable, spectral
// decomposition. Copies share the cache.
class HermitianOperator {
 public:
  HermitianOperator() = default;
  explicit HermitianOperator(const CMat& entries,
                             const NumericPolicy& policy = default_policy());

  Eigen::Index dim() const { return entries_.rows(); }
  const CMat& entries() const { return entries_; }
  const SpectralDecomposition& spectrum() const;
  double spectral_radius() const;

 private:
  struct Cache {
    std::once_flag once;
    SpectralDecomposition value;
  };
  CMat entries_;
  std::shared_ptr<Cache> cache_ = std::make_shared<Cache>();
};

SpectralDecomposition decompose(const HermitianOperator& H);
// Phase convention: the largest-modulus entry of each column is made real
// positive (first such index on ties).
void fix_phases(CMat& V);

CMat heat(const HermitianOperator& H, double t);
CMat cayley(const HermitianOperator& H);
CMat spectral_projection(const HermitianOperator& H, double lambda0,
                         const NumericPolicy& policy = default_policy());

struct SplitParts {
  CMat A, B, C, P;
};
SplitParts split_parts(const HermitianOperator& H, double lambda0,
                       const NumericPolicy& policy = default_policy());

// Derivative of f(H) along the direction X (Daleckii-Krein), for f given with
// its derivative.
template <class F, class DF>
CMat functional_derivative(const SpectralDecomposition& s, const CMat& X, F&& f, DF&& df) {
  const auto n = s.dim();
  CMat Xt = s.eigenvectors.adjoint() * X * s.eigenvectors;
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < n; ++j) {
      const double bi = s.eigenvalues(i), bj = s.eigenvalues(j);
      const double scale = std::max({1.0, std::abs(bi), std::abs(bj)});
      double w;
      if (std::abs(bi - bj) <= 1e-9 * scale) {
        w = df(0.5 * (bi + bj));
      } else {
        w = (f(bi) - f(bj)) / (bi - bj);
      }
      Xt(i, j) *= w;
    }
  }
  return s.eigenvectors * Xt * s.eigenvectors.adjoint();
}

// Permutation pi with next-column pi[k] continuing prev-column k. Degenerate
// clusters of `next` are matched by subspace overlap.
std::vector<int> match_eigenbranches(const SpectralDecomposition& prev,
                                     const SpectralDecomposition& next,
                                     const NumericPolicy& policy = default_policy());

// Rectangular variant used by the window trackers: columns of the two bases
// need not be complete. Throws StepTooLarge below the overlap threshold.
std::vector<int> match_columns(const CMat& prev, const RVec& prev_vals, const CMat& next,
                               const RVec& next_vals, double degeneracy_tol,
                               double min_overlap);

// Maximum-weight assignment on a square matrix (Hungarian method).
std::vector<int> max_weight_assignment(const RMat& weight);

class OperatorPath {
 public:
  OperatorPath(HermitianOperator d0, HermitianOperator d1);
  const HermitianOperator& endpoint0() const { return d0_; }
  const HermitianOperator& endpoint1() const { return d1_; }
  const HermitianOperator& derivative() const { return dot_; }
  HermitianOperator sample(double u) const;
  Eigen::Index dim() const { return d0_.dim(); }

 private:
  HermitianOperator d0_, d1_, dot_;
};

CMat random_hermitian(int n, unsigned long long seed, double scale = 1.0);
CMat random_unitary(int n, unsigned long long seed);

}  // namespace speclab

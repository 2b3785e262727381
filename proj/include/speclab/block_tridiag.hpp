#pragma once

#include <vector>

#include "speclab/numeric_policy.hpp"

namespace speclab {

// Hermitian block-tridiagonal matrix: diag[j] = T(j,j), upper[j] = T(j,j+1).
// Used for the fine-lattice Dirac operators where only a spectral window is
// needed: counting uses Haynsworth inertia of the block Schur complements and
// eigenpairs come from bisection plus inverse iteration.
class BlockTridiagonal {
 public:
  BlockTridiagonal() = default;
  BlockTridiagonal(std::vector<CMat> diag, std::vector<CMat> upper);

  static BlockTridiagonal from_dense(const CMat& T, int block);
  static BlockTridiagonal combine(double a, const BlockTridiagonal& A, double b,
                                  const BlockTridiagonal& B);

  int blocks() const { return static_cast<int>(diag_.size()); }
  int block_size() const { return block_; }
  Eigen::Index dim() const { return static_cast<Eigen::Index>(blocks()) * block_; }
  const std::vector<CMat>& diag() const { return diag_; }
  const std::vector<CMat>& upper() const { return upper_; }

  CMat to_dense() const;
  CVec apply(const CVec& x) const;
  // Upper bound on the operator norm (block Gershgorin).
  double norm_bound() const;
  // Operator norm estimated by power iteration and certified by inertia
  // counts (no eigenvalue outside [-c, c]); an upper bound within a few
  // percent.
  double certified_norm() const;
  // Number of eigenvalues strictly below sigma.
  int count_below(double sigma) const;

  struct Window {
    RVec values;
    CMat vectors;  // dim x m
  };
  // All eigenpairs with eigenvalue in (lo, hi), ascending.
  Window eigenpairs_in(double lo, double hi, double cluster_tol = 1e-10) const;

 private:
  struct Factor;
  bool factor(double sigma, Factor& f) const;
  CVec solve(const Factor& f, const CVec& r) const;

  int block_ = 0;
  std::vector<CMat> diag_, upper_;
};

}  // namespace speclab

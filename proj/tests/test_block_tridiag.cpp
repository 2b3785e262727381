#include <doctest.h>

#include "speclab/block_tridiag.hpp"
#include "speclab/operator_core.hpp"

using namespace speclab;

namespace {
CMat banded(int n, int block, unsigned long long seed) {
  CMat H = random_hermitian(n, seed, 3.0);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      if (std::abs(i / block - j / block) > 1) H(i, j) = 0;
  return H;
}
}  // namespace

TEST_CASE("block tridiagonal round trip and apply") {
  const CMat H = banded(24, 3, 5);
  const BlockTridiagonal T = BlockTridiagonal::from_dense(H, 3);
  CHECK((T.to_dense() - H).norm() < 1e-14);
  const CVec x = CVec::Random(24);
  CHECK((T.apply(x) - H * x).norm() < 1e-12);
  CHECK(T.norm_bound() >= HermitianOperator(H).spectral_radius() - 1e-12);
  CHECK(T.certified_norm() >= HermitianOperator(H).spectral_radius() - 1e-9);
}

TEST_CASE("inertia counts and window eigenpairs match dense") {
  const CMat H = banded(30, 2, 8);
  const BlockTridiagonal T = BlockTridiagonal::from_dense(H, 2);
  const RVec ev = HermitianOperator(H).spectrum().eigenvalues;
  for (double s : {-1.0, -0.3, 0.0, 0.4, 1.2}) {
    int below = 0;
    for (Eigen::Index k = 0; k < ev.size(); ++k) below += ev(k) < s;
    CHECK(T.count_below(s) == below);
  }
  const auto w = T.eigenpairs_in(-0.8, 0.8);
  int inside = 0;
  for (Eigen::Index k = 0; k < ev.size(); ++k) inside += std::abs(ev(k)) < 0.8;
  REQUIRE(w.values.size() == inside);
  for (Eigen::Index q = 0; q < w.values.size(); ++q) {
    const CVec v = w.vectors.col(q);
    CHECK((H * v - w.values(q) * v).norm() < 1e-8);
  }
}

TEST_CASE("combine is linear") {
  const CMat A = banded(12, 3, 1), B = banded(12, 3, 2);
  const auto TA = BlockTridiagonal::from_dense(A, 3), TB = BlockTridiagonal::from_dense(B, 3);
  CHECK((BlockTridiagonal::combine(0.3, TA, 0.7, TB).to_dense() - (0.3 * A + 0.7 * B)).norm() < 1e-14);
}

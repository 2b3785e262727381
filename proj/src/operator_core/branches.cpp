#include <algorithm>
#include <cmath>
#include <limits>

#include "speclab/operator_core.hpp"

namespace speclab {

std::vector<int> max_weight_assignment(const RMat& weight) {
  // Shortest augmenting path form of the Hungarian method on cost = -weight.
  const int n = static_cast<int>(weight.rows());
  const double inf = std::numeric_limits<double>::infinity();
  std::vector<double> u(n + 1, 0.0), v(n + 1, 0.0);
  std::vector<int> p(n + 1, 0), way(n + 1, 0);
  for (int i = 1; i <= n; ++i) {
    p[0] = i;
    int j0 = 0;
    std::vector<double> minv(n + 1, inf);
    std::vector<char> used(n + 1, false);
    do {
      used[j0] = true;
      const int i0 = p[j0];
      double delta = inf;
      int j1 = 0;
      for (int j = 1; j <= n; ++j) {
        if (used[j]) continue;
        const double cur = -weight(i0 - 1, j - 1) - u[i0] - v[j];
        if (cur < minv[j]) {
          minv[j] = cur;
          way[j] = j0;
        }
        if (minv[j] < delta) {
          delta = minv[j];
          j1 = j;
        }
      }
      for (int j = 0; j <= n; ++j) {
        if (used[j]) {
          u[p[j]] += delta;
          v[j] -= delta;
        } else {
          minv[j] -= delta;
        }
      }
      j0 = j1;
    } while (p[j0] != 0);
    do {
      const int j1 = way[j0];
      p[j0] = p[j1];
      j0 = j1;
    } while (j0);
  }
  std::vector<int> assign(n, -1);
  for (int j = 1; j <= n; ++j)
    if (p[j] > 0) assign[p[j] - 1] = j - 1;
  return assign;
}

std::vector<int> match_columns(const CMat& prev, const RVec& prev_vals, const CMat& next,
                               const RVec& next_vals, double degeneracy_tol, double min_overlap) {
  const int m = static_cast<int>(prev.cols());
  const int n = static_cast<int>(next.cols());
  if (m != n) throw StepTooLarge("match_columns: column counts differ");
  if (m == 0) return {};
  // Clusters of numerically degenerate eigenvalues in `next`.
  std::vector<int> cluster(n, 0);
  int c = 0;
  for (int l = 1; l < n; ++l) {
    if (std::abs(next_vals(l) - next_vals(l - 1)) > degeneracy_tol) ++c;
    cluster[l] = c;
  }
  const RMat ov = (prev.adjoint() * next).cwiseAbs2();
  RMat w = RMat::Zero(m, n);
  for (int k = 0; k < m; ++k) {
    for (int l = 0; l < n; ++l) {
      double s = 0;
      for (int l2 = 0; l2 < n; ++l2)
        if (cluster[l2] == cluster[l]) s += ov(k, l2);
      w(k, l) = s;
    }
  }
  auto assign = max_weight_assignment(w);
  for (int k = 0; k < m; ++k) {
    if (w(k, assign[k]) < min_overlap) {
      throw StepTooLarge("branch matching overlap " + std::to_string(w(k, assign[k])) +
                         " below threshold; halve the step");
    }
  }
  // Inside a cluster keep the order of prev so the permutation is canonical.
  for (int cl = 0; cl <= c; ++cl) {
    std::vector<int> ks, ls;
    for (int k = 0; k < m; ++k)
      if (cluster[assign[k]] == cl) {
        ks.push_back(k);
        ls.push_back(assign[k]);
      }
    std::sort(ls.begin(), ls.end());
    for (size_t q = 0; q < ks.size(); ++q) assign[ks[q]] = ls[q];
  }
  (void)prev_vals;
  return assign;
}

std::vector<int> match_eigenbranches(const SpectralDecomposition& prev,
                                     const SpectralDecomposition& next,
                                     const NumericPolicy& policy) {
  const double scale = std::max(1.0, next.eigenvalues.cwiseAbs().maxCoeff());
  return match_columns(prev.eigenvectors, prev.eigenvalues, next.eigenvectors, next.eigenvalues,
                       1e-9 * scale, policy.match_min_overlap);
}

}  // namespace speclab

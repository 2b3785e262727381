#include <algorithm>
#include <cmath>
#include <vector>

#include <unsupported/Eigen/MatrixFunctions>

#include "speclab/jlo_eta.hpp"

namespace speclab {

namespace {

// exp[x_0..x_m] = e^c sum_k h_k(x - c) / (m + k)!, h_k the complete homogeneous
// symmetric polynomials, c the mean.
double taylor_dd(const double* x, int count, int min_order) {
  const int m = count - 1;
  double c = 0;
  for (int i = 0; i < count; ++i) c += x[i];
  c /= count;
  constexpr int kMaxOrder = 80;
  double h[kMaxOrder + 1];
  std::fill(h, h + kMaxOrder + 1, 0.0);
  h[0] = 1;
  for (int i = 0; i < count; ++i) {
    const double y = x[i] - c;
    for (int k = 1; k <= kMaxOrder; ++k) h[k] += y * h[k - 1];
  }
  double inv_fact = 1;  // 1 / (m + k)!
  for (int j = 2; j <= m; ++j) inv_fact /= j;
  double sum = 0;
  for (int k = 0; k <= kMaxOrder; ++k) {
    if (k > 0) inv_fact /= (m + k);
    const double term = h[k] * inv_fact;
    sum += term;
    if (k >= min_order && std::abs(term) <= 1e-18 * std::abs(sum)) break;
  }
  return std::exp(c) * sum;
}

}  // namespace

double divided_difference_exp(std::vector<double> nodes, const NumericPolicy& policy) {
  if (nodes.empty()) throw ValidationError("divided_difference_exp: no nodes");
  std::sort(nodes.begin(), nodes.end());
  const int count = static_cast<int>(nodes.size());
  const double scale = std::max({1.0, std::abs(nodes.front()), std::abs(nodes.back())});
  // The sorted recurrence divides by the spread of each sub-table; below a
  // unit window it loses about eps / spread^m, so such sub-tables are summed
  // directly.
  const double window = std::max(1.0, policy.dd_cluster_rel * scale);
  const int order = policy.dd_taylor_order;
  if (nodes.back() - nodes.front() <= window) return taylor_dd(nodes.data(), count, order);

  std::vector<double> d(count);
  for (int j = 0; j < count; ++j) d[j] = std::exp(nodes[j]);
  for (int m = 1; m < count; ++m) {
    for (int j = 0; j + m < count; ++j) {
      const double spread = nodes[j + m] - nodes[j];
      d[j] = spread <= window ? taylor_dd(nodes.data() + j, m + 1, order) : (d[j + 1] - d[j]) / spread;
    }
  }
  return d[0];
}

double divided_difference_exp_bidiagonal(const std::vector<double>& nodes) {
  const int count = static_cast<int>(nodes.size());
  if (count == 0) throw ValidationError("divided_difference_exp_bidiagonal: no nodes");
  RMat A = RMat::Zero(count, count);
  for (int i = 0; i < count; ++i) A(i, i) = nodes[i];
  for (int i = 0; i + 1 < count; ++i) A(i, i + 1) = 1;
  const RMat E = A.exp();
  return E(0, count - 1);
}

}  // namespace speclab

#pragma once

#include <complex>
#include <stdexcept>
#include <string>

#include <Eigen/Dense>

namespace speclab {

using cd = std::complex<double>;
using CMat = Eigen::MatrixXcd;
using CVec = Eigen::VectorXcd;
using RVec = Eigen::VectorXd;
using RMat = Eigen::MatrixXd;

inline constexpr cd kI{0.0, 1.0};
inline constexpr double kPi = 3.14159265358979323846;

// Every tolerance used by the library lives here so that a run can tighten or
// relax them in one place (config keys `policy.<name>`).
struct NumericPolicy {
  double hermitian_tol = 1e-12;        // relative Frobenius asymmetry accepted on input
  double reconstruction_tol = 1e-10;   // decomposition rebuild check
  double unitarity_tol = 1e-10;
  double gap_tol = 1e-9;               // eigenvalue distance from a window edge
  double kernel_rel_tol = 1e-8;        // |beta| < kernel_rel_tol * spectral radius counts as kernel
  double match_min_overlap = 0.5;      // branch matching failure threshold
  int max_refine_depth = 20;
  double remainder_tol = 1e-6;         // b-function split remainder
  double dd_cluster_rel = 1e-6;        // confluent cluster width for divided differences
  int dd_taylor_order = 12;
  double prune_rel = 1e-16;            // tuple-sum pruning threshold
  double quad_rel_tol = 1e-8;          // adaptive quadrature target
  double lambda_tail = 1e-12;          // integrand size at the lambda cut
  double eta_gap_tmax_product = 40.0;  // gap^2 * T_max^2 for eta tails
};

const NumericPolicy& default_policy();

class ValidationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class AmbiguousWindow : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class StepTooLarge : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace speclab

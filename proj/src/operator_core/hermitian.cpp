#include <algorithm>
#include <cmath>
#include <random>

#include <Eigen/Eigenvalues>

#include "speclab/operator_core.hpp"
#include "speclab/rng.hpp"

namespace speclab {

const NumericPolicy& default_policy() {
  static const NumericPolicy p{};
  return p;
}

HermitianOperator::HermitianOperator(const CMat& entries, const NumericPolicy& policy) {
  if (entries.rows() != entries.cols() || entries.rows() == 0) {
    throw ValidationError("HermitianOperator: matrix must be square and nonempty");
  }
  const double scale = std::max(entries.norm(), 1e-300);
  const double asym = (entries - entries.adjoint()).norm();
  if (asym > policy.hermitian_tol * scale && asym > 1e-300) {
    throw ValidationError("HermitianOperator: input is not self-adjoint (relative asymmetry " +
                          std::to_string(asym / scale) + ")");
  }
  entries_ = 0.5 * (entries + entries.adjoint());
}

void fix_phases(CMat& V) {
  for (Eigen::Index k = 0; k < V.cols(); ++k) {
    Eigen::Index arg = 0;
    double best = -1.0;
    for (Eigen::Index i = 0; i < V.rows(); ++i) {
      const double a = std::abs(V(i, k));
      if (a > best * (1.0 + 1e-12)) {
        best = a;
        arg = i;
      }
    }
    if (best > 0) V.col(k) *= std::conj(V(arg, k)) / best;
  }
}

SpectralDecomposition decompose(const HermitianOperator& H) {
  Eigen::SelfAdjointEigenSolver<CMat> es(H.entries());
  if (es.info() != Eigen::Success) throw std::runtime_error("decompose: eigensolver failed");
  SpectralDecomposition s{es.eigenvalues(), es.eigenvectors()};
  fix_phases(s.eigenvectors);
  return s;
}

const SpectralDecomposition& HermitianOperator::spectrum() const {
  if (!cache_) throw ValidationError("HermitianOperator: empty operator");
  std::call_once(cache_->once, [this] { cache_->value = decompose(*this); });
  return cache_->value;
}

double HermitianOperator::spectral_radius() const {
  const auto& ev = spectrum().eigenvalues;
  return std::max(std::abs(ev(0)), std::abs(ev(ev.size() - 1)));
}

CMat heat(const HermitianOperator& H, double t) {
  if (t < 0) throw ValidationError("heat: t must be nonnegative");
  return H.spectrum().apply([t](double b) { return cd(std::exp(-t * t * b * b)); });
}

CMat cayley(const HermitianOperator& H) {
  return H.spectrum().apply([](double b) { return (cd(b, -1.0)) / (cd(b, 1.0)); });
}

namespace {
void check_window(const HermitianOperator& H, double lambda0, const NumericPolicy& policy) {
  if (!(lambda0 > 0)) throw ValidationError("window radius must be positive");
  for (double b : H.spectrum().eigenvalues) {
    if (std::abs(std::abs(b) - lambda0) < policy.gap_tol) {
      throw AmbiguousWindow("ambiguous window: eigenvalue " + std::to_string(b) +
                            " sits at the window edge; adjust lambda0");
    }
  }
}
}  // namespace

CMat spectral_projection(const HermitianOperator& H, double lambda0, const NumericPolicy& policy) {
  check_window(H, lambda0, policy);
  return H.spectrum().apply([lambda0](double b) { return cd(std::abs(b) < lambda0 ? 1.0 : 0.0); });
}

SplitParts split_parts(const HermitianOperator& H, double lambda0, const NumericPolicy& policy) {
  SplitParts out;
  out.P = spectral_projection(H, lambda0, policy);
  const auto n = H.dim();
  const CMat I = CMat::Identity(n, n);
  out.A = H.entries() * out.P;
  out.C = H.entries() * (I - out.P);
  out.B = out.C + out.P;
  return out;
}

OperatorPath::OperatorPath(HermitianOperator d0, HermitianOperator d1)
    : d0_(std::move(d0)), d1_(std::move(d1)) {
  if (d0_.dim() != d1_.dim()) throw ValidationError("OperatorPath: endpoint dimensions differ");
  dot_ = HermitianOperator(d1_.entries() - d0_.entries());
}

HermitianOperator OperatorPath::sample(double u) const {
  if (u == 0.0) return d0_;
  if (u == 1.0) return d1_;
  return HermitianOperator((1.0 - u) * d0_.entries() + u * d1_.entries());
}

CMat random_hermitian(int n, unsigned long long seed, double scale) {
  CounterRng rng(seed);
  std::normal_distribution<double> nd;
  CMat A(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) A(i, j) = cd(nd(rng), nd(rng));
  CMat H = 0.5 * (A + A.adjoint());
  return H * (scale / std::sqrt(2.0 * n));
}

CMat random_unitary(int n, unsigned long long seed) {
  CounterRng rng(seed);
  std::normal_distribution<double> nd;
  CMat A(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) A(i, j) = cd(nd(rng), nd(rng));
  Eigen::HouseholderQR<CMat> qr(A);
  CMat Q = qr.householderQ();
  CMat R = qr.matrixQR().triangularView<Eigen::Upper>();
  for (int k = 0; k < n; ++k) {
    const double a = std::abs(R(k, k));
    if (a > 0) Q.col(k) *= R(k, k) / a;
  }
  return Q;
}

}  // namespace speclab

#include <algorithm>
#include <cmath>

#include <Eigen/Eigenvalues>

#include "speclab/dirac.hpp"

namespace speclab {

CMat pauli(int which) {
  CMat s = CMat::Zero(2, 2);
  switch (which) {
    case 0: s = CMat::Identity(2, 2); break;
    case 1: s(0, 1) = s(1, 0) = 1; break;
    case 2: s(0, 1) = -kI; s(1, 0) = kI; break;
    case 3: s(0, 0) = 1; s(1, 1) = -1; break;
    default: throw ValidationError("pauli: index out of range");
  }
  return s;
}

CMat kron(const CMat& a, const CMat& b) {
  CMat out(a.rows() * b.rows(), a.cols() * b.cols());
  for (Eigen::Index i = 0; i < a.rows(); ++i)
    for (Eigen::Index j = 0; j < a.cols(); ++j)
      out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
  return out;
}

namespace {

// Assembles a banded site operator into block-tridiagonal storage.
class Assembler {
 public:
  Assembler(int sites, int site_dim, int per_block)
      : sd_(site_dim), spb_(per_block), bs_(site_dim * per_block) {
    const int nb = sites / per_block;
    diag_.assign(nb, CMat::Zero(bs_, bs_));
    upper_.assign(nb - 1, CMat::Zero(bs_, bs_));
  }
  // T(i, j) += M and, for i != j, T(j, i) += M^*.
  void add(int i, int j, const CMat& M) {
    if (i > j) return add(j, i, M.adjoint());
    const int bi = i / spb_, bj = j / spb_;
    const int oi = (i % spb_) * sd_, oj = (j % spb_) * sd_;
    if (bi == bj) {
      diag_[bi].block(oi, oj, sd_, sd_) += M;
      if (i != j) diag_[bi].block(oj, oi, sd_, sd_) += M.adjoint();
    } else if (bj == bi + 1) {
      upper_[bi].block(oi, oj, sd_, sd_) += M;
    } else {
      throw std::logic_error("Assembler: coupling beyond the block band");
    }
  }
  BlockTridiagonal finish() { return BlockTridiagonal(std::move(diag_), std::move(upper_)); }

 private:
  int sd_, spb_, bs_;
  std::vector<CMat> diag_, upper_;
};

}  // namespace

BDiracOperator::BDiracOperator(BGeometry1D geometry, MassProfile mass, DiracOptions options)
    : geometry_(std::move(geometry)), mass_(std::move(mass)), options_(options) {
  if (options_.order != 2 && options_.order != 4)
    throw ValidationError("build_dirac: discretization order must be 2 or 4");
  k_ = mass_.fiber_dim();
  if (k_ < 1 || mass_.right_limit.rows() != k_) throw ValidationError("build_dirac: bad fiber dimension");
  const double h = geometry_.spacing();

  for (End e : kEnds) {
    const CMat& Wd = mass_.limit(e);
    if ((Wd - Wd.adjoint()).norm() > 1e-12 * std::max(1.0, Wd.norm()))
      throw ValidationError("build_dirac: boundary mass not Hermitian");
  }
  gap_ = 1e300;
  for (End e : kEnds) {
    Eigen::SelfAdjointEigenSolver<CMat> es(mass_.limit(e));
    gap_ = std::min(gap_, es.eigenvalues().cwiseAbs().minCoeff());
  }
  if (gap_ < 1e-10) throw ValidationError("boundary operator not invertible");

  const int spb = sites_per_block();
  int pad_l = static_cast<int>(std::lround(options_.padding / h));
  int pad_r = pad_l;
  if ((geometry_.size() + pad_l + pad_r) % spb != 0) ++pad_r;
  const int sites = geometry_.size() + pad_l + pad_r;
  layout_ = LatticeLayout{sites, 2 * k_, pad_l, h};
  lattice_x_.resize(sites);
  for (int s = 0; s < sites; ++s) lattice_x_(s) = geometry_.grid()(0) + (s - pad_l) * h;

  // Mass per site: W on the geometry grid, frozen limits on the padding.
  std::vector<CMat> W(sites);
  decay_ = 0;
  for (int s = 0; s < sites; ++s) {
    const int j = s - pad_l;
    if (j < 0) {
      W[s] = mass_.left_limit;
    } else if (j >= geometry_.size()) {
      W[s] = mass_.right_limit;
    } else {
      W[s] = mass_.W(geometry_.grid()(j));
      if (W[s].rows() != k_ || (W[s] - W[s].adjoint()).norm() > 1e-12 * std::max(1.0, W[s].norm()))
        throw ValidationError("build_dirac: W(x) not Hermitian");
      W[s] = 0.5 * (W[s] + W[s].adjoint()).eval();
      for (End e : kEnds) {
        if (!geometry_.in_end(e, j)) continue;
        const double y = geometry_.end_coordinate(e, j);
        decay_ = std::max(decay_, (W[s] - mass_.limit(e)).norm() * std::exp(-y));
      }
    }
  }

  const CMat s1 = kron(pauli(1), CMat::Identity(k_, k_));
  const CMat s2 = kron(pauli(2), CMat::Identity(k_, k_));
  const double r = options_.wilson;
  Assembler as(sites, 2 * k_, spb);
  for (int s = 0; s < sites; ++s) {
    CMat onsite = kron(pauli(2), W[s]);
    if (options_.order == 2) {
      onsite += (r / h) * s2;
      as.add(s, s, onsite);
      if (s + 1 < sites) as.add(s, s + 1, (-kI / (2 * h)) * s1 - (r / (2 * h)) * s2);
    } else {
      onsite += (6 * r / (8 * h)) * s2;
      as.add(s, s, onsite);
      if (s + 1 < sites) as.add(s, s + 1, (-kI * 8.0 / (12 * h)) * s1 - (4 * r / (8 * h)) * s2);
      if (s + 2 < sites) as.add(s, s + 2, (kI / (12 * h)) * s1 + (r / (8 * h)) * s2);
    }
  }
  blocks_ = as.finish();
}

BDiracOperator build_dirac(const BGeometry1D& geometry, const MassProfile& mass,
                           const DiracOptions& options) {
  return BDiracOperator(geometry, mass, options);
}

CMat BDiracOperator::boundary_operator(End e) const { return kron(pauli(2), mass_.limit(e)); }

CMat BDiracOperator::conormal(End e) const {
  return (-kI * end_sign(e)) * kron(pauli(1), CMat::Identity(k_, k_));
}

CMat BDiracOperator::indicial(double lambda, End e) const {
  return boundary_operator(e) + (kI * lambda) * conormal(e);
}

CMat BDiracOperator::lattice_indicial(double lambda, End e) const {
  const double h = geometry_.spacing(), r = options_.wilson;
  const double c = std::sin(0.5 * lambda * h);
  double kin, wil;
  if (options_.order == 2) {
    kin = std::sin(lambda * h) / h;
    wil = 2 * r * c * c / h;
  } else {
    kin = (8 * std::sin(lambda * h) - std::sin(2 * lambda * h)) / (6 * h);
    wil = 2 * r * c * c * c * c / h;
  }
  const CMat Id = CMat::Identity(k_, k_);
  return end_sign(e) * kin * kron(pauli(1), Id) + kron(pauli(2), mass_.limit(e) + wil * Id);
}

CMat BDiracOperator::lattice_indicial_derivative(double lambda, End e) const {
  const double h = geometry_.spacing(), r = options_.wilson;
  const double sn = std::sin(0.5 * lambda * h), cs = std::cos(0.5 * lambda * h);
  double kin, wil;
  if (options_.order == 2) {
    kin = std::cos(lambda * h);
    wil = 2 * r * sn * cs;
  } else {
    kin = (8 * std::cos(lambda * h) - 2 * std::cos(2 * lambda * h)) / 6;
    wil = 4 * r * sn * sn * sn * cs;
  }
  const CMat Id = CMat::Identity(k_, k_);
  return end_sign(e) * kin * kron(pauli(1), Id) + wil * kron(pauli(2), Id);
}

CMat BDiracOperator::site_operator(const std::vector<CMat>& per_site) const {
  if (static_cast<int>(per_site.size()) != layout_.sites)
    throw ValidationError("site_operator: one matrix per lattice site expected");
  const int f = layout_.fiber;
  CMat out = CMat::Zero(layout_.dim(), layout_.dim());
  for (int s = 0; s < layout_.sites; ++s)
    out.block(static_cast<Eigen::Index>(s) * f, static_cast<Eigen::Index>(s) * f, f, f) = per_site[s];
  return out;
}

BlockTridiagonal BDiracOperator::conjugate(const BlockTridiagonal& T,
                                           const std::vector<CMat>& per_site) const {
  const int spb = sites_per_block(), f = layout_.fiber;
  std::vector<CMat> U(T.blocks());
  for (int b = 0; b < T.blocks(); ++b) {
    U[b] = CMat::Zero(spb * f, spb * f);
    for (int q = 0; q < spb; ++q) U[b].block(q * f, q * f, f, f) = per_site[b * spb + q];
  }
  std::vector<CMat> d(T.blocks()), u(T.blocks() - 1);
  for (int b = 0; b < T.blocks(); ++b) {
    d[b] = U[b].adjoint() * T.diag()[b] * U[b];
    d[b] = 0.5 * (d[b] + d[b].adjoint()).eval();
    if (b + 1 < T.blocks()) u[b] = U[b].adjoint() * T.upper()[b] * U[b + 1];
  }
  return BlockTridiagonal(std::move(d), std::move(u));
}

std::vector<CMat> BDiracOperator::extend_to_lattice(const std::vector<CMat>& per_sample) const {
  if (static_cast<int>(per_sample.size()) != geometry_.size())
    throw ValidationError("extend_to_lattice: one value per geometry sample expected");
  std::vector<CMat> out(layout_.sites);
  for (int s = 0; s < layout_.sites; ++s) {
    const int j = std::clamp(s - layout_.offset, 0, geometry_.size() - 1);
    out[s] = per_sample[j];
  }
  return out;
}

RegularizedValue b_supertrace_q(const GradedMatrix& A, const LatticeLayout& layout,
                                const BGeometry1D& geometry, const NumericPolicy& policy) {
  if (A.clifford_degree < 1 || A.clifford_degree > 2)
    throw ValidationError("b_supertrace_q: unsupported degree q");
  const Eigen::Index n = layout.dim();
  if (A.base.rows() % n != 0) throw ValidationError("b_supertrace_q: base is not a stack of lattice copies");
  const int copies = static_cast<int>(A.base.rows() / n);
  CMat M = A.base;
  for (int i = A.clifford_degree - 1; i >= 0; --i) M = A.generators[i] * M;
  CVec sites = CVec::Zero(layout.sites);
  for (int c = 0; c < copies; ++c) {
    const double sign = A.grading(c * n);
    if ((A.grading.segment(c * n, n).array() != sign).any())
      throw ValidationError("b_supertrace_q: grading not constant on a lattice copy");
    LatticeLayout one = layout;
    sites += sign * site_traces_complex(M.block(c * n, c * n, n, n), one);
  }
  RegularizedValue r = b_trace_from_sites(sites, layout, geometry, policy);
  const cd norm = A.clifford_degree == 1 ? 1.0 / (2.0 * kI * std::sqrt(kPi)) : cd(-1.0 / (4.0 * kPi));
  r.value *= norm;
  return r;
}

}  // namespace speclab

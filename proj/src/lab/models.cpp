#include <cmath>

#include "speclab/lab.hpp"

namespace speclab::lab {

namespace {

// C^infinity step: 0 for s <= 0, 1 for s >= 1.
double smoothstep(double s) {
  if (s <= 0) return 0;
  if (s >= 1) return 1;
  auto f = [](double x) { return x > 0 ? std::exp(-1 / x) : 0.0; };
  return f(s) / (f(s) + f(1 - s));
}

}  // namespace

CircleModel circle_model(int cutoff, int winding) {
  if (cutoff < 1) throw ConfigError("circle: cutoff must be positive");
  if (std::abs(winding) * 4 > cutoff)
    throw ConfigError("circle: cutoff " + std::to_string(cutoff) + " too small for winding " +
                      std::to_string(winding) + " (aliasing guard: cutoff >= 4 |n|)");
  CircleModel m;
  m.cutoff = cutoff;
  m.winding = winding;
  const int N = 2 * cutoff + 1;
  m.D = CMat::Zero(N, N);
  m.D1 = CMat::Zero(N, N);
  m.shift = CMat::Zero(N, N);
  for (int i = 0; i < N; ++i) {
    m.D(i, i) = i - cutoff;
    m.D1(i, i) = i - cutoff + winding;
    const int j = i + winding;
    if (j >= 0 && j < N) m.shift(j, i) = 1;
  }
  return m;
}

BIntervalSpec b_interval_spec(const Config& cfg, const std::string& p) {
  BIntervalSpec s;
  s.x_lo = cfg.num(p + ".x_lo");
  s.x_hi = cfg.num(p + ".x_hi");
  s.end_length = cfg.num(p + ".L");
  s.spacing = cfg.num(p + ".h");
  s.padding = cfg.num(p + ".padding");
  s.wilson = cfg.num(p + ".wilson");
  s.order = cfg.integer(p + ".order");
  s.w_boundary = cfg.nums(p + ".w_boundary");
  s.coupling = cfg.num(p + ".coupling");
  s.phases_left = cfg.nums(p + ".phases_left");
  s.phases_right = cfg.nums(p + ".phases_right");
  s.winding = cfg.integers(p + ".winding");
  const std::size_t k = s.w_boundary.size();
  if (k == 0) throw ConfigError(p + ".w_boundary is empty");
  if (s.phases_left.size() != k || s.phases_right.size() != k || s.winding.size() != k)
    throw ConfigError(p + ": phases and winding need one entry per fiber component");
  if (!(s.x_hi > s.x_lo) || !(s.end_length > 0) || !(s.spacing > 0))
    throw ConfigError(p + ": bad geometry");
  return s;
}

CMat b_twist(const BIntervalSpec& spec, double x) {
  const int k = static_cast<int>(spec.w_boundary.size());
  const double r = smoothstep((x - spec.x_lo) / (spec.x_hi - spec.x_lo));
  CMat gp = CMat::Zero(k, k);
  for (int i = 0; i < k; ++i) {
    const double a = spec.phases_left[i];
    const double b = spec.phases_right[i] + 2 * kPi * spec.winding[i];
    gp(i, i) = std::polar(1.0, a + r * (b - a));
  }
  // Chiral projectors of sigma_1 on the spinor factor.
  const CMat Pp = 0.5 * (pauli(0) + pauli(1)), Pm = 0.5 * (pauli(0) - pauli(1));
  return kron(Pp, gp) + kron(Pm, CMat::Identity(k, k));
}

BIntervalModel b_interval_model(const BIntervalSpec& spec) {
  const int k = static_cast<int>(spec.w_boundary.size());
  BGeometry1D geo(spec.x_lo, spec.x_hi, spec.end_length, spec.spacing);
  MassProfile mass;
  mass.left_limit = CMat::Zero(k, k);
  for (int i = 0; i < k; ++i) mass.left_limit(i, i) = spec.w_boundary[i];
  mass.right_limit = mass.left_limit;
  const CMat Wd = mass.left_limit;
  const double c = spec.coupling;
  mass.W = [Wd, c, k](double x) {
    CMat W = Wd;
    // sech coupling between neighbouring components; decays like e^{-|x|}.
    for (int i = 0; i + 1 < k; ++i) W(i, i + 1) = W(i + 1, i) = c / std::cosh(x);
    return W;
  };
  DiracOptions opt;
  opt.order = spec.order;
  opt.wilson = spec.wilson;
  opt.padding = spec.padding;
  BIntervalModel m{spec, BDiracOperator(geo, mass, opt), {}, {}, {}, {}};
  const RVec& xs = m.D.lattice_x();
  for (Eigen::Index s = 0; s < xs.size(); ++s) m.g_sites.push_back(b_twist(spec, xs(s)));
  const RVec& grid = m.D.geometry().grid();
  for (Eigen::Index j = 0; j < grid.size(); ++j) m.g_samples.push_back(b_twist(spec, grid(j)));
  m.g_left = b_twist(spec, spec.x_lo - spec.end_length);
  m.g_right = b_twist(spec, spec.x_hi + spec.end_length);
  return m;
}

}  // namespace speclab::lab

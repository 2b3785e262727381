#include <algorithm>
#include <cmath>
#include <limits>

#include "speclab/cyclic_algebra.hpp"
#include "speclab/rng.hpp"

namespace speclab {

AlgebraElement AlgebraElement::unit(int points, int rank) {
  AlgebraElement e;
  e.values.assign(points, CMat::Identity(rank, rank));
  e.is_unit = true;
  return e;
}

AlgebraElement AlgebraElement::constant(const CMat& m, int points) {
  AlgebraElement e;
  e.values.assign(points, m);
  return e;
}

AlgebraElement AlgebraElement::operator*(const AlgebraElement& o) const {
  if (is_unit) return o;
  if (o.is_unit) return *this;
  if (points() != o.points() || rank() != o.rank())
    throw ValidationError("AlgebraElement: incompatible operands");
  AlgebraElement e;
  e.values.resize(points());
  for (int p = 0; p < points(); ++p) e.values[p] = values[p] * o.values[p];
  return e;
}

AlgebraElement AlgebraElement::adjoint() const {
  AlgebraElement e;
  e.is_unit = is_unit;
  e.values.resize(points());
  for (int p = 0; p < points(); ++p) e.values[p] = values[p].adjoint();
  return e;
}

AlgebraElement AlgebraElement::entry(int i, int j) const {
  AlgebraElement e;
  e.values.resize(points());
  for (int p = 0; p < points(); ++p) e.values[p] = values[p].block(i, j, 1, 1);
  return e;
}

bool AlgebraElement::is_unitary(double tol) const {
  for (const CMat& v : values)
    if ((v.adjoint() * v - CMat::Identity(v.rows(), v.cols())).norm() > tol) return false;
  return true;
}

double AlgebraElement::sup_norm() const {
  double m = 0;
  for (const CMat& v : values) m = std::max(m, v.rows() == 1 ? std::abs(v(0, 0)) : v.operatorNorm());
  return m;
}

ElementPool::ElementPool(int points, int rank) : points_(points), rank_(rank) {
  elems_.push_back(AlgebraElement::unit(points, rank));
}

int ElementPool::add(AlgebraElement e) {
  if (e.points() != points_ || e.rank() != rank_) throw ValidationError("ElementPool: element shape mismatch");
  std::lock_guard<std::mutex> lock(mu_);
  elems_.push_back(std::move(e));
  return static_cast<int>(elems_.size()) - 1;
}

int ElementPool::product(int a, int b) {
  if (a == kUnit) return b;
  if (b == kUnit) return a;
  const long long key = (static_cast<long long>(a) << 32) | static_cast<unsigned>(b);
  {
    std::lock_guard<std::mutex> lock(mu_);
    auto it = products_.find(key);
    if (it != products_.end()) return it->second;
  }
  AlgebraElement p = (*this)[a] * (*this)[b];
  std::lock_guard<std::mutex> lock(mu_);
  auto it = products_.find(key);
  if (it != products_.end()) return it->second;
  elems_.push_back(std::move(p));
  const int id = static_cast<int>(elems_.size()) - 1;
  products_[key] = id;
  return id;
}

const AlgebraElement& ElementPool::operator[](int id) const {
  std::lock_guard<std::mutex> lock(mu_);
  return elems_.at(id);
}

int ElementPool::size() const {
  std::lock_guard<std::mutex> lock(mu_);
  return static_cast<int>(elems_.size());
}

void CyclicChain::add(cd coef, std::vector<int> slots) {
  if (slots.empty()) throw ValidationError("CyclicChain: a tensor needs at least one slot");
  terms_.push_back({coef, std::move(slots)});
}

void CyclicChain::append(const CyclicChain& other, cd scale) {
  if (other.pool_ != pool_) throw ValidationError("CyclicChain: chains over different pools");
  for (const ChainTerm& t : other.terms_) terms_.push_back({scale * t.coef, t.slots});
}

CyclicChain CyclicChain::component(int degree) const {
  CyclicChain out(pool_);
  for (const ChainTerm& t : terms_)
    if (t.degree() == degree) out.terms_.push_back(t);
  return out;
}

int CyclicChain::max_degree() const {
  int d = -1;
  for (const ChainTerm& t : terms_) d = std::max(d, t.degree());
  return d;
}

CyclicChain hochschild_b(const CyclicChain& c) {
  CyclicChain out(c.pool());
  ElementPool& pool = *c.pool();
  for (const ChainTerm& t : c.terms()) {
    const int n = t.degree();
    if (n == 0) continue;
    for (int i = 0; i < n; ++i) {
      std::vector<int> s;
      s.reserve(n);
      for (int j = 0; j < i; ++j) s.push_back(t.slots[j]);
      s.push_back(pool.product(t.slots[i], t.slots[i + 1]));
      for (int j = i + 2; j <= n; ++j) s.push_back(t.slots[j]);
      out.add((i % 2 ? -1.0 : 1.0) * t.coef, std::move(s));
    }
    std::vector<int> s;
    s.reserve(n);
    s.push_back(pool.product(t.slots[n], t.slots[0]));
    for (int j = 1; j < n; ++j) s.push_back(t.slots[j]);
    out.add((n % 2 ? -1.0 : 1.0) * t.coef, std::move(s));
  }
  return out;
}

CyclicChain connes_B(const CyclicChain& c) {
  CyclicChain out(c.pool());
  for (const ChainTerm& t : c.terms()) {
    const int n = t.degree();
    for (int i = 0; i <= n; ++i) {
      std::vector<int> s;
      s.reserve(n + 2);
      s.push_back(ElementPool::kUnit);
      for (int j = i; j <= n; ++j) s.push_back(t.slots[j]);
      for (int j = 0; j < i; ++j) s.push_back(t.slots[j]);
      out.add(((n * i) % 2 ? -1.0 : 1.0) * t.coef, std::move(s));
    }
  }
  return out;
}

CyclicChain matrix_trace_map(const CyclicChain& c) {
  const ElementPool& src = *c.pool();
  const int r = src.rank();
  auto pool = std::make_shared<ElementPool>(src.points(), 1);
  // Entries of each source element, created on first use; the unit maps to
  // delta_ij times the unit of A.
  std::unordered_map<long long, int> entry_id;
  auto entry = [&](int id, int i, int j) -> int {
    if (id == ElementPool::kUnit) return i == j ? ElementPool::kUnit : -1;
    const long long key = (static_cast<long long>(id) * r + i) * r + j;
    auto it = entry_id.find(key);
    if (it != entry_id.end()) return it->second;
    const int nid = pool->add(src[id].entry(i, j));
    entry_id[key] = nid;
    return nid;
  };
  CyclicChain out(pool);
  for (const ChainTerm& t : c.terms()) {
    const int n = t.degree();
    std::vector<int> idx(n + 1, 0);
    // Odometer over (i_0, ..., i_n); slot k uses (i_k, i_{k+1 mod n+1}).
    for (;;) {
      std::vector<int> s(n + 1);
      bool zero = false;
      for (int k = 0; k <= n && !zero; ++k) {
        s[k] = entry(t.slots[k], idx[k], idx[(k + 1) % (n + 1)]);
        zero = s[k] < 0;
      }
      if (!zero) out.add(t.coef, std::move(s));
      int k = 0;
      while (k <= n && ++idx[k] == r) idx[k++] = 0;
      if (k > n) break;
    }
  }
  return out;
}

ProductFunctional::ProductFunctional(int points, int max_degree, unsigned long long seed) {
  CounterRng rng(seed);
  w_.resize(max_degree + 1);
  for (int i = 0; i <= max_degree; ++i) {
    CVec w(points);
    for (int p = 0; p < points; ++p) w(p) = cd(2 * rng.uniform() - 1, 2 * rng.uniform() - 1);
    if (i >= 1) w.array() -= w.mean();
    w_[i] = w;
  }
}

CMat ProductFunctional::slot_value(const AlgebraElement& a, int slot) const {
  const CVec& w = w_.at(slot);
  if (a.points() != w.size()) throw ValidationError("ProductFunctional: point count mismatch");
  CMat out = CMat::Zero(a.rank(), a.rank());
  for (int p = 0; p < a.points(); ++p) out += w(p) * a.values[p];
  return out;
}

cd ProductFunctional::evaluate(const CyclicChain& c) const {
  const ElementPool& pool = *c.pool();
  std::unordered_map<long long, CMat> cache;
  auto value = [&](int id, int slot) -> const CMat& {
    const long long key = static_cast<long long>(id) * 64 + slot;
    auto it = cache.find(key);
    if (it == cache.end()) it = cache.emplace(key, slot_value(pool[id], slot)).first;
    return it->second;
  };
  cd total = 0;
  for (const ChainTerm& t : c.terms()) {
    CMat acc = value(t.slots[0], 0);
    for (int k = 1; k <= t.degree(); ++k) acc = acc * value(t.slots[k], k);
    total += t.coef * acc.trace();
  }
  return total;
}

double ProductFunctional::magnitude(const CyclicChain& c) const {
  const ElementPool& pool = *c.pool();
  double total = 0;
  for (const ChainTerm& t : c.terms()) {
    double m = std::abs(t.coef);
    for (int k = 0; k <= t.degree(); ++k) m *= std::max(1e-300, slot_value(pool[t.slots[k]], k).norm());
    total += m;
  }
  return total;
}

CVec densify(const CyclicChain& c, int degree) {
  const ElementPool& pool = *c.pool();
  if (pool.rank() != 1) throw ValidationError("densify: scalar algebras only");
  const int P = pool.points();
  const double size = std::pow(static_cast<double>(P), degree + 1);
  if (size > 5e6) throw ValidationError("densify: tensor too large");
  CVec out = CVec::Zero(static_cast<Eigen::Index>(size));
  auto vec = [&](int id, bool normalized) {
    CVec v(P);
    for (int p = 0; p < P; ++p) v(p) = pool[id].values[p](0, 0);
    if (normalized) v.array() -= v.mean();
    return v;
  };
  for (const ChainTerm& t : c.terms()) {
    if (t.degree() != degree) continue;
    CVec acc = t.coef * vec(t.slots[0], false);
    for (int k = 1; k <= degree; ++k) {
      const CVec v = vec(t.slots[k], true);
      CVec next(acc.size() * P);
      for (Eigen::Index a = 0; a < acc.size(); ++a) next.segment(a * P, P) = acc(a) * v;
      acc.swap(next);
    }
    out += acc;
  }
  return out;
}

EntireNorm entire_norm(const CyclicChain& c, double lambda, NormBackend backend, const BGeometry1D* geometry) {
  const ElementPool& pool = *c.pool();
  if (backend == NormBackend::kBNorm && (!geometry || geometry->size() != pool.points()))
    throw ValidationError("entire_norm: b-norm backend needs the sampling geometry");
  std::unordered_map<long long, double> cache;
  auto norm_of = [&](int id, bool normalized) {
    const long long key = static_cast<long long>(id) * 2 + (normalized ? 1 : 0);
    auto it = cache.find(key);
    if (it != cache.end()) return it->second;
    std::vector<CMat> v = pool[id].values;
    if (normalized) {
      cd mean = 0;
      for (const CMat& m : v) mean += m.trace();
      mean /= static_cast<double>(v.size() * pool.rank());
      for (CMat& m : v) m.diagonal().array() -= mean;
    }
    double n;
    if (backend == NormBackend::kOperator) {
      n = 0;
      for (const CMat& m : v) n = std::max(n, m.operatorNorm());
    } else {
      n = b_norm(split_exp(v, *geometry));
    }
    cache[key] = n;
    return n;
  };
  const int top = c.max_degree();
  EntireNorm r;
  if (top < 0) return r;
  std::vector<double> per(top + 1, 0.0);
  for (const ChainTerm& t : c.terms()) {
    double m = std::abs(t.coef);
    for (int k = 0; k <= t.degree() && m > 0; ++k) m *= norm_of(t.slots[k], k >= 1);
    per[t.degree()] += m;
  }
  r.weighted.assign(top + 1, 0.0);
  for (int n = 1; n <= top; ++n) r.weighted[n] = std::pow(lambda, n) / std::tgamma(0.5 * n) * per[n];
  r.value = *std::max_element(r.weighted.begin(), r.weighted.end());
  if (top >= 3 && r.weighted[top - 2] > 0) {
    r.tail_ratio = r.weighted[top] / r.weighted[top - 2];
    if (r.tail_ratio >= 1.0 && r.weighted[top] >= r.value) r.value = std::numeric_limits<double>::infinity();
  }
  return r;
}

const char* to_string(ChernConvention c) { return c == ChernConvention::kUnsigned ? "unsigned" : "closed"; }

ChernConvention chern_convention_from_string(const std::string& s) {
  if (s == "unsigned") return ChernConvention::kUnsigned;
  if (s == "closed") return ChernConvention::kClosed;
  throw ValidationError("unknown Chern convention '" + s + "'");
}

double chern_coefficient(int k, ChernConvention c) {
  const double f = std::tgamma(k + 1.0);
  return (c == ChernConvention::kClosed && k % 2) ? -f : f;
}

CyclicChain chern_character(const AlgebraElement& g, int K, ChernConvention conv, bool trace,
                            const NumericPolicy& policy) {
  if (K < 0) throw ValidationError("chern_character: K must be nonnegative");
  if (!g.is_unitary(policy.unitarity_tol)) throw ValidationError("chern_character: g is not unitary");
  auto pool = std::make_shared<ElementPool>(g.points(), g.rank());
  const int gi = pool->add(g.adjoint());
  const int gg = pool->add(g);
  CyclicChain ch(pool);
  for (int k = 0; k <= K; ++k) {
    std::vector<int> s;
    for (int j = 0; j <= k; ++j) {
      s.push_back(gi);
      s.push_back(gg);
    }
    ch.add(chern_coefficient(k, conv), std::move(s));
  }
  return trace ? matrix_trace_map(ch) : ch;
}

}  // namespace speclab

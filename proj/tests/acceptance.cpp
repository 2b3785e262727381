// Runs the four experiments with the shipped configs, writes their reports,
// reads the reports back and checks criteria 1-9 against the tolerances
// pinned below. Only the written reports are consulted.

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <sstream>
#include <string>
#include <vector>

#include "speclab/lab.hpp"

#ifndef SPECLAB_CONFIG_DIR
#error "SPECLAB_CONFIG_DIR must point at the configs directory"
#endif
#ifndef SPECLAB_ACCEPTANCE_OUT
#define SPECLAB_ACCEPTANCE_OUT "acceptance_out"
#endif

using speclab::lab::json;
namespace fs = std::filesystem;

namespace {

namespace tol {
constexpr double kGetzler = 1e-6;
constexpr double kSfSeconds = 10;
constexpr double kAlpha = 1e-3;
constexpr double kAlphaSeconds = 60;
constexpr double kIdentity = 1e-2;
constexpr double kHalvingFloor = 1e-7;  // residual already at the quadrature level
constexpr double kAssumption = 0.5;     // |[dD, g]| <= lambda / 2
constexpr double kClosureSeconds = 600;
constexpr double kVaretaMedian = 1e-8;
constexpr double kVaretaMax = 1e-6;
constexpr double kVaretaB = 1e-3;
constexpr double kCyclic = 1e-12;
constexpr double kChern = 1e-10;
constexpr double kSigmas = 3;
constexpr double kDivDiff = 1e-7;
constexpr double kGrowthIncrease = 0.25;
constexpr double kStokes = 1e-4;
constexpr double kGammaSmax = 1e-8;
constexpr double kLemma = 1e-4;
constexpr double kDefect = 1e-4;
constexpr double kDefectInterior = 1e-10;
}  // namespace tol

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  if (!in) throw std::runtime_error("missing report file " + p.string());
  std::stringstream s;
  s << in.rdbuf();
  return s.str();
}

struct Reports {
  json doc, timing;
  std::string error;
  bool ok() const { return error.empty(); }
};

Reports run(const std::string& experiment, const std::string& file, const std::vector<std::string>& overrides = {}) {
  Reports r;
  const fs::path out = SPECLAB_ACCEPTANCE_OUT;
  try {
    using namespace speclab::lab;
    Config cfg = Config::load((fs::path(SPECLAB_CONFIG_DIR) / file).string());
    for (const auto& o : overrides) cfg.apply_override(o);
    cfg.resolve(schema_for(experiment));
    Report rep(experiment, cfg);
    run_experiment(experiment, cfg, rep);
    rep.write(out.string());
    r.doc = json::parse(slurp(out / (experiment + ".json")));
    r.timing = json::parse(slurp(out / (experiment + ".timing.json")));
  } catch (const std::exception& e) {
    r.error = e.what();
  }
  return r;
}

// Accumulates the checks of one criterion.
class Criterion {
 public:
  Criterion(int id, const Reports& r) : id_(id) {
    if (!r.ok()) fail("experiment failed: " + r.error);
  }

  void check(bool ok, const std::string& what) {
    if (!ok) fail(what);
  }
  void info(const std::string& s) { info_.push_back(s); }
  bool passed() const { return failures_.empty(); }

  void print() const {
    std::printf("criterion %d: %s", id_, passed() ? "PASS" : "FAIL");
    std::string sep = "  ";
    for (const auto& s : info_) {
      std::printf("%s%s", sep.c_str(), s.c_str());
      sep = "; ";
    }
    std::printf("\n");
    for (const auto& f : failures_) std::printf("    failed: %s\n", f.c_str());
  }

 private:
  void fail(const std::string& s) { failures_.push_back(s); }
  int id_;
  std::vector<std::string> failures_, info_;
};

std::string fmt(double v) {
  char b[48];
  std::snprintf(b, sizeof b, "%.3g", v);
  return b;
}

// Named report entry, or null.
const json* entry(const json& doc, const char* list, const std::string& name) {
  if (!doc.contains(list)) return nullptr;
  for (const auto& e : doc[list])
    if (e["name"] == name) return &e;
  return nullptr;
}

std::vector<const json*> entries_with(const json& doc, const char* list, const std::string& part) {
  std::vector<const json*> out;
  if (!doc.contains(list)) return out;
  for (const auto& e : doc[list])
    if (e["name"].get<std::string>().find(part) != std::string::npos) out.push_back(&e);
  return out;
}

double number(const json& j) { return j.is_number() ? j.get<double>() : NAN; }

// |lhs - rhs| of an identity against a pinned tolerance.
double identity_check(Criterion& c, const json& doc, const std::string& name, double limit) {
  const json* e = entry(doc, "identities", name);
  if (!e) {
    c.check(false, "no report entry '" + name + "'");
    return NAN;
  }
  const double d = number((*e)["difference"]);
  c.check(d <= limit, name + ": |lhs - rhs| = " + fmt(d) + " (lhs " + fmt(number((*e)["lhs"])) + ", rhs " +
                          fmt(number((*e)["rhs"])) + ") above " + fmt(limit));
  return d;
}

double bound_check(Criterion& c, const json& doc, const std::string& name, double limit) {
  const json* e = entry(doc, "bounds", name);
  if (!e) {
    c.check(false, "no report entry '" + name + "'");
    return NAN;
  }
  const double v = number((*e)["value"]);
  c.check(v <= limit, name + " = " + fmt(v) + " above " + fmt(limit));
  return v;
}

double seconds(const Reports& r, const std::string& key) {
  return r.timing.contains(key) ? r.timing[key].get<double>() : NAN;
}

std::string input(const Reports& r, const std::string& key) {
  return r.doc.contains("inputs") && r.doc["inputs"].contains(key) ? r.doc["inputs"][key].get<std::string>() : "";
}

Criterion circle_sf(const Reports& r) {
  Criterion c(1, r);
  if (!r.ok()) return c;
  c.check(input(r, "circle.cutoff") == "64", "Fourier cutoff is not 64");
  double worst_t = 0, worst_g = 0;
  for (int n = 1; n <= 3; ++n) {
    const std::string k = "n=" + std::to_string(n);
    identity_check(c, r.doc, k + " sf tracking", 0.0);
    identity_check(c, r.doc, k + " sf winding", 0.0);
    worst_g = std::max(worst_g, identity_check(c, r.doc, k + " getzler eps=4", tol::kGetzler));
    const double s = seconds(r, k + ".spectral_flow");
    c.check(s < tol::kSfSeconds, k + " runtime " + fmt(s) + " s");
    worst_t = std::max(worst_t, s);
  }
  c.info("sf = n for n = 1,2,3 by tracking and winding");
  c.info("max |getzler - n| = " + fmt(worst_g));
  c.info("max runtime " + fmt(worst_t) + " s");
  return c;
}

Criterion circle_alpha(const Reports& r) {
  Criterion c(2, r);
  if (!r.ok()) return c;
  c.check(input(r, "circle.K") == "4", "truncation is not K = 4");
  double total = 0;
  for (int n = 1; n <= 3; ++n) {
    const std::string k = "n=" + std::to_string(n);
    for (const char* t : {"0.05", "20"}) {
      const std::string name = k + " alpha(t=" + t + ") vs 2n";
      const double d = identity_check(c, r.doc, name, tol::kAlpha);
      const json* e = entry(r.doc, "identities", name);
      if (e) c.info(k + " t=" + t + ": alpha " + fmt(number((*e)["lhs"])) + " (|diff| " + fmt(d) + ")");
    }
    total += seconds(r, k + ".alpha");
  }
  c.check(total < tol::kAlphaSeconds, "runtime " + fmt(total) + " s");
  c.info("runtime " + fmt(total) + " s");
  return c;
}

Criterion closure(const Reports& r) {
  Criterion c(3, r);
  if (!r.ok()) return c;
  c.check(input(r, "b.h") == "0.02" && input(r, "b.L") == "20", "grid is not h = 0.02, L = 20");
  const double r0 = identity_check(c, r.doc, "main identity h=0.02", tol::kIdentity);
  const double r1 = identity_check(c, r.doc, "main identity h=0.01", tol::kIdentity);
  const double limit = std::max(r0 / 2, tol::kHalvingFloor);
  c.check(r1 <= limit, "refined residual " + fmt(r1) + " above max(r(h)/2, floor) = " + fmt(limit));
  const double ratio = bound_check(c, r.doc, "h=0.02 |[dD, g]| / lambda", tol::kAssumption);
  const double s = seconds(r, "h=0.02.total") + seconds(r, "h=0.01.total");
  c.check(s < tol::kClosureSeconds, "runtime " + fmt(s) + " s");
  const json& res = r.doc["results"];
  if (res.contains("closure") && res["closure"].contains("h=0.02")) {
    const json& l = res["closure"]["h=0.02"];
    c.info("sf " + l["sf"]["physical"].dump() + ", de Rham " + fmt(number(l["de_rham_pairing"]["value"])) +
           ", eta " + fmt(number(l["eta_pairing"]["standard"]["value"])));
  }
  c.info("residual " + fmt(r0) + " -> " + fmt(r1));
  c.info("|[dD,g]|/lambda " + fmt(ratio));
  c.info("runtime " + fmt(s) + " s");
  return c;
}

Criterion vareta(const Reports& r) {
  Criterion c(4, r);
  if (!r.ok()) return c;
  c.check(input(r, "lemmas.families") == "100" && input(r, "lemmas.dim") == "8", "not 100 families of 8x8");
  const double med = bound_check(c, r.doc, "vareta matrix median residual", tol::kVaretaMedian);
  const double mx = bound_check(c, r.doc, "vareta matrix max residual", tol::kVaretaMax);
  const double b = identity_check(c, r.doc, "vareta b-backend: FD vs local + E", tol::kVaretaB);
  c.info("median " + fmt(med) + ", max " + fmt(mx) + ", b-backend " + fmt(b));
  return c;
}

Criterion cyclic(const Reports& r) {
  Criterion c(5, r);
  if (!r.ok()) return c;
  c.check(input(r, "cyclic.chains") == "100" && input(r, "cyclic.max_degree") == "5", "not 100 chains of degree <= 5");
  c.check(input(r, "cyclic.chern_K") == "6", "Chern truncation is not 6");
  double worst = 0;
  for (const char* n : {"b^2 = 0 (max entry)", "B^2 = 0 (max entry)", "(b+B)^2 = 0 (max entry)",
                        "trace map commutes with b and B (max entry)"})
    worst = std::max(worst, bound_check(c, r.doc, n, tol::kCyclic));
  const double ch = bound_check(c, r.doc, "(b+B) Ch(g) in degrees <= 12 (closed)", tol::kChern);
  c.info("max b^2, B^2, (b+B)^2, chain map " + fmt(worst));
  c.info("(b+B)Ch closed convention " + fmt(ch));
  if (const json* p = entry(r.doc, "bounds", "(b+B) Ch(g) in degrees <= 12 (unsigned)"))
    c.info("unsigned convention " + fmt(number((*p)["value"])) + " (not closed, diagnostic)");
  return c;
}

Criterion bracket(const Reports& r) {
  Criterion c(6, r);
  if (!r.ok()) return c;
  const json& mc = r.doc["results"]["monte_carlo"];
  c.check(mc.value("samples", 0L) >= 1000000, "fewer than 1e6 samples");
  c.check(input(r, "mc.dim") == "6", "instances are not dim 6");
  const auto& inst = mc["instances"];
  c.check(inst.size() == 20, "expected 20 instances, got " + std::to_string(inst.size()));
  double worst = 0;
  for (const auto& i : inst) {
    c.check(i["n"].get<int>() <= 3, "instance with n > 3");
    const double z = std::max(number(i["sigmas"]["re"]), number(i["sigmas"]["im"]));
    c.check(z <= tol::kSigmas, "instance off by " + fmt(z) + " standard errors");
    worst = std::max(worst, z);
  }
  const double dd = bound_check(c, r.doc, "divided differences: confluent perturbation (relative)", tol::kDivDiff);
  c.info("worst " + fmt(worst) + " standard errors over " + std::to_string(inst.size()) + " instances");
  c.info("divided-difference perturbation " + fmt(dd));
  return c;
}

Criterion growth(const Reports& r) {
  Criterion c(7, r);
  if (!r.ok()) return c;
  const json& g = r.doc["results"]["growth"];
  c.check(g.contains("degrees") && g["degrees"] == json({1, 3, 5, 7}), "degrees are not 1,3,5,7");
  const double inc = bound_check(c, r.doc, "entireness ratio: successive growth-factor increase", tol::kGrowthIncrease);
  if (g.contains("base")) {
    std::string ratios;
    for (const auto& v : g["ratio"]) ratios += (ratios.empty() ? "" : ",") + fmt(number(v));
    c.info("ratios " + ratios + ", fitted base " + fmt(number(g["base"])) + ", max factor increase " + fmt(inc));
  }
  return c;
}

Criterion stokes(const Reports& r) {
  Criterion c(8, r);
  if (!r.ok()) return c;
  double res = 0, gs = 0, lem = 0;
  for (const char* t : {"0.5", "1", "2"}) {
    const std::string k = std::string("t=") + t;
    res = std::max(res, bound_check(c, r.doc, k + " Stokes residual", tol::kStokes));
    gs = std::max(gs, bound_check(c, r.doc, k + " |gamma_Smax|", tol::kGammaSmax));
    lem = std::max(lem, identity_check(c, r.doc, k + " Gamma_0 vs lemma pairing (re)", tol::kLemma));
    lem = std::max(lem, identity_check(c, r.doc, k + " Gamma_0 vs lemma pairing (im)", tol::kLemma));
  }
  c.info("max residual " + fmt(res) + ", |gamma_Smax| " + fmt(gs) + ", Gamma_0 vs lemma " + fmt(lem));
  return c;
}

Criterion defect(const Reports& r) {
  Criterion c(9, r);
  if (!r.ok()) return c;
  const auto pairs = entries_with(r.doc, "identities", ": |lhs - rhs|");
  c.check(pairs.size() == 10, "expected 10 constructed pairs, got " + std::to_string(pairs.size()));
  double worst = 0;
  for (const json* e : pairs) {
    const double d = number((*e)["difference"]);
    c.check(d <= tol::kDefect, (*e)["name"].get<std::string>() + " = " + fmt(d));
    worst = std::max(worst, d);
  }
  const double in =
      bound_check(c, r.doc, "b-trace defect, interior-supported pairs (max |lhs|, |rhs|)", tol::kDefectInterior);
  c.info("max |lhs - rhs| " + fmt(worst) + ", interior pairs " + fmt(in));
  return c;
}

}  // namespace

int main() {
  const Reports circle = run("circle", "circle.cfg");
  const Reports b = run("b-interval", "b_interval.cfg", {"alpha.enabled=false"});
  const Reports lemmas = run("matrix-lemmas", "matrix_lemmas.cfg");
  const Reports st = run("stokes", "stokes.cfg");

  const std::vector<Criterion> all = {circle_sf(circle), circle_alpha(circle), closure(b),
                                      vareta(lemmas),    cyclic(lemmas),       bracket(lemmas),
                                      growth(b),         stokes(st),           defect(lemmas)};
  int failed = 0;
  for (const Criterion& c : all) {
    c.print();
    failed += c.passed() ? 0 : 1;
  }
  std::printf("%d of %zu criteria pass; reports in %s\n", static_cast<int>(all.size()) - failed, all.size(),
              SPECLAB_ACCEPTANCE_OUT);
  return failed == 0 ? 0 : 1;
}

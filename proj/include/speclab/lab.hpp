#pragma once

#include <map>
#include <string>
#include <vector>

#include <json.hpp>

#include "speclab/dirac.hpp"
#include "speclab/jlo_eta.hpp"
#include "speclab/rng.hpp"

namespace speclab::lab {

using json = nlohmann::json;

inline constexpr int kSchemaVersion = 1;

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Flat `key = value` text with dotted keys and `#` comments. Every key must
// appear in the experiment's schema, which also supplies the defaults.
class Config {
 public:
  using Schema = std::map<std::string, std::string>;

  static Config parse(const std::string& text, const std::string& origin = "<string>");
  static Config load(const std::string& path);

  // "key=value"; later settings win.
  void apply_override(const std::string& assignment);
  void set(const std::string& key, const std::string& value) { values_[key] = value; }
  bool has(const std::string& key) const { return values_.count(key) > 0; }
  std::string experiment() const;

  // Fill defaults and reject unknown keys.
  void resolve(const Schema& schema);

  std::string str(const std::string& key) const;
  double num(const std::string& key) const;
  int integer(const std::string& key) const;
  bool flag(const std::string& key) const;
  std::vector<double> nums(const std::string& key) const;
  std::vector<int> integers(const std::string& key) const;

  NumericPolicy policy() const;  // default policy with policy.* applied
  const std::map<std::string, std::string>& values() const { return values_; }

 private:
  const std::string& raw(const std::string& key) const;
  std::map<std::string, std::string> values_;
  std::string origin_;
};

Config::Schema common_schema();
Config::Schema schema_for(const std::string& experiment);

// One experiment's machine-readable output. Identities carry both sides.
class Report {
 public:
  explicit Report(const std::string& experiment, const Config& cfg);

  json& doc() { return doc_; }
  const json& doc() const { return doc_; }

  // lhs vs rhs within tol; gating entries decide the exit code.
  void identity(const std::string& name, double lhs, double rhs, double tol, bool gating = true);
  // value <= bound.
  void bound(const std::string& name, double value, double limit, bool gating = true);
  void note(const std::string& text);
  void curve(const std::string& name, const std::vector<double>& t, const std::vector<double>& alpha,
             const std::vector<double>& tail);
  void timing(const std::string& name, double seconds) { timings_[name] = seconds; }

  bool all_within() const;
  // Writes <experiment>.json (deterministic), CSV curves and
  // <experiment>.timing.json (wall clock, not part of the report).
  void write(const std::string& dir) const;

 private:
  json doc_;
  std::map<std::string, std::vector<std::vector<double>>> curves_;
  std::map<std::string, double> timings_;
};

// Write `text` to `path` through a temporary file and a rename.
void write_atomically(const std::string& path, const std::string& text);

// The D = -i d/dtheta model truncated to |m| <= cutoff in the Fourier basis.
struct CircleModel {
  int cutoff = 64;
  int winding = 1;
  CMat D;      // diag(m)
  CMat D1;     // diag(m + n): g^{-1} D g for g = e^{in theta} before truncation
  CMat shift;  // truncated e^{in theta}: e_m -> e_{m+n}
};
CircleModel circle_model(int cutoff, int winding);

// Interval with cylindrical ends, W = W_d + c sech(x) sigma_x, and the chiral
// twist g = P_+ (x) diag(e^{i phi_1}, e^{i phi_2}) + P_- (x) 1 ramped across
// the interior.
struct BIntervalSpec {
  double x_lo = -5, x_hi = 5, end_length = 20, spacing = 0.02, padding = 8, wilson = 1;
  int order = 2;
  std::vector<double> w_boundary{1.0, 2.0};
  double coupling = 0.5;
  std::vector<double> phases_left{0.48, 0.24};
  std::vector<double> phases_right{-0.48, -0.24};
  std::vector<int> winding{1, 0};  // 2 pi multiples added across the interior
};
struct BIntervalModel {
  BIntervalSpec spec;
  BDiracOperator D;
  std::vector<CMat> g_sites;    // per lattice site, 2k x 2k
  std::vector<CMat> g_samples;  // per geometry sample
  CMat g_left, g_right;         // end values
};
BIntervalSpec b_interval_spec(const Config& cfg, const std::string& prefix);
BIntervalModel b_interval_model(const BIntervalSpec& spec);
CMat b_twist(const BIntervalSpec& spec, double x);

void run_experiment(const std::string& experiment, const Config& cfg, Report& report);

void run_circle(const Config& cfg, Report& report);
void run_b_interval(const Config& cfg, Report& report);
void run_matrix_lemmas(const Config& cfg, Report& report);
void run_stokes(const Config& cfg, Report& report);

}  // namespace speclab::lab

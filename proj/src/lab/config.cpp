#include <algorithm>
#include <cctype>
#include <fstream>
#include <sstream>

#include "speclab/lab.hpp"

namespace speclab::lab {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

double to_double(const std::string& key, const std::string& v) {
  try {
    std::size_t used = 0;
    const double d = std::stod(v, &used);
    if (used != v.size()) throw std::invalid_argument(v);
    return d;
  } catch (const std::exception&) {
    throw ConfigError("config: key '" + key + "' expects a number, got '" + v + "'");
  }
}

int to_int(const std::string& key, const std::string& v) {
  try {
    std::size_t used = 0;
    const long long d = std::stoll(v, &used);
    if (used != v.size()) throw std::invalid_argument(v);
    return static_cast<int>(d);
  } catch (const std::exception&) {
    throw ConfigError("config: key '" + key + "' expects an integer, got '" + v + "'");
  }
}

std::string fmt(double v) {
  std::ostringstream os;
  os.precision(17);
  os << v;
  return os.str();
}

// Name-to-field table for policy.* keys.
struct PolicyField {
  const char* name;
  double NumericPolicy::* d = nullptr;
  int NumericPolicy::* i = nullptr;
};

const std::vector<PolicyField>& policy_fields() {
  static const std::vector<PolicyField> f = {
      {"hermitian_tol", &NumericPolicy::hermitian_tol},
      {"reconstruction_tol", &NumericPolicy::reconstruction_tol},
      {"unitarity_tol", &NumericPolicy::unitarity_tol},
      {"gap_tol", &NumericPolicy::gap_tol},
      {"kernel_rel_tol", &NumericPolicy::kernel_rel_tol},
      {"match_min_overlap", &NumericPolicy::match_min_overlap},
      {"max_refine_depth", nullptr, &NumericPolicy::max_refine_depth},
      {"remainder_tol", &NumericPolicy::remainder_tol},
      {"dd_cluster_rel", &NumericPolicy::dd_cluster_rel},
      {"dd_taylor_order", nullptr, &NumericPolicy::dd_taylor_order},
      {"prune_rel", &NumericPolicy::prune_rel},
      {"quad_rel_tol", &NumericPolicy::quad_rel_tol},
      {"lambda_tail", &NumericPolicy::lambda_tail},
      {"eta_gap_tmax_product", &NumericPolicy::eta_gap_tmax_product},
  };
  return f;
}

void merge(Config::Schema& into, const Config::Schema& from) {
  for (const auto& [k, v] : from) into[k] = v;
}

Config::Schema b_model_keys(const std::string& p, double L, double h, double padding) {
  return {
      {p + ".x_lo", "-5"},
      {p + ".x_hi", "5"},
      {p + ".L", fmt(L)},
      {p + ".h", fmt(h)},
      {p + ".padding", fmt(padding)},
      {p + ".wilson", "1"},
      {p + ".order", "2"},
      {p + ".w_boundary", "1,2"},
      {p + ".coupling", "0.5"},
      {p + ".phases_left", "0.48,0.24"},
      {p + ".phases_right", "-0.48,-0.24"},
      {p + ".winding", "1,0"},
  };
}

}  // namespace

Config Config::parse(const std::string& text, const std::string& origin) {
  Config c;
  c.origin_ = origin;
  std::stringstream ss(text);
  std::string line;
  int lineno = 0;
  while (std::getline(ss, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError(origin + ":" + std::to_string(lineno) + ": expected 'key = value'");
    const std::string key = trim(line.substr(0, eq)), value = trim(line.substr(eq + 1));
    if (key.empty()) throw ConfigError(origin + ":" + std::to_string(lineno) + ": empty key");
    if (c.values_.count(key)) throw ConfigError(origin + ":" + std::to_string(lineno) + ": duplicate key '" + key + "'");
    c.values_[key] = value;
  }
  return c;
}

Config Config::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("config: cannot open '" + path + "'");
  std::stringstream buf;
  buf << in.rdbuf();
  return parse(buf.str(), path);
}

void Config::apply_override(const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos) throw ConfigError("override '" + assignment + "' is not key=value");
  const std::string key = trim(assignment.substr(0, eq));
  if (key.empty()) throw ConfigError("override '" + assignment + "' has an empty key");
  values_[key] = trim(assignment.substr(eq + 1));
}

std::string Config::experiment() const {
  const auto it = values_.find("experiment");
  return it == values_.end() ? "" : it->second;
}

void Config::resolve(const Schema& schema) {
  for (const auto& [k, v] : values_)
    if (!schema.count(k)) throw ConfigError("config: unknown key '" + k + "' (" + origin_ + ")");
  for (const auto& [k, v] : schema)
    if (!values_.count(k)) values_[k] = v;
}

const std::string& Config::raw(const std::string& key) const {
  const auto it = values_.find(key);
  if (it == values_.end()) throw ConfigError("config: key '" + key + "' is not set");
  return it->second;
}

std::string Config::str(const std::string& key) const { return raw(key); }
double Config::num(const std::string& key) const { return to_double(key, raw(key)); }
int Config::integer(const std::string& key) const { return to_int(key, raw(key)); }

bool Config::flag(const std::string& key) const {
  std::string v = raw(key);
  std::transform(v.begin(), v.end(), v.begin(), [](unsigned char c) { return std::tolower(c); });
  if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
  if (v == "false" || v == "0" || v == "no" || v == "off") return false;
  throw ConfigError("config: key '" + key + "' expects a boolean, got '" + raw(key) + "'");
}

std::vector<double> Config::nums(const std::string& key) const {
  std::vector<double> out;
  for (const auto& s : split_list(raw(key))) out.push_back(to_double(key, s));
  return out;
}

std::vector<int> Config::integers(const std::string& key) const {
  std::vector<int> out;
  for (const auto& s : split_list(raw(key))) out.push_back(to_int(key, s));
  return out;
}

NumericPolicy Config::policy() const {
  NumericPolicy p = default_policy();
  for (const PolicyField& f : policy_fields()) {
    const std::string key = std::string("policy.") + f.name;
    if (!has(key)) continue;
    if (f.d) {
      const double v = num(key);
      if (!(v > 0)) throw ConfigError("config: tolerance '" + key + "' must be positive");
      p.*(f.d) = v;
    } else {
      const int v = integer(key);
      if (v <= 0) throw ConfigError("config: '" + key + "' must be positive");
      p.*(f.i) = v;
    }
  }
  return p;
}

Config::Schema common_schema() {
  Config::Schema s{{"experiment", ""}, {"seed", "0"}};
  const NumericPolicy& d = default_policy();
  for (const PolicyField& f : policy_fields())
    s[std::string("policy.") + f.name] = f.d ? fmt(d.*(f.d)) : std::to_string(d.*(f.i));
  return s;
}

Config::Schema schema_for(const std::string& experiment) {
  Config::Schema s = common_schema();
  if (experiment == "circle") {
    merge(s, {
                 {"circle.windings", "1,2,3"},
                 {"circle.cutoff", "64"},
                 {"circle.lambda0", "0.5"},
                 {"circle.endpoint", "nonnegative"},
                 {"circle.getzler_eps", "4"},
                 {"circle.de_rham_samples", "512"},
                 {"circle.t_grid", "0.05,0.1,0.5,1,2,5,20"},
                 {"circle.K", "4"},
                 {"circle.resum_K", "0"},
                 {"circle.resum_t", "20"},
                 {"circle.resum_windings", "1"},
                 {"tol.sf", "0"},
                 {"tol.getzler", "1e-6"},
                 {"tol.de_rham", "1e-8"},
                 {"tol.alpha", "1e-3"},
             });
  } else if (experiment == "b-interval") {
    merge(s, b_model_keys("b", 20, 0.02, 8));
    merge(s, b_model_keys("coarse", 4, 0.25, 4));
    merge(s, {
                 {"b.lambda0", "0.375"},
                 {"b.max_step", "0.05"},
                 {"b.K", "6"},
                 {"b.refine", "true"},
                 {"b.endpoint", "nonnegative"},
                 {"growth.enabled", "true"},
                 {"growth.t", "1"},
                 {"growth.degrees", "1,3,5,7"},
                 {"alpha.enabled", "false"},
                 {"alpha.t_grid", "0.9,1,1.1"},
                 {"alpha.K", "3"},
                 {"alpha.gating", "false"},
                 {"tol.identity", "1e-2"},
                 {"tol.halving_floor", "1e-7"},
                 {"tol.assumption_ratio", "0.5"},
                 {"tol.growth_increase", "0.25"},
                 {"tol.transgression", "1e-3"},
                 {"tol.eta_closed", "1e-6"},
             });
  } else if (experiment == "matrix-lemmas") {
    merge(s, b_model_keys("coarse", 4, 0.25, 4));
    merge(s, {
                 {"lemmas.families", "100"},
                 {"lemmas.dim", "8"},
                 {"lemmas.eps", "0.5"},
                 {"lemmas.du", "1e-4"},
                 {"lemmas.lambda0", "0"},
                 {"lemmas.split_lambda0", "0.3"},
                 {"lemmas.b_family", "true"},
                 {"lemmas.b_eps", "0.5"},
                 {"lemmas.b_u", "0.3"},
                 {"lemmas.b_lambda0", "0"},
                 {"cyclic.chains", "100"},
                 {"cyclic.max_degree", "5"},
                 {"cyclic.points", "3"},
                 {"cyclic.chern_K", "6"},
                 {"mc.instances", "20"},
                 {"mc.samples", "1000000"},
                 {"mc.dim", "6"},
                 {"mc.max_n", "3"},
                 {"mc.t", "0.7"},
                 {"dd.trials", "200"},
                 {"defect.pairs", "10"},
                 {"defect.L", "6"},
                 {"defect.h", "0.25"},
                 {"defect.padding", "6"},
                 {"tol.vareta_median", "1e-8"},
                 {"tol.vareta_max", "1e-6"},
                 {"tol.vareta_b", "1e-3"},
                 {"tol.split", "1e-12"},
                 {"tol.xi", "1e-8"},
                 {"tol.E", "1e-12"},
                 {"tol.cyclic", "1e-12"},
                 {"tol.chern", "1e-10"},
                 {"tol.mc_sigma", "3"},
                 {"tol.dd_perturb", "1e-7"},
                 {"tol.defect", "1e-4"},
                 {"tol.defect_interior", "1e-10"},
             });
  } else if (experiment == "stokes") {
    merge(s, {
                 {"stokes.dim", "4"},
                 {"stokes.t_list", "0.5,1,2"},
                 {"stokes.unitary", "random"},
                 {"stokes.u_sub", "0.5"},
                 {"stokes.rel_tol", "1e-10"},
                 {"tol.stokes", "1e-4"},
                 {"tol.gamma_smax", "1e-8"},
                 {"tol.lemma", "1e-4"},
             });
  } else {
    throw ConfigError("unknown experiment '" + experiment + "' (circle, b-interval, matrix-lemmas, stokes)");
  }
  return s;
}

}  // namespace speclab::lab

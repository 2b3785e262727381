#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "speclab/lab.hpp"

namespace speclab::lab {

namespace {

json finite_or_null(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

std::string csv_number(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace

Report::Report(const std::string& experiment, const Config& cfg) {
  doc_["schema_version"] = kSchemaVersion;
  doc_["experiment"] = experiment;
  json inputs = json::object();
  for (const auto& [k, v] : cfg.values()) inputs[k] = v;
  doc_["inputs"] = inputs;
  doc_["conventions"] = json::object();
  doc_["results"] = json::object();
  doc_["identities"] = json::array();
  doc_["bounds"] = json::array();
  doc_["notes"] = json::array();
}

void Report::identity(const std::string& name, double lhs, double rhs, double tol, bool gating) {
  const double diff = std::abs(lhs - rhs);
  doc_["identities"].push_back({{"name", name},
                                {"lhs", finite_or_null(lhs)},
                                {"rhs", finite_or_null(rhs)},
                                {"difference", finite_or_null(diff)},
                                {"tolerance", tol},
                                {"within", std::isfinite(diff) && diff <= tol},
                                {"gating", gating}});
}

void Report::bound(const std::string& name, double value, double limit, bool gating) {
  doc_["bounds"].push_back({{"name", name},
                            {"value", finite_or_null(value)},
                            {"limit", limit},
                            {"within", std::isfinite(value) && value <= limit},
                            {"gating", gating}});
}

void Report::note(const std::string& text) { doc_["notes"].push_back(text); }

void Report::curve(const std::string& name, const std::vector<double>& t, const std::vector<double>& alpha,
                   const std::vector<double>& tail) {
  auto& rows = curves_[name];
  rows.clear();
  for (std::size_t i = 0; i < t.size(); ++i) rows.push_back({t[i], alpha.at(i), tail.at(i)});
}

bool Report::all_within() const {
  for (const char* list : {"identities", "bounds"})
    for (const auto& e : doc_[list])
      if (e["gating"].get<bool>() && !e["within"].get<bool>()) return false;
  if (doc_.contains("error")) return false;
  return true;
}

void write_atomically(const std::string& path, const std::string& text) {
  const std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write '" + tmp + "'");
    out << text;
    out.flush();
    if (!out) throw std::runtime_error("write failed for '" + tmp + "'");
  }
  std::filesystem::rename(tmp, path);
}

void Report::write(const std::string& dir) const {
  std::filesystem::create_directories(dir);
  const std::string stem = (std::filesystem::path(dir) / doc_["experiment"].get<std::string>()).string();
  json doc = doc_;
  doc["all_within"] = all_within();
  json files = json::array();
  for (const auto& [name, rows] : curves_) {
    const std::string file = stem + "." + name + ".csv";
    std::ostringstream os;
    os << "t,alpha,tail_estimate\n";
    for (const auto& r : rows) os << csv_number(r[0]) << ',' << csv_number(r[1]) << ',' << csv_number(r[2]) << '\n';
    write_atomically(file, os.str());
    files.push_back(std::filesystem::path(file).filename().string());
  }
  doc["curve_files"] = files;
  write_atomically(stem + ".json", doc.dump(2) + "\n");
  json t = json::object();
  for (const auto& [k, v] : timings_) t[k] = v;
  write_atomically(stem + ".timing.json", t.dump(2) + "\n");
}

}  // namespace speclab::lab

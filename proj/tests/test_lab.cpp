#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "speclab/lab.hpp"

using namespace speclab;
using namespace speclab::lab;

namespace {

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p);
  std::stringstream s;
  s << in.rdbuf();
  return s.str();
}

}  // namespace

TEST_CASE("config parsing") {
  Config c = Config::parse("# comment\nexperiment = circle\n circle.cutoff=32  # trailing\n\ncircle.K = 3\n");
  c.resolve(schema_for("circle"));
  CHECK(c.experiment() == "circle");
  CHECK(c.integer("circle.cutoff") == 32);
  CHECK(c.integer("circle.K") == 3);
  CHECK(c.nums("circle.t_grid").size() == 7);
  CHECK(c.integers("circle.windings") == std::vector<int>{1, 2, 3});
  CHECK_THROWS_AS(Config::parse("a = 1\na = 2\n"), ConfigError);
  CHECK_THROWS_AS(Config::parse("no equals sign\n"), ConfigError);
  CHECK_THROWS_AS(c.num("circle.endpoint"), ConfigError);
}

TEST_CASE("config: unknown keys, overrides, booleans, policy") {
  Config bad = Config::parse("experiment = stokes\nstokes.typo = 1\n");
  CHECK_THROWS_AS(bad.resolve(schema_for("stokes")), ConfigError);
  CHECK_THROWS_AS(schema_for("nope"), ConfigError);

  Config c = Config::parse("experiment = b-interval\nb.h = 0.02\n");
  c.apply_override("b.h=0.04");
  c.apply_override("b.refine = off");
  c.resolve(schema_for("b-interval"));
  CHECK(c.num("b.h") == 0.04);
  CHECK_FALSE(c.flag("b.refine"));
  CHECK(c.flag("growth.enabled"));
  c.set("b.refine", "maybe");
  CHECK_THROWS_AS(c.flag("b.refine"), ConfigError);
  CHECK_THROWS_AS(c.apply_override("missing"), ConfigError);

  c.set("policy.gap_tol", "1e-5");
  CHECK(c.policy().gap_tol == 1e-5);
  c.set("policy.gap_tol", "-1");
  CHECK_THROWS_AS(c.policy(), ConfigError);
}

TEST_CASE("report: fields, determinism, curves") {
  Config c = Config::parse("experiment = stokes\n");
  c.resolve(schema_for("stokes"));
  auto build = [&] {
    Report r("stokes", c);
    r.identity("exact", 1.0, 1.0 + 1e-12, 1e-9);
    r.identity("loose", 1.0, 2.0, 1e-3, false);
    r.bound("ratio", 0.4, 0.5);
    r.curve("alpha", {0.1, 0.2}, {1.5, 1.75}, {1e-3, 1e-4});
    r.timing("total", 1.23);
    return r;
  };
  const Report r = build();
  CHECK(r.all_within());
  const auto& d = r.doc();
  CHECK(d["schema_version"] == kSchemaVersion);
  CHECK(d["inputs"]["stokes.dim"] == "4");
  const auto& id = d["identities"][0];
  for (const char* k : {"name", "lhs", "rhs", "difference", "tolerance", "within", "gating"}) CHECK(id.contains(k));
  CHECK_FALSE(d["identities"][1]["within"].get<bool>());

  const auto dir = std::filesystem::temp_directory_path() / "speclab_report_test";
  std::filesystem::remove_all(dir);
  r.write((dir / "a").string());
  build().write((dir / "b").string());
  CHECK(slurp(dir / "a" / "stokes.json") == slurp(dir / "b" / "stokes.json"));
  const std::string csv = slurp(dir / "a" / "stokes.alpha.csv");
  CHECK(csv.rfind("t,alpha,tail_estimate\n", 0) == 0);
  const json parsed = json::parse(slurp(dir / "a" / "stokes.json"));
  CHECK(parsed["all_within"].get<bool>());
  CHECK(parsed["curve_files"][0] == "stokes.alpha.csv");
  CHECK(json::parse(slurp(dir / "a" / "stokes.timing.json"))["total"] == 1.23);

  Report failing("stokes", c);
  failing.bound("nan", std::nan(""), 1.0);
  CHECK_FALSE(failing.all_within());
  CHECK(failing.doc()["bounds"][0]["value"].is_null());
  std::filesystem::remove_all(dir);
}

TEST_CASE("circle model and its aliasing guard") {
  const CircleModel m = circle_model(16, 2);
  CHECK(m.D.rows() == 33);
  CHECK(std::abs(m.D1(0, 0) - cd(-14.0)) < 1e-15);
  CHECK(std::abs(m.shift(2, 0) - cd(1.0)) < 1e-15);
  CHECK_THROWS_AS(circle_model(7, 2), ConfigError);
}

TEST_CASE("b-interval twist has the configured end values") {
  const BIntervalSpec s;
  const CMat gl = b_twist(s, s.x_lo - 1), gr = b_twist(s, s.x_hi + 1);
  CHECK((gl.adjoint() * gl - CMat::Identity(4, 4)).norm() < 1e-14);
  const CMat Pp = 0.5 * (pauli(0) + pauli(1));
  const cd left = (kron(Pp, CMat::Identity(2, 2)) * gl).trace();
  CHECK(std::abs(left - (std::polar(1.0, 0.48) + std::polar(1.0, 0.24))) < 1e-14);
  const cd right = (kron(Pp, CMat::Identity(2, 2)) * gr).trace();
  CHECK(std::abs(right - (std::polar(1.0, -0.48) + std::polar(1.0, -0.24))) < 1e-12);
}

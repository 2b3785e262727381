#include <cstdio>
#include <iostream>

#include <CLI11.hpp>

#include "speclab/lab.hpp"

using namespace speclab::lab;

int main(int argc, char** argv) {
  CLI::App app{"Run one spectral-flow experiment and write its report"};
  std::string experiment, config_path, out_dir = "out";
  long long seed = 0;
  bool seed_given = false;
  std::vector<std::string> overrides;
  app.add_option("experiment", experiment, "circle | b-interval | matrix-lemmas | stokes")->required();
  app.add_option("--config", config_path, "experiment config (key = value)")->required();
  app.add_option("--out", out_dir, "report directory");
  app.add_option("--seed", seed, "overrides the config seed")->each([&](const std::string&) { seed_given = true; });
  app.add_option("--override", overrides, "key=value, repeatable")->take_all();
  CLI11_PARSE(app, argc, argv);

  try {
    Config cfg = Config::load(config_path);
    for (const auto& o : overrides) cfg.apply_override(o);
    if (seed_given) cfg.set("seed", std::to_string(seed));
    if (!cfg.experiment().empty() && cfg.experiment() != experiment)
      throw ConfigError("config is for experiment '" + cfg.experiment() + "', not '" + experiment + "'");
    cfg.set("experiment", experiment);
    cfg.resolve(schema_for(experiment));
    Report rep(experiment, cfg);
    run_experiment(experiment, cfg, rep);
    rep.write(out_dir);
    int failed = 0;
    for (const char* list : {"identities", "bounds"})
      for (const auto& e : rep.doc()[list])
        if (e["gating"].get<bool>() && !e["within"].get<bool>()) {
          ++failed;
          std::cerr << "out of tolerance: " << e["name"].get<std::string>() << "\n";
        }
    std::printf("%s: %s (%d gating checks out of tolerance), report in %s\n", experiment.c_str(),
                rep.all_within() ? "within tolerance" : "OUT OF TOLERANCE", failed, out_dir.c_str());
    return rep.all_within() ? 0 : 1;
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  }
}

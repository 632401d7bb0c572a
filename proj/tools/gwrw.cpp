#include <cstdio>
#include <iostream>

#include <CLI11.hpp>

#include <gwrw/harness.hpp>

int main(int argc, char** argv) {
  CLI::App app{"Biased random walk on supercritical Galton-Watson trees: experiment runner"};
  std::string config, experiment, out;
  std::uint64_t seed = 0;
  std::size_t replicas = 0;
  unsigned workers = 0;
  bool list = false;
  app.add_option("config", config, "TOML configuration file")->check(CLI::ExistingFile);
  auto* exp_opt = app.add_option("--experiment,-e", experiment, "Experiment to run (overrides [run].experiment)");
  auto* seed_opt = app.add_option("--seed", seed, "Master seed");
  auto* rep_opt = app.add_option("--replicas", replicas, "Replica count of the experiment's main loop");
  auto* work_opt = app.add_option("--workers", workers, "Worker threads (default: GWRW_WORKERS or all cores)");
  app.add_option("--out", out, "Output prefix; writes PREFIX.csv and PREFIX.json");
  app.add_flag("--list", list, "List experiment names and exit");
  CLI11_PARSE(app, argc, argv);

  if (list) {
    for (const auto& n : gwrw::harness::experiment_names()) std::cout << n << "\n";
    return 0;
  }
  if (config.empty()) {
    std::cerr << "error: a configuration file is required\n";
    return 1;
  }
  try {
    auto c = gwrw::harness::load_config(config);
    if (*exp_opt) c.experiment = experiment;
    if (*seed_opt) c.seed = seed;
    if (*work_opt) c.workers = workers;
    if (*rep_opt) gwrw::harness::set_replicas(c, c.experiment, replicas);
    if (!out.empty()) c.out = out;
    if (c.out.empty()) c.out = c.experiment;

    const auto t = gwrw::harness::run_experiment(c);
    gwrw::harness::write_outputs(t, c.out);
    for (const auto& ch : t.checks)
      std::cout << (ch.pass ? "PASS " : "FAIL ") << t.suite << "/" << ch.name << ": " << ch.detail << "\n";
    std::cout << "wrote " << c.out << ".csv and " << c.out << ".json\n";
    return t.all_pass() ? 0 : 2;
  } catch (const gwrw::Error& e) {
    std::cerr << "error [" << gwrw::to_string(e.code()) << "]: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}

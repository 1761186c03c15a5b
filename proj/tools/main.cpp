#include <iostream>

#include <CLI11.hpp>

#include "mimiclab/commands.hpp"

using namespace mimiclab;

int main(int argc, char** argv) {
  CLI::App app{"mimiclab: desk-scale motion-imitation training infrastructure"};
  app.require_subcommand(1);

  std::string config_path, out_dir, fit_log;
  long long seed = -1;
  int streams = -1;
  app.add_option("--config", config_path, "experiment config JSON")->type_name("PATH");
  app.add_option("--seed", seed, "override the config seed")->type_name("N");
  app.add_option("--out", out_dir, "override the output directory")->type_name("DIR");
  app.add_option("--streams", streams, "override the parallel stream count")->type_name("N");

  CLI::App* eval_pla = app.add_subcommand("eval-pla", "model-ladder MSE table");
  CLI::App* polytope = app.add_subcommand("torque-polytope", "ankle polytope sweep");
  CLI::App* demo = app.add_subcommand("sampler-demo", "adaptive sampler time series");
  CLI::App* rollout = app.add_subcommand("rollout", "scripted-policy episodes");
  CLI::App* fit_spot = app.add_subcommand("fit-spot", "actuator efficiency fit");
  fit_spot->add_option("log", fit_log, "actuator log CSV")->type_name("PATH");
  CLI::App* gen_ref = app.add_subcommand("gen-reference", "self-consistent reference");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 2;
  }

  try {
    ExperimentConfig cfg = config_path.empty() ? ExperimentConfig{} : load_config(config_path);
    if (seed >= 0) cfg.seed = static_cast<unsigned long long>(seed);
    if (!out_dir.empty()) cfg.out_dir = out_dir;
    if (streams > 0) cfg.streams = streams;
    cfg.validate();

    if (eval_pla->parsed()) cmd_eval_pla(cfg);
    if (polytope->parsed()) cmd_torque_polytope(cfg);
    if (demo->parsed()) cmd_sampler_demo(cfg);
    if (rollout->parsed()) cmd_rollout(cfg);
    if (fit_spot->parsed()) cmd_fit_spot(cfg, fit_log);
    if (gen_ref->parsed()) cmd_gen_reference(cfg);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const NumericalError& e) {
    std::cerr << "numerical failure: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  }
  return 0;
}

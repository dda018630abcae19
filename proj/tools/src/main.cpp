#include <cstdlib>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "mlml/csv.hpp"
#include "mlml_cli/commands.hpp"
#include "mlml_cli/config.hpp"

namespace {

int run(int argc, char** argv) {
  CLI::App app{"Multilevel surrogate training for the projectile benchmark"};
  app.require_subcommand(1);
  std::string config_path;
  std::string output;
  app.add_option("-c,--config", config_path, "YAML experiment configuration")->required();
  app.add_option("-o,--output", output, "override output_dir");

  auto* gen = app.add_subcommand("gen-data", "evaluate the training pool and the test set on every level");
  auto* sl = app.add_subcommand("train-sl", "train a single-level surrogate of the finest map");
  std::size_t sl_samples = 64;
  sl->add_option("-n,--samples", sl_samples, "training samples")->check(CLI::PositiveNumber);
  auto* ml = app.add_subcommand("train-ml", "train one multilevel surrogate");
  std::string sequence = "0,3,6";
  std::size_t coarse = 2048;
  std::size_t fine = 32;
  ml->add_option("-s,--sequence", sequence, "comma separated ladder indices");
  ml->add_option("--coarse", coarse, "samples for the base surrogate")->check(CLI::PositiveNumber);
  ml->add_option("--fine", fine, "samples for the finest detail")->check(CLI::PositiveNumber);
  auto* sweep = app.add_subcommand("sweep", "multilevel vs single-level error over the configured grid");
  auto* uq = app.add_subcommand("uq", "push-forward measures and Wasserstein errors");
  auto* bound = app.add_subcommand("bound-study", "generalization error vs bound over training set sizes");
  bool full = false;
  bound->add_flag("--full-fidelity", full, "use the full repetition counts");
  auto* check = app.add_subcommand("validate-config", "parse and validate the configuration only");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }

  mlml::cli::ExperimentConfig cfg = mlml::cli::load_config(config_path);
  if (!output.empty()) cfg.output_dir = output;
  if (const char* w = std::getenv("MLML_WORKERS")) cfg.workers = std::stoul(w);
  if (full) cfg.bound_study.full_fidelity = true;

  auto& log = std::cout;
  if (check->parsed()) {
    log << config_path << ": ok (schema " << cfg.schema_version << ", data fingerprint "
        << mlml::cli::data_fingerprint(cfg) << ")\n";
  } else if (gen->parsed()) {
    mlml::cli::cmd_gen_data(cfg, log);
  } else if (sl->parsed()) {
    mlml::cli::cmd_train_sl(cfg, sl_samples, log);
  } else if (ml->parsed()) {
    mlml::cli::cmd_train_ml(cfg, mlml::cli::parse_sequence(sequence), coarse, fine, log);
  } else if (sweep->parsed()) {
    mlml::cli::cmd_sweep(cfg, log);
  } else if (uq->parsed()) {
    mlml::cli::cmd_uq(cfg, log);
  } else if (bound->parsed()) {
    mlml::cli::cmd_bound_study(cfg, log);
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  try {
    return run(argc, argv);
  } catch (const mlml::cli::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return 2;
  } catch (const mlml::DataError& e) {
    std::cerr << "data error: " << e.what() << '\n';
    return 3;
  } catch (const std::invalid_argument& e) {
    std::cerr << "invalid argument: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
}

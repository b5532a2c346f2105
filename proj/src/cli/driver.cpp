#include <iostream>

#include <CLI11.hpp>

#include "nljc/cli.hpp"
#include "nljc/errors.hpp"

namespace nljc {

int run_cli(int argc, const char* const* argv) {
  CLI::App app{"Nonclassical motion of a trapped ion driven by a quantized pump"};
  app.require_subcommand(1);
  app.fallthrough();

  std::string config_path, out_dir, seed, method, shots;
  app.add_option("--config", config_path, "config file (section.key = value)");
  app.add_option("--out", out_dir, "output directory (overrides output.directory)");
  app.add_option("--seed", seed, "random seed (overrides run.seed)");
  app.add_option("--method", method, "series|integral (overrides pfunc.method)");
  app.add_option("--shots", shots, "int|ideal (overrides measurement.shots)");

  auto* criteria = app.add_subcommand("criteria", "nonclassicality criteria along a time scan");
  auto* pfunc = app.add_subcommand("pfunc", "regularized P function on a phase-space grid");
  auto* measure = app.add_subcommand("measure", "simulated probe-cycle reconstruction");
  auto* oracle = app.add_subcommand("oracle-check", "analytic dynamics vs brute-force propagation");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    RunConfig config = config_path.empty() ? RunConfig{} : parse_config_file(config_path);
    if (!out_dir.empty()) apply_setting(config, "output.directory", out_dir);
    if (!seed.empty()) apply_setting(config, "run.seed", seed);
    if (!method.empty()) apply_setting(config, "pfunc.method", method);
    if (!shots.empty()) apply_setting(config, "measurement.shots", shots);
    config.validate();
    config.model_params().validate();

    if (criteria->parsed()) return cmd_criteria(config);
    if (pfunc->parsed()) return cmd_pfunc(config);
    if (measure->parsed()) return cmd_measure(config);
    if (oracle->parsed()) return cmd_oracle_check(config);
    return 2;
  } catch (const ConfigError& e) {
    std::cerr << "config error [" << e.key() << "]: " << e.what() << "\n";
    return 2;
  } catch (const std::invalid_argument& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const IllConditionedDesign& e) {
    std::cerr << "ill-conditioned design (condition number " << e.condition_number()
              << "): " << e.what() << "\n";
    return 3;
  } catch (const TruncationError& e) {
    std::cerr << "truncation error: " << e.what() << "\n";
    return 4;
  } catch (const DomainError& e) {
    std::cerr << "domain error: " << e.what() << "\n";
    return 4;
  } catch (const StencilOutOfDomain& e) {
    std::cerr << "domain error: " << e.what() << "\n";
    return 4;
  } catch (const UndefinedForVacuum& e) {
    std::cerr << "domain error: " << e.what() << "\n";
    return 4;
  }
}

}  // namespace nljc

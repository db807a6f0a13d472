// Batch driver: rankrobust <train|attack|thickness|eval|report|sweep|run> ...
//
// Exit codes: 0 success, 2 config error, 3 numerical failure, 4 missing artifact.

#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "rankrobust/cli/pipeline.hpp"

using namespace rankrobust;

namespace {

int fail(int code, const char* kind, const std::exception& e) {
  std::cerr << "rankrobust: " << kind << ": " << e.what() << '\n';
  return code;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Ranking-robust explanations: train, attack, measure and report"};
  app.require_subcommand(0, 1);
  bool print_schema = false;
  app.add_flag("--print-schema", print_schema, "print the config schema with defaults and exit");

  std::string config_path, output, run_dir;
  std::size_t jobs = 1;
  auto with_config = [&](CLI::App* sub) {
    sub->add_option("-c,--config", config_path, "experiment config (JSON)")->required();
    sub->add_option("-o,--output", output, std::string("run directory, overrides $") + kOutputRootEnv);
    sub->add_option("-j,--jobs", jobs, "worker threads; results do not depend on it")->check(CLI::PositiveNumber);
  };
  CLI::App* train = app.add_subcommand("train", "train every method and write checkpoints");
  CLI::App* attack = app.add_subcommand("attack", "attack every checkpoint on the test split");
  CLI::App* thick = app.add_subcommand("thickness", "per-sample top-k thickness and Hessian norms");
  CLI::App* eval = app.add_subcommand("eval", "accuracy, faithfulness and robustness metrics");
  CLI::App* sweep = app.add_subcommand("sweep", "retrain over the lambda and kappa grids");
  CLI::App* run = app.add_subcommand("run", "train, attack, thickness, eval and report");
  for (CLI::App* sub : {train, attack, thick, eval, sweep, run}) with_config(sub);
  CLI::App* report = app.add_subcommand("report", "render Markdown and CSV tables of a finished run");
  report->add_option("run_dir", run_dir, "run directory")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    if (print_schema) {
      std::cout << config_schema().dump(2) << '\n';
      return 0;
    }
    if (report->parsed()) {
      cmd_report(run_dir);
      return 0;
    }
    CLI::App* chosen = nullptr;
    for (CLI::App* sub : {train, attack, thick, eval, sweep, run})
      if (sub->parsed()) chosen = sub;
    if (!chosen) {
      std::cerr << app.help();
      return 2;
    }
    const RunContext ctx = make_context(load_config(config_path), jobs, output);
    if (chosen == train) cmd_train(ctx);
    else if (chosen == attack) cmd_attack(ctx);
    else if (chosen == thick) cmd_thickness(ctx);
    else if (chosen == eval) cmd_eval(ctx);
    else if (chosen == sweep) cmd_sweep(ctx);
    else cmd_run(ctx);
    std::cout << "wrote " << ctx.out.string() << '\n';
  } catch (const ConfigError& e) {
    return fail(2, "config error", e);
  } catch (const std::invalid_argument& e) {
    return fail(2, "config error", e);
  } catch (const NumericalError& e) {
    return fail(3, "numerical failure", e);
  } catch (const MissingArtifact& e) {
    return fail(4, "missing artifact", e);
  } catch (const std::exception& e) {
    return fail(1, "error", e);
  }
  return 0;
}

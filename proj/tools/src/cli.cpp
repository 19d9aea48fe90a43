#include "cli.hpp"

#include <iostream>

#include <CLI11.hpp>

#include "pipeline.hpp"
#include "rdfluct/csv.hpp"
#include "rdfluct/fluctuation.hpp"
#include "rdfluct/meanfield.hpp"

namespace rdfluct::tools {

int run_cli(const std::vector<std::string>& args) {
  CLI::App app{"Particle, mean-field and fluctuation simulations of A + B <-> C on a periodic interval"};
  app.require_subcommand(1);

  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> workers;
  std::string out_dir;
  std::string python = "python3";
  bool quiet = false;

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", config_path, "INI configuration file")->required();
    sub->add_option("--seed", seed, "override [ensemble] master_seed");
    sub->add_option("--workers", workers, "override [ensemble] workers")->check(CLI::PositiveNumber);
    sub->add_option("--out", out_dir, "override [output] directory");
    sub->add_flag("--quiet", quiet, "suppress progress messages");
  };
  auto* crdme = app.add_subcommand("simulate-crdme", "run the CRDME ensemble for every configured gamma");
  auto* meanfield = app.add_subcommand("solve-meanfield", "integrate the mean-field equations");
  auto* fluct = app.add_subcommand("solve-fluctuation", "sample the linearized fluctuation ensemble");
  auto* compare = app.add_subcommand("compare", "compute scaled variances, gaps, histograms and rates");
  auto* report = app.add_subcommand("report", "render figures with the configured script");
  for (auto* sub : {crdme, meanfield, fluct, compare, report}) add_common(sub);
  report->add_option("--python", python, "interpreter used for the figure script");

  std::vector<std::string> argv_rev(args.rbegin(), args.rend());
  try {
    app.parse(argv_rev);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kUsage;
  }

  StageContext ctx;
  try {
    ctx.config = load_config(config_path);
    if (seed) ctx.config.ensemble.master_seed = *seed;
    if (workers) ctx.config.ensemble.workers = *workers;
    if (!out_dir.empty()) ctx.config.output.directory = out_dir;
    ctx.config.validate();
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kConfigInvalid;
  }
  ctx.out = ctx.config.output.directory;
  ctx.build_id = build_id();
  ctx.quiet = quiet;

  try {
    if (*crdme) run_crdme(ctx);
    if (*meanfield) run_meanfield(ctx);
    if (*fluct) run_fluctuation(ctx);
    if (*compare) run_compare(ctx);
    if (*report) return run_report(ctx, python);
  } catch (const MissingArtifact& e) {
    std::cerr << "missing input: " << e.what() << "\n";
    return kMissingArtifact;
  } catch (const CsvError& e) {
    std::cerr << "unreadable input: " << e.what() << "\n";
    return kMissingArtifact;
  } catch (const NumericalInstability& e) {
    std::cerr << "numerical instability: " << e.what() << "\n";
    return kInstability;
  } catch (const FactorizationError& e) {
    std::cerr << "numerical instability: " << e.what() << "\n";
    return kInstability;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kUsage;
  }
  return kOk;
}

}  // namespace rdfluct::tools

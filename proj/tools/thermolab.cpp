#include <iostream>

#include <CLI11.hpp>

#include "thermolab/cli/cli.hpp"

int main(int argc, char** argv) {
  namespace tc = thermolab::cli;
  CLI::App app{"Transfer-operator laboratory: spectral data, conformal measures, "
               "specification kernels, Curie-Weiss, FCLT and Dyson experiments"};
  app.require_subcommand(1);

  tc::CliOptions opts;
  std::uint64_t seed = 0;
  std::string out;
  std::size_t threads = 0;
  for (const auto& name : tc::subcommand_names()) {
    auto* sub = app.add_subcommand(name);
    sub->add_option("--config", opts.config_path, "experiment file (TOML)");
    sub->add_option("--seed", seed, "master seed (overrides run.seed)");
    sub->add_option("--out", out, "output directory (default run.out, $THERMOLAB_OUT, .)");
    sub->add_option("--threads", threads, "worker threads (overrides run.threads)");
    sub->add_option("--set", opts.overrides, "dotted-path override key=value (repeatable)")
        ->take_all();
  }
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : tc::kInput;
  }
  const std::string name = app.get_subcommands().front()->get_name();
  const auto* sub = app.get_subcommand(name);
  if (sub->count("--seed")) opts.seed = seed;
  if (sub->count("--out")) opts.out = out;
  if (sub->count("--threads")) opts.threads = threads;
  return tc::run_subcommand(name, opts, std::cout, std::cerr);
}

#pragma once

// Subcommand runner behind the thermolab executable. Each subcommand writes
// <name>.json (resolved config, results, assertions) plus its CSV tables into
// the output directory.
//
// Exit codes: 0 all assertions pass, 1 an assertion failed, 2 bad config or
// input, 3 capacity or convergence failure.

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace thermolab::cli {

enum ExitCode : int { kPass = 0, kAssertion = 1, kInput = 2, kRuntime = 3 };

struct CliOptions {
  std::string config_path;             // empty = defaults only
  std::vector<std::string> overrides;  // key=value, applied in order
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out;
  std::optional<std::size_t> threads;
};

const std::vector<std::string>& subcommand_names();

/// Output directory: --out, then run.out, then $THERMOLAB_OUT, then ".".
std::string resolve_out_dir(const std::optional<std::string>& flag, const std::string& configured);

int run_subcommand(const std::string& name, const CliOptions& opts, std::ostream& log,
                   std::ostream& err);

}  // namespace thermolab::cli

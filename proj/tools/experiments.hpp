#pragma once

#include <memory>
#include <string>

#include "config.hpp"

namespace fqk::cli {

struct ValidateOnly {};

struct Context {
  RunConfig cfg;
  Section params;
  bool validate_only = false;
  bool bench = false;
  std::unique_ptr<OutputSet> out;

  Context(RunConfig c, bool validate_only, bool bench);
  /// Closes parameter parsing (unknown keys are rejected here) and opens the
  /// output directory. Throws ValidateOnly in validate mode.
  OutputSet& begin();
};

/// Runs cfg.experiment; returns a short summary for stdout.
nlohmann::json run_experiment(Context& ctx);

/// Timing of quasiphase points per numerator; shared by `bench` and solver-bench.
nlohmann::json run_bench(Context& ctx);

}  // namespace fqk::cli

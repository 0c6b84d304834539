#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "optocool/config.hpp"
#include "optocool/io.hpp"

namespace optocool::cli {

/// Column names of the limits table, in output order.
const std::vector<std::string>& limits_columns();

/// One limits-table row. Quantities undefined at `rp` (wrong regime,
/// outside a formula's domain) are NaN; `stable` is 1 or 0.
std::vector<double> limits_row(const ReducedParams& rp);

struct RunOutput {
  io::Table table;
  std::vector<std::string> warnings;
};

/// Runs one mode to an in-memory table. Engine errors propagate.
RunOutput run(const RunConfig& cfg);

/// Cartesian-product sweep, axis 1 outermost. Points run on `threads`
/// workers (0: hardware concurrency); row order never depends on scheduling.
/// With no axes this is exactly the limits run.
RunOutput run_sweep(const RunConfig& cfg, unsigned threads = 0);

/// Full command-line entry point; returns the process exit code.
int main(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace optocool::cli

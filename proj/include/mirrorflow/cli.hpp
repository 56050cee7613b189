#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "mirrorflow/losses.hpp"
#include "mirrorflow/reparam.hpp"

namespace mirrorflow::cli {

enum ExitCode : int { kOk = 0, kNumerical = 1, kConfig = 2, kTolerance = 3 };

/// Comma-separated floats or "rand:<dim>:<seed>" (uniform on [0, 1)).
Vector parse_vector_spec(const std::string& spec);

struct ParsedLoss {
  Loss loss;
  /// Dimension implied by the spec; 1 for scalar specs that broadcast.
  Index dim = 0;
};

/// "linear:<spec>", "quadratic:<spec>" (1/2 ||w - a||^2), "lsq:<instance file>".
/// A length-1 spec broadcasts to `dim` when dim > 1.
ParsedLoss parse_loss(const std::string& spec, Index dim = 0);

struct CheckEntry {
  std::string name;
  ConditionReport report;
};

/// Condition checks for the given triples at `samples` random points each.
std::vector<CheckEntry> run_checks(const std::vector<Triple>& triples, Index dim, int samples,
                                   std::uint64_t seed);

/// Writes `content` to a sibling temporary file and renames it over `path`.
void write_file_atomic(const std::string& path, const std::string& content);

/// Entry point shared by the executable and the tests.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace mirrorflow::cli

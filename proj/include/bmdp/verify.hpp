#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace bmdp {

struct CriterionResult {
  std::string id;
  bool pass = false;
  std::string detail;
  double seconds = 0.0;
};

// Fast property checks on shipped fixtures (constructor invariants including a
// deliberately corrupted one, support disjointness, determinism, mixture
// frequencies, ERM optimality, predictor ranges, truncation facts at small scale).
std::vector<CriterionResult> run_invariant_suite(std::uint64_t seed);

// The acceptance criteria AC-1 .. AC-8, at their stated tolerances and budgets.
std::vector<CriterionResult> run_acceptance_suite(std::uint64_t seed);

// Prints one pass/fail line per criterion; returns the number of failures.
int print_results(const std::vector<CriterionResult>& results);

}  // namespace bmdp

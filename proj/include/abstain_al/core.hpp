#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "abstain_al/criteria.hpp"
#include "abstain_al/types.hpp"

namespace abstain_al {

struct QueryRecord {
  int iteration = 0;  ///< 1-based
  Index example = 0;
  Feedback feedback;
  double test_accuracy = 0.0;
};

struct RunTrace {
  std::vector<QueryRecord> records;
  std::uint64_t seed = 0;
  std::string policy;
  std::string scenario;
  int budget = 0;

  std::vector<double> accuracies() const;
  Index abstained_count() const;
};

struct RunResult {
  RunTrace trace;
  std::unique_ptr<Belief> belief;
};

/// Fraction of `test_set` whose pmf argmax (lowest label on ties) matches the
/// true label. Redundant test examples are skipped; NaN when none remain.
double evaluate_accuracy(const Belief& belief, const Dataset& test_set);

/// Runs `budget` sequential queries against `labeler`.
///
/// Each iteration selects from the not-yet-queried pool, queries once, routes
/// the feedback into the belief (label + non-abstention, or abstention only),
/// drops the example from the candidates and records test accuracy. Abstained
/// queries consume budget like labeled ones. `prior` is cloned; the final
/// posterior is returned alongside the trace.
RunResult run_active_learning(const Policy& policy, const SimulatedLabeler& labeler,
                              const Dataset& pool, int budget, const Belief& prior,
                              const Dataset& test_set, std::uint64_t rng_seed,
                              std::string scenario = {});

}  // namespace abstain_al

#include "abstain_al/core.hpp"

#include <algorithm>
#include <limits>
#include <random>

namespace abstain_al {

std::vector<double> RunTrace::accuracies() const {
  std::vector<double> acc;
  acc.reserve(records.size());
  for (const QueryRecord& r : records) acc.push_back(r.test_accuracy);
  return acc;
}

Index RunTrace::abstained_count() const {
  return std::count_if(records.begin(), records.end(),
                       [](const QueryRecord& r) { return r.feedback.abstained(); });
}

double evaluate_accuracy(const Belief& belief, const Dataset& test_set) {
  Index correct = 0;
  Index total = 0;
  for (const Example& ex : test_set.examples()) {
    if (ex.redundant()) continue;
    const Eigen::VectorXd pmf = belief.predictive_pmf(ex);
    Index arg = 0;
    for (Index y = 1; y < pmf.size(); ++y) {
      if (pmf[y] > pmf[arg]) arg = y;
    }
    if (static_cast<Label>(arg + 1) == ex.true_label) ++correct;
    ++total;
  }
  if (total == 0) return std::numeric_limits<double>::quiet_NaN();
  return static_cast<double>(correct) / static_cast<double>(total);
}

RunResult run_active_learning(const Policy& policy, const SimulatedLabeler& labeler,
                              const Dataset& pool, int budget, const Belief& prior,
                              const Dataset& test_set, std::uint64_t rng_seed,
                              std::string scenario) {
  if (budget < 1) throw Error("bad_input", "budget must be at least 1");
  if (pool.empty()) throw Error("bad_input", "empty pool");
  if (budget > pool.size()) throw Error("budget_exceeds_pool");
  if (labeler.size() != pool.size()) throw Error("bad_input", "labeler does not cover the pool");

  RunResult result;
  result.belief = prior.clone();
  Belief& belief = *result.belief;
  RunTrace& trace = result.trace;
  trace.seed = rng_seed;
  trace.policy = policy.name();
  trace.scenario = std::move(scenario);
  trace.budget = budget;
  trace.records.reserve(static_cast<std::size_t>(budget));

  std::mt19937_64 rng(rng_seed);
  std::vector<Index> candidates(static_cast<std::size_t>(pool.size()));
  for (Index i = 0; i < pool.size(); ++i) candidates[static_cast<std::size_t>(i)] = i;

  for (int i = 0; i < budget; ++i) {
    const Index chosen = select(policy, belief, pool, candidates, rng);
    const Feedback fb = labeler.query(chosen);
    const Example& x = pool[chosen];
    if (fb.abstained()) {
      belief.observe_abstain(x);
    } else {
      belief.observe_label(x, fb.value);
    }
    candidates.erase(std::find(candidates.begin(), candidates.end(), chosen));
    trace.records.push_back(QueryRecord{i + 1, chosen, fb, evaluate_accuracy(belief, test_set)});
  }
  return result;
}

}  // namespace abstain_al

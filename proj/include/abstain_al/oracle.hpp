#pragma once

#include <cstdint>
#include <iosfwd>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "abstain_al/criteria.hpp"
#include "abstain_al/finite_bayes.hpp"

namespace abstain_al {

// Exact small-instance machinery over the induced deterministic spaces:
// labelings f : X -> Y and abstention patterns k : X -> {0, 1}.
//
// A labeling is coded in base l (digit x holds f(x) - 1, example 0 least
// significant); a pattern is a bitmask with bit x set when k(x) = 1.

inline constexpr double kEnumerationLimit = 1e6;
inline constexpr int kMaxOracleBudget = 4;

struct InducedPrior {
  int pool = 0;
  int labels = 0;
  Eigen::VectorXd qf;  ///< weight per labeling
  Eigen::VectorXd qk;  ///< weight per abstention pattern

  Label label_of(Index f, Index x) const;
  bool abstains(Index k, Index x) const { return (k >> x) & 1; }
  /// Feedback the realization (f, k) produces when x is queried.
  Label feedback(Index f, Index k, Index x) const { return abstains(k, x) ? kAbstain : label_of(f, x); }
};

/// q0[f] = sum_h p0[h] prod_x P[h(x) = f(x)]. Throws "instance_too_large" past l^m > 1e6.
Eigen::VectorXd induce_qf(const FiniteBelief& prior);
/// q0[k] = sum_r p0[r] prod_x (1 - r(x))^(1-k(x)) r(x)^k(x).
Eigen::VectorXd induce_qk(const FiniteBelief& prior);
InducedPrior induce(const FiniteBelief& prior);

/// q0[Y = y; S] by summing qf over every labeling that agrees with y on S.
double labeling_marginal(const InducedPrior& induced, std::span<const Index> subset,
                         std::span<const Label> labels);
/// q0[Z = z; S] by summing qk over agreeing patterns.
double pattern_marginal(const InducedPrior& induced, std::span<const Index> subset,
                        std::span<const int> pattern);

/// g(S, (f, k)) = 1 - q0[Y = f(S); S] q0[Z = k(S); S].
double utility_g(const InducedPrior& induced, std::span<const Index> subset, Index f, Index k);

/// Adaptive policy: every internal node queries one example and branches on the
/// feedback 0..l. A child of -1 ends the path (depth reached or unreachable).
class PolicyTree {
 public:
  struct Node {
    Index example = -1;
    std::vector<int> children;
  };

  PolicyTree() = default;
  explicit PolicyTree(int labels) : labels_(labels) {}

  int labels() const noexcept { return labels_; }
  int root() const noexcept { return root_; }
  const std::vector<Node>& nodes() const noexcept { return nodes_; }
  int depth() const;

  int add_node(Index example);
  void set_child(int parent, Label feedback, int child);
  void set_root(int node) { root_ = node; }

  /// Examples queried when the truth is (f, k), in query order.
  std::vector<Index> selected(const InducedPrior& induced, Index f, Index k) const;

 private:
  int labels_ = 2;
  int root_ = -1;
  std::vector<Node> nodes_;
};

/// G_avg = E_{(f,k) ~ q0} g(selected set, (f, k)).
double eval_policy_avg(const PolicyTree& tree, const InducedPrior& induced);
/// G_worst = min of g over realizations with q0[f] q0[k] > 0.
double eval_policy_worst(const PolicyTree& tree, const InducedPrior& induced);

enum class Objective { average, worst };

struct OptimalPolicy {
  PolicyTree tree;
  double value = 0.0;
};

/// Exhaustive search over adaptive policies of depth `budget` (<= 4, <= pool).
/// Branches of zero probability are pruned; ties go to the lowest example.
OptimalPolicy optimal_policy(Objective objective, const InducedPrior& induced, int budget);

/// Runs a selection policy against every feedback branch of the exact posterior,
/// pruning outcomes the posterior rules out.
PolicyTree greedy_tree(const Policy& policy, const FiniteBelief& prior, int budget);

struct Observation {
  Index example = 0;
  Label feedback = kAbstain;
};
using History = std::vector<Observation>;

/// Probability of each feedback 0..l at x given the history, by summing the
/// induced prior over consistent realizations. Throws "zero_posterior_mass"
/// for an impossible history.
Eigen::VectorXd outcome_distribution(const InducedPrior& induced, const History& history, Index x);

/// Expected reduction of the consistent mass from querying x, relative to the
/// mass of the history: 1 - sum_o P(o | history)^2.
double expected_one_step_gain(const InducedPrior& induced, const History& history, Index x);

/// Largest outcome probability max_o P(o | history) at x. The worst-case
/// relative gain is one minus this, so the greedy choice is its argmin.
double worst_case_one_step_gain(const InducedPrior& induced, const History& history, Index x);

/// Random binary-or-wider instance: Dirichlet(1) weights, uniform pmfs and rates.
FiniteBelief random_instance(std::mt19937_64& rng, int pool, int labels, int hypotheses, int rates);

/// Plain-text instance format (binary labels):
///   pool <m> labels 2
///   h <weight> <P(y=1|x1)> ... <P(y=1|xm)>
///   r <weight> <r(x1)> ... <r(xm)>
/// Weights are normalised on read.
FiniteBelief read_instance(std::istream& in);
FiniteBelief read_instance_file(const std::string& path);
void write_instance(std::ostream& out, const FiniteBelief& belief);

struct CertificationRecord {
  std::string instance;  ///< serialised in the instance format
  int budget = 0;
  double avg_greedy = 0.0;
  double avg_optimal = 0.0;
  double worst_greedy = 0.0;
  double worst_optimal = 0.0;
  bool avg_passed = false;
  bool worst_passed = false;

  double avg_ratio() const;
  double worst_ratio() const;
  bool passed() const { return avg_passed && worst_passed; }
};

/// Builds the ALa and ALw trees on `prior`, solves both optima and checks
/// G(greedy) >= (1 - 1/e) G(optimal) - 1e-9 for each objective.
CertificationRecord certify_instance(const FiniteBelief& prior, int budget);

struct CertificationOptions {
  int pool = 3;
  int labels = 2;
  int max_hypotheses = 3;
  int max_rates = 2;
  int budget = 2;
  int trials = 200;
  std::uint64_t seed = 0;
};

struct CertificationReport {
  std::vector<CertificationRecord> records;
  int avg_failures = 0;
  int worst_failures = 0;
  double min_avg_ratio = 1.0;
  double min_worst_ratio = 1.0;
};

/// certify_instance over `trials` random instances; instance t is drawn from a
/// generator seeded with (seed, t).
CertificationReport certify_bounds(const CertificationOptions& options);

/// One JSON object per record.
std::string to_json(const CertificationRecord& record);

}  // namespace abstain_al

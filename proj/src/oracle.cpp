#include "abstain_al/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>
#include <map>
#include <sstream>

#include <json.hpp>

namespace abstain_al {
namespace {

Index checked_power(int base, Index exponent) {
  double size = std::pow(static_cast<double>(base), static_cast<double>(exponent));
  if (size > kEnumerationLimit) {
    throw Error("instance_too_large", std::to_string(base) + "^" + std::to_string(exponent) + " realizations");
  }
  return static_cast<Index>(std::llround(size));
}

// (f, k) pairs with positive prior mass.
struct Realization {
  Index f;
  Index k;
  double weight;
};

std::vector<Realization> support(const InducedPrior& induced) {
  std::vector<Realization> out;
  for (Index f = 0; f < induced.qf.size(); ++f) {
    if (!(induced.qf[f] > 0)) continue;
    for (Index k = 0; k < induced.qk.size(); ++k) {
      const double w = induced.qf[f] * induced.qk[k];
      if (w > 0) out.push_back({f, k, w});
    }
  }
  return out;
}

bool consistent(const InducedPrior& induced, const Realization& r, const History& history) {
  return std::all_of(history.begin(), history.end(), [&](const Observation& o) {
    return induced.feedback(r.f, r.k, o.example) == o.feedback;
  });
}

}  // namespace

Label InducedPrior::label_of(Index f, Index x) const {
  for (Index i = 0; i < x; ++i) f /= labels;
  return static_cast<Label>(f % labels) + 1;
}

Eigen::VectorXd induce_qf(const FiniteBelief& prior) {
  const int l = prior.num_labels();
  const Index m = prior.pool_size();
  const Index count = checked_power(l, m);
  InducedPrior coder{static_cast<int>(m), l, {}, {}};
  Eigen::VectorXd qf = Eigen::VectorXd::Zero(count);
  const auto& hs = prior.hypotheses();
  for (Index f = 0; f < count; ++f) {
    for (std::size_t h = 0; h < hs.size(); ++h) {
      double p = prior.hypothesis_weights()[static_cast<Index>(h)];
      for (Index x = 0; x < m && p > 0; ++x) p *= hs[h].pmf(x, coder.label_of(f, x) - 1);
      qf[f] += p;
    }
  }
  return qf;
}

Eigen::VectorXd induce_qk(const FiniteBelief& prior) {
  const Index m = prior.pool_size();
  const Index count = checked_power(2, m);
  Eigen::VectorXd qk = Eigen::VectorXd::Zero(count);
  const auto& rs = prior.rates();
  for (Index k = 0; k < count; ++k) {
    for (std::size_t r = 0; r < rs.size(); ++r) {
      double p = prior.rate_weights()[static_cast<Index>(r)];
      for (Index x = 0; x < m; ++x) {
        const double rx = rs[r].abstain[x];
        p *= ((k >> x) & 1) ? rx : 1.0 - rx;
      }
      qk[k] += p;
    }
  }
  return qk;
}

InducedPrior induce(const FiniteBelief& prior) {
  return InducedPrior{static_cast<int>(prior.pool_size()), prior.num_labels(), induce_qf(prior), induce_qk(prior)};
}

double labeling_marginal(const InducedPrior& induced, std::span<const Index> subset, std::span<const Label> labels) {
  if (subset.size() != labels.size()) throw Error("bad_input", "subset and labeling differ in length");
  double total = 0.0;
  for (Index f = 0; f < induced.qf.size(); ++f) {
    bool agree = true;
    for (std::size_t i = 0; i < subset.size() && agree; ++i) agree = induced.label_of(f, subset[i]) == labels[i];
    if (agree) total += induced.qf[f];
  }
  return total;
}

double pattern_marginal(const InducedPrior& induced, std::span<const Index> subset, std::span<const int> pattern) {
  if (subset.size() != pattern.size()) throw Error("bad_input", "subset and pattern differ in length");
  double total = 0.0;
  for (Index k = 0; k < induced.qk.size(); ++k) {
    bool agree = true;
    for (std::size_t i = 0; i < subset.size() && agree; ++i) {
      agree = static_cast<int>(induced.abstains(k, subset[i])) == pattern[i];
    }
    if (agree) total += induced.qk[k];
  }
  return total;
}

double utility_g(const InducedPrior& induced, std::span<const Index> subset, Index f, Index k) {
  std::vector<Label> y;
  std::vector<int> z;
  y.reserve(subset.size());
  z.reserve(subset.size());
  for (Index x : subset) {
    y.push_back(induced.label_of(f, x));
    z.push_back(induced.abstains(k, x) ? 1 : 0);
  }
  return 1.0 - labeling_marginal(induced, subset, y) * pattern_marginal(induced, subset, z);
}

int PolicyTree::add_node(Index example) {
  nodes_.push_back(Node{example, std::vector<int>(static_cast<std::size_t>(labels_ + 1), -1)});
  return static_cast<int>(nodes_.size()) - 1;
}

void PolicyTree::set_child(int parent, Label feedback, int child) {
  nodes_.at(static_cast<std::size_t>(parent)).children.at(static_cast<std::size_t>(feedback)) = child;
}

int PolicyTree::depth() const {
  auto rec = [&](auto&& self, int node) -> int {
    if (node < 0) return 0;
    int best = 0;
    for (int c : nodes_[static_cast<std::size_t>(node)].children) best = std::max(best, self(self, c));
    return best + 1;
  };
  return rec(rec, root_);
}

std::vector<Index> PolicyTree::selected(const InducedPrior& induced, Index f, Index k) const {
  std::vector<Index> picked;
  for (int node = root_; node >= 0;) {
    const Node& n = nodes_[static_cast<std::size_t>(node)];
    if (std::find(picked.begin(), picked.end(), n.example) != picked.end()) {
      throw Error("bad_tree", "example " + std::to_string(n.example) + " repeats along a path");
    }
    picked.push_back(n.example);
    node = n.children[static_cast<std::size_t>(induced.feedback(f, k, n.example))];
  }
  return picked;
}

double eval_policy_avg(const PolicyTree& tree, const InducedPrior& induced) {
  double total = 0.0;
  for (const Realization& r : support(induced)) {
    total += r.weight * utility_g(induced, tree.selected(induced, r.f, r.k), r.f, r.k);
  }
  return total;
}

double eval_policy_worst(const PolicyTree& tree, const InducedPrior& induced) {
  double worst = std::numeric_limits<double>::infinity();
  for (const Realization& r : support(induced)) {
    worst = std::min(worst, utility_g(induced, tree.selected(induced, r.f, r.k), r.f, r.k));
  }
  return worst;
}

namespace {

class Search {
 public:
  Search(Objective objective, const InducedPrior& induced, int budget)
      : objective_(objective), induced_(induced), budget_(budget) {}

  double solve(History& history, const std::vector<Realization>& live) {
    if (static_cast<int>(history.size()) == budget_) return leaf_value(history, live);
    const Key key = make_key(history);
    if (auto it = memo_.find(key); it != memo_.end()) return it->second.first;

    double best = -std::numeric_limits<double>::infinity();
    Index best_x = -1;
    for (Index x = 0; x < induced_.pool; ++x) {
      if (queried(history, x)) continue;
      double value = objective_ == Objective::average ? 0.0 : std::numeric_limits<double>::infinity();
      for (Label o = 0; o <= induced_.labels; ++o) {
        std::vector<Realization> branch = split(live, x, o);
        if (branch.empty()) continue;
        history.push_back({x, o});
        const double v = solve(history, branch);
        history.pop_back();
        value = objective_ == Objective::average ? value + v : std::min(value, v);
      }
      if (value > best) {
        best = value;
        best_x = x;
      }
    }
    memo_.emplace(key, std::make_pair(best, best_x));
    return best;
  }

  int build(PolicyTree& tree, History& history, const std::vector<Realization>& live) {
    if (static_cast<int>(history.size()) == budget_) return -1;
    const Index x = memo_.at(make_key(history)).second;
    const int node = tree.add_node(x);
    for (Label o = 0; o <= induced_.labels; ++o) {
      std::vector<Realization> branch = split(live, x, o);
      if (branch.empty()) continue;
      history.push_back({x, o});
      tree.set_child(node, o, build(tree, history, branch));
      history.pop_back();
    }
    return node;
  }

 private:
  using Key = std::vector<std::pair<Index, Label>>;

  static Key make_key(const History& history) {
    Key key;
    for (const Observation& o : history) key.emplace_back(o.example, o.feedback);
    std::sort(key.begin(), key.end());
    return key;
  }

  static bool queried(const History& history, Index x) {
    return std::any_of(history.begin(), history.end(), [x](const Observation& o) { return o.example == x; });
  }

  std::vector<Realization> split(const std::vector<Realization>& live, Index x, Label o) const {
    std::vector<Realization> out;
    for (const Realization& r : live) {
      if (induced_.feedback(r.f, r.k, x) == o) out.push_back(r);
    }
    return out;
  }

  double leaf_value(const History& history, const std::vector<Realization>& live) const {
    std::vector<Index> subset;
    for (const Observation& o : history) subset.push_back(o.example);
    if (objective_ == Objective::average) {
      double total = 0.0;
      for (const Realization& r : live) total += r.weight * utility_g(induced_, subset, r.f, r.k);
      return total;
    }
    double worst = std::numeric_limits<double>::infinity();
    for (const Realization& r : live) worst = std::min(worst, utility_g(induced_, subset, r.f, r.k));
    return worst;
  }

  Objective objective_;
  const InducedPrior& induced_;
  int budget_;
  std::map<Key, std::pair<double, Index>> memo_;
};

}  // namespace

OptimalPolicy optimal_policy(Objective objective, const InducedPrior& induced, int budget) {
  if (budget < 0 || budget > kMaxOracleBudget || budget > induced.pool) {
    throw Error("instance_too_large", "optimal policy search needs budget <= min(pool, " +
                                          std::to_string(kMaxOracleBudget) + ")");
  }
  OptimalPolicy result{PolicyTree(induced.labels), 0.0};
  const std::vector<Realization> live = support(induced);
  if (budget == 0) return result;  // g(empty set) = 0 for every realization
  Search search(objective, induced, budget);
  History history;
  result.value = search.solve(history, live);
  result.tree.set_root(search.build(result.tree, history, live));
  return result;
}

PolicyTree greedy_tree(const Policy& policy, const FiniteBelief& prior, int budget) {
  const Index m = prior.pool_size();
  if (budget < 0 || budget > m) throw Error("budget_exceeds_pool");
  std::vector<Example> blanks(static_cast<std::size_t>(m));
  const Dataset pool(LabelSpace(prior.num_labels()), std::move(blanks));
  std::mt19937_64 rng(0);

  PolicyTree tree(prior.num_labels());
  auto grow = [&](auto&& self, const FiniteBelief& belief, std::vector<Index>& candidates, int remaining) -> int {
    if (remaining == 0) return -1;
    const Index x = select(policy, belief, pool, candidates, rng);
    const int node = tree.add_node(x);
    const double rate = estimated_rate(belief, x);
    const Eigen::VectorXd pmf = predictive_pmf(belief, x);
    std::vector<Index> rest;
    std::copy_if(candidates.begin(), candidates.end(), std::back_inserter(rest), [x](Index c) { return c != x; });
    for (Label o = 0; o <= belief.num_labels(); ++o) {
      const double p = o == kAbstain ? rate : (1.0 - rate) * pmf[o - 1];
      if (!(p > 0)) continue;
      try {
        const FiniteBelief next = o == kAbstain ? update_on_abstain(belief, x) : update_on_label(belief, x, o);
        tree.set_child(node, o, self(self, next, rest, remaining - 1));
      } catch (const Error& e) {
        // Rounding can leave a ruled-out outcome with a denormal probability.
        if (e.code() != "zero_posterior_mass") throw;
      }
    }
    return node;
  };
  std::vector<Index> candidates(static_cast<std::size_t>(m));
  for (Index i = 0; i < m; ++i) candidates[static_cast<std::size_t>(i)] = i;
  tree.set_root(grow(grow, prior, candidates, budget));
  return tree;
}

Eigen::VectorXd outcome_distribution(const InducedPrior& induced, const History& history, Index x) {
  if (x < 0 || x >= induced.pool) throw Error("unknown_example", std::to_string(x));
  for (const Observation& o : history) {
    if (o.example == x) throw Error("bad_input", "example already queried");
  }
  Eigen::VectorXd mass = Eigen::VectorXd::Zero(induced.labels + 1);
  for (const Realization& r : support(induced)) {
    if (consistent(induced, r, history)) mass[induced.feedback(r.f, r.k, x)] += r.weight;
  }
  const double total = mass.sum();
  if (!(total > 0)) throw Error("zero_posterior_mass", "history has no consistent realization");
  return mass / total;
}

double expected_one_step_gain(const InducedPrior& induced, const History& history, Index x) {
  const Eigen::VectorXd p = outcome_distribution(induced, history, x);
  // sum_o P(o) (1 - P(o))
  return (p.array() * (1.0 - p.array())).sum();
}

double worst_case_one_step_gain(const InducedPrior& induced, const History& history, Index x) {
  return outcome_distribution(induced, history, x).maxCoeff();
}

FiniteBelief random_instance(std::mt19937_64& rng, int pool, int labels, int hypotheses, int rates) {
  std::exponential_distribution<double> gamma1(1.0);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  auto dirichlet = [&](Index n) {
    Eigen::VectorXd w(n);
    for (Index i = 0; i < n; ++i) w[i] = gamma1(rng);
    return Eigen::VectorXd(w / w.sum());
  };

  std::vector<ProbHypothesis> hs;
  for (int h = 0; h < hypotheses; ++h) {
    Eigen::MatrixXd pmf(pool, labels);
    for (int x = 0; x < pool; ++x) pmf.row(x) = dirichlet(labels).transpose();
    hs.push_back({pmf});
  }
  std::vector<RateFunction> rs;
  for (int r = 0; r < rates; ++r) {
    Eigen::VectorXd a(pool);
    for (int x = 0; x < pool; ++x) a[x] = unit(rng);
    rs.push_back({a});
  }
  Eigen::VectorXd wh = dirichlet(hypotheses);
  Eigen::VectorXd wr = dirichlet(rates);
  return FiniteBelief(std::move(hs), std::move(wh), std::move(rs), std::move(wr));
}

FiniteBelief read_instance(std::istream& in) {
  std::string line;
  int line_no = 0;
  Index pool = -1;
  std::vector<ProbHypothesis> hs;
  std::vector<double> wh;
  std::vector<RateFunction> rs;
  std::vector<double> wr;
  auto fail = [&](const std::string& what) {
    throw Error("bad_instance", "line " + std::to_string(line_no) + ": " + what);
  };

  while (std::getline(in, line)) {
    ++line_no;
    const auto first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos || line[first] == '#') continue;
    std::istringstream ls(line);
    std::string tag;
    ls >> tag;
    if (tag == "pool") {
      std::string labels_kw;
      int labels = 0;
      if (!(ls >> pool >> labels_kw >> labels) || labels_kw != "labels" || pool < 1) fail("expected 'pool <m> labels <l>'");
      if (labels != 2) fail("only binary instances are supported");
      continue;
    }
    if (pool < 0) fail("header must come first");
    double weight = 0.0;
    if (!(ls >> weight)) fail("missing weight");
    Eigen::VectorXd values(pool);
    for (Index x = 0; x < pool; ++x) {
      if (!(ls >> values[x])) fail("expected " + std::to_string(pool) + " values");
      if (!(values[x] >= 0.0 && values[x] <= 1.0)) fail("probability outside [0, 1]");
    }
    std::string extra;
    if (ls >> extra) fail("trailing token '" + extra + "'");
    if (tag == "h") {
      Eigen::MatrixXd pmf(pool, 2);
      pmf.col(0) = values;
      pmf.col(1) = (1.0 - values.array()).matrix();
      hs.push_back({pmf});
      wh.push_back(weight);
    } else if (tag == "r") {
      rs.push_back({values});
      wr.push_back(weight);
    } else {
      fail("unknown record '" + tag + "'");
    }
  }
  if (pool < 0) throw Error("bad_instance", "missing header");
  if (hs.empty() || rs.empty()) throw Error("bad_instance", "need at least one 'h' and one 'r' line");
  return FiniteBelief(std::move(hs), Eigen::Map<Eigen::VectorXd>(wh.data(), static_cast<Index>(wh.size())),
                      std::move(rs), Eigen::Map<Eigen::VectorXd>(wr.data(), static_cast<Index>(wr.size())));
}

FiniteBelief read_instance_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("io_error", "cannot open " + path);
  return read_instance(in);
}

void write_instance(std::ostream& out, const FiniteBelief& belief) {
  if (belief.num_labels() != 2) throw Error("bad_instance", "only binary instances are supported");
  const auto old_precision = out.precision(17);
  out << "pool " << belief.pool_size() << " labels 2\n";
  for (std::size_t h = 0; h < belief.hypotheses().size(); ++h) {
    out << "h " << belief.hypothesis_weights()[static_cast<Index>(h)];
    for (Index x = 0; x < belief.pool_size(); ++x) out << ' ' << belief.hypotheses()[h].pmf(x, 0);
    out << '\n';
  }
  for (std::size_t r = 0; r < belief.rates().size(); ++r) {
    out << "r " << belief.rate_weights()[static_cast<Index>(r)];
    for (Index x = 0; x < belief.pool_size(); ++x) out << ' ' << belief.rates()[r].abstain[x];
    out << '\n';
  }
  out.precision(old_precision);
}

namespace {

constexpr double kBoundFactor = 1.0 - 1.0 / 2.718281828459045235360287;
constexpr double kBoundSlack = 1e-9;

double ratio(double greedy, double optimal) { return optimal > 0 ? greedy / optimal : 1.0; }

}  // namespace

double CertificationRecord::avg_ratio() const { return ratio(avg_greedy, avg_optimal); }
double CertificationRecord::worst_ratio() const { return ratio(worst_greedy, worst_optimal); }

CertificationRecord certify_instance(const FiniteBelief& prior, int budget) {
  const InducedPrior induced = induce(prior);
  CertificationRecord rec;
  rec.budget = budget;
  if (prior.num_labels() == 2) {
    std::ostringstream os;
    write_instance(os, prior);
    rec.instance = os.str();
  }
  rec.avg_greedy = eval_policy_avg(greedy_tree(Policy::average(), prior, budget), induced);
  rec.avg_optimal = optimal_policy(Objective::average, induced, budget).value;
  rec.worst_greedy = eval_policy_worst(greedy_tree(Policy::worst(), prior, budget), induced);
  rec.worst_optimal = optimal_policy(Objective::worst, induced, budget).value;
  rec.avg_passed = rec.avg_greedy >= kBoundFactor * rec.avg_optimal - kBoundSlack;
  rec.worst_passed = rec.worst_greedy >= kBoundFactor * rec.worst_optimal - kBoundSlack;
  return rec;
}

CertificationReport certify_bounds(const CertificationOptions& options) {
  if (options.trials < 0 || options.max_hypotheses < 1 || options.max_rates < 1) {
    throw Error("bad_input", "trials must be non-negative and H, R non-empty");
  }
  CertificationReport report;
  for (int t = 0; t < options.trials; ++t) {
    std::mt19937_64 rng(derive_seed(options.seed, static_cast<std::uint64_t>(t)));
    std::uniform_int_distribution<int> nh(1, options.max_hypotheses);
    std::uniform_int_distribution<int> nr(1, options.max_rates);
    const int hypotheses = nh(rng);
    const int rates = nr(rng);
    const FiniteBelief prior = random_instance(rng, options.pool, options.labels, hypotheses, rates);
    CertificationRecord rec = certify_instance(prior, options.budget);
    report.avg_failures += rec.avg_passed ? 0 : 1;
    report.worst_failures += rec.worst_passed ? 0 : 1;
    report.min_avg_ratio = std::min(report.min_avg_ratio, rec.avg_ratio());
    report.min_worst_ratio = std::min(report.min_worst_ratio, rec.worst_ratio());
    report.records.push_back(std::move(rec));
  }
  return report;
}

std::string to_json(const CertificationRecord& record) {
  nlohmann::ordered_json j;
  j["instance"] = record.instance;
  j["budget"] = record.budget;
  j["avg_greedy"] = record.avg_greedy;
  j["avg_optimal"] = record.avg_optimal;
  j["avg_ratio"] = record.avg_ratio();
  j["worst_greedy"] = record.worst_greedy;
  j["worst_optimal"] = record.worst_optimal;
  j["worst_ratio"] = record.worst_ratio();
  j["status"] = record.passed() ? "PASSED" : "FAILED";
  return j.dump();
}

}  // namespace abstain_al

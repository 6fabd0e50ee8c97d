#include "abstain_al/criteria.hpp"

#include <vector>

namespace abstain_al {

Policy Policy::average_known(RateFn rate) {
  if (!rate) throw Error("bad_input", "ala-known needs a rate estimator");
  return Policy(PolicyKind::average, RateSource::fixed, std::move(rate));
}

Policy Policy::worst_known(RateFn rate) {
  if (!rate) throw Error("bad_input", "alw-known needs a rate estimator");
  return Policy(PolicyKind::worst, RateSource::fixed, std::move(rate));
}

std::string Policy::name() const {
  switch (kind_) {
    case PolicyKind::passive: return "pl";
    case PolicyKind::gibbs: return "alg";
    case PolicyKind::average: return rate_source_ == RateSource::fixed ? "ala-known" : "ala";
    case PolicyKind::worst: return rate_source_ == RateSource::fixed ? "alw-known" : "alw";
  }
  return "?";
}

double Policy::rate(const Belief& belief, const Example& x) const {
  switch (rate_source_) {
    case RateSource::none: return 0.0;
    case RateSource::learned: return belief.estimated_rate(x);
    case RateSource::fixed: return fixed_rate_(x);
  }
  return 0.0;
}

bool policy_needs_known_rate(std::string_view name) {
  return name == "ala-known" || name == "alw-known";
}

Policy parse_policy(std::string_view name, const RateFn& known_rate) {
  if (name == "pl") return Policy::passive();
  if (name == "alg") return Policy::gibbs();
  if (name == "ala") return Policy::average();
  if (name == "alw") return Policy::worst();
  if (name == "ala-known") return Policy::average_known(known_rate);
  if (name == "alw-known") return Policy::worst_known(known_rate);
  throw Error("bad_config", "unknown policy '" + std::string(name) + "'");
}

double policy_score(const Policy& policy, const Belief& belief, const Example& x) {
  const Eigen::VectorXd pmf = belief.predictive_pmf(x);
  switch (policy.kind()) {
    case PolicyKind::passive: return 0.0;
    case PolicyKind::gibbs: return score_gibbs(pmf);
    case PolicyKind::average: return score_avg(pmf, policy.rate(belief, x));
    case PolicyKind::worst: return score_worst(pmf, policy.rate(belief, x));
  }
  return 0.0;
}

Index select(const Policy& policy, const Belief& belief, const Dataset& pool,
             std::span<const Index> candidates, std::mt19937_64& rng) {
  if (candidates.empty()) throw Error("empty_candidates");

  if (policy.kind() == PolicyKind::passive) {
    std::vector<Index> sorted(candidates.begin(), candidates.end());
    std::sort(sorted.begin(), sorted.end());
    std::uniform_int_distribution<std::size_t> pick(0, sorted.size() - 1);
    return sorted[pick(rng)];
  }

  const bool minimise = policy.kind() == PolicyKind::worst;
  Index best = -1;
  double best_score = 0.0;
  for (Index c : candidates) {
    const double s = policy_score(policy, belief, pool[c]);
    const bool better = best < 0 || (minimise ? s < best_score : s > best_score) ||
                        (s == best_score && c < best);
    if (better) {
      best = c;
      best_score = s;
    }
  }
  return best;
}

}  // namespace abstain_al

#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <random>
#include <span>
#include <string>
#include <string_view>

#include "abstain_al/types.hpp"

namespace abstain_al {

// Acquisition scores. `pmf` is any Eigen vector expression over labels 1..l,
// `rate` the estimated abstention probability at the same example.

/// Gibbs error 1 - sum_y p(y)^2. Maximised by ALg.
template <typename Derived>
typename Derived::Scalar score_gibbs(const Eigen::MatrixBase<Derived>& pmf) {
  using Scalar = typename Derived::Scalar;
  return Scalar(1) - pmf.squaredNorm();
}

/// Expected one-step version-space reduction with abstention. Maximised by ALa.
template <typename Derived>
typename Derived::Scalar score_avg(const Eigen::MatrixBase<Derived>& pmf,
                                   typename Derived::Scalar rate) {
  using Scalar = typename Derived::Scalar;
  const Scalar keep = Scalar(1) - rate;
  return Scalar(1) - rate * rate - keep * keep * pmf.squaredNorm();
}

/// Largest outcome probability with abstention. Minimised by ALw.
template <typename Derived>
typename Derived::Scalar score_worst(const Eigen::MatrixBase<Derived>& pmf,
                                     typename Derived::Scalar rate) {
  using Scalar = typename Derived::Scalar;
  return std::max(rate, (Scalar(1) - rate) * pmf.maxCoeff());
}

/// Least confidence: max_y p(y). Smaller is more uncertain.
template <typename Derived>
typename Derived::Scalar score_max_probability(const Eigen::MatrixBase<Derived>& pmf) {
  return pmf.maxCoeff();
}

/// Shannon entropy in nats.
template <typename Derived>
typename Derived::Scalar score_entropy(const Eigen::MatrixBase<Derived>& pmf) {
  using Scalar = typename Derived::Scalar;
  Scalar h = 0;
  for (Index i = 0; i < pmf.size(); ++i) {
    const Scalar p = pmf.coeff(i);
    if (p > 0) h -= p * std::log(p);
  }
  return h;
}

/// Rate at which score_avg peaks for a fixed pmf.
template <typename Derived>
typename Derived::Scalar avg_maximizing_rate(const Eigen::MatrixBase<Derived>& pmf) {
  const auto s = pmf.squaredNorm();
  return s / (1 + s);
}

/// Rate at which score_worst bottoms out for a fixed pmf.
template <typename Derived>
typename Derived::Scalar worst_minimizing_rate(const Eigen::MatrixBase<Derived>& pmf) {
  const auto m = pmf.maxCoeff();
  return m / (1 + m);
}

enum class PolicyKind { passive, gibbs, average, worst };
enum class RateSource { none, learned, fixed };

using RateFn = std::function<double(const Example&)>;

class Policy {
 public:
  static Policy passive() { return Policy(PolicyKind::passive, RateSource::none, {}); }
  static Policy gibbs() { return Policy(PolicyKind::gibbs, RateSource::none, {}); }
  static Policy average() { return Policy(PolicyKind::average, RateSource::learned, {}); }
  static Policy worst() { return Policy(PolicyKind::worst, RateSource::learned, {}); }
  static Policy average_known(RateFn rate);
  static Policy worst_known(RateFn rate);

  PolicyKind kind() const noexcept { return kind_; }
  RateSource rate_source() const noexcept { return rate_source_; }
  /// Config string: pl, alg, ala, alw, ala-known, alw-known.
  std::string name() const;

  /// Abstention estimate this policy scores with at x.
  double rate(const Belief& belief, const Example& x) const;

 private:
  Policy(PolicyKind kind, RateSource source, RateFn fixed)
      : kind_(kind), rate_source_(source), fixed_rate_(std::move(fixed)) {}

  PolicyKind kind_;
  RateSource rate_source_;
  RateFn fixed_rate_;
};

/// Builds a policy from its config string. `known_rate` backs the -known variants.
Policy parse_policy(std::string_view name, const RateFn& known_rate = {});
bool policy_needs_known_rate(std::string_view name);

/// Score the policy assigns to x (meaningless for PL).
double policy_score(const Policy& policy, const Belief& belief, const Example& x);

/// Picks the next query among `candidates` (positions in `pool`).
/// Ties go to the lowest example index; PL draws uniformly from the sorted set.
Index select(const Policy& policy, const Belief& belief, const Dataset& pool,
             std::span<const Index> candidates, std::mt19937_64& rng);

}  // namespace abstain_al

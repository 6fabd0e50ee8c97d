#pragma once

#include <memory>
#include <vector>

#include "abstain_al/types.hpp"

namespace abstain_al {

/// Probabilistic labeling of a finite pool: row x is the categorical pmf of
/// h(x) over labels 1..l. Labels of distinct examples are independent.
struct ProbHypothesis {
  Eigen::MatrixXd pmf;
};

/// Per-example abstention probability r(x).
struct RateFunction {
  Eigen::VectorXd abstain;
};

/// Exact posterior over a finite hypothesis set H and rate set R, kept as
/// independent weight vectors p[h] and p[r].
///
/// Examples are addressed by pool index; Example::index is used when called
/// through the Belief interface. Updates return new values.
class FiniteBelief final : public Belief {
 public:
  FiniteBelief(std::vector<ProbHypothesis> hypotheses, Eigen::VectorXd hypothesis_weights,
               std::vector<RateFunction> rates, Eigen::VectorXd rate_weights);

  Index pool_size() const noexcept { return pool_size_; }
  int num_labels() const override { return num_labels_; }

  const std::vector<ProbHypothesis>& hypotheses() const noexcept { return *hypotheses_; }
  const std::vector<RateFunction>& rates() const noexcept { return *rates_; }
  const Eigen::VectorXd& hypothesis_weights() const noexcept { return hypothesis_weights_; }
  const Eigen::VectorXd& rate_weights() const noexcept { return rate_weights_; }

  FiniteBelief with_weights(Eigen::VectorXd hypothesis_weights, Eigen::VectorXd rate_weights) const;

  std::unique_ptr<Belief> clone() const override;
  Eigen::VectorXd predictive_pmf(const Example& x) const override;
  double estimated_rate(const Example& x) const override;
  void observe_label(const Example& x, Label y) override;
  void observe_abstain(const Example& x) override;

 private:
  friend FiniteBelief update_on_abstain(const FiniteBelief& belief, Index x);

  FiniteBelief() = default;

  std::shared_ptr<const std::vector<ProbHypothesis>> hypotheses_;
  std::shared_ptr<const std::vector<RateFunction>> rates_;
  Eigen::VectorXd hypothesis_weights_;
  Eigen::VectorXd rate_weights_;
  Index pool_size_ = 0;
  int num_labels_ = 0;
};

/// y -> sum_h p[h] P[h(x) = y].
Eigen::VectorXd predictive_pmf(const FiniteBelief& belief, Index x);

/// sum_r p[r] r(x).
double estimated_rate(const FiniteBelief& belief, Index x);

/// Label y observed at x: p[h] *= P[h(x)=y], p[r] *= 1 - r(x), both renormalised.
/// Throws Error("zero_posterior_mass") if either product vanishes.
FiniteBelief update_on_label(const FiniteBelief& belief, Index x, Label y);

/// Abstention at x: p[r] *= r(x); p[h] unchanged.
FiniteBelief update_on_abstain(const FiniteBelief& belief, Index x);

}  // namespace abstain_al

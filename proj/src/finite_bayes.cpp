#include "abstain_al/finite_bayes.hpp"

#include <cmath>
#include <string>

namespace abstain_al {
namespace {

constexpr double kSumTolerance = 1e-12;

Eigen::VectorXd normalised(const Eigen::VectorXd& w, const char* what) {
  if (w.size() == 0) throw Error("bad_input", std::string("empty ") + what);
  if ((w.array() < 0).any() || !w.allFinite()) {
    throw Error("bad_input", std::string(what) + " must be finite and non-negative");
  }
  const double total = w.sum();
  if (total <= 0) throw Error("bad_input", std::string(what) + " have zero mass");
  return w / total;
}

void check_index(const FiniteBelief& b, Index x) {
  if (x < 0 || x >= b.pool_size()) throw Error("unknown_example", std::to_string(x));
}

}  // namespace

FiniteBelief::FiniteBelief(std::vector<ProbHypothesis> hypotheses, Eigen::VectorXd hypothesis_weights,
                           std::vector<RateFunction> rates, Eigen::VectorXd rate_weights) {
  if (hypotheses.empty() || rates.empty()) throw Error("bad_input", "need at least one hypothesis and one rate");
  if (static_cast<Index>(hypotheses.size()) != hypothesis_weights.size() ||
      static_cast<Index>(rates.size()) != rate_weights.size()) {
    throw Error("bad_input", "weight vector length mismatch");
  }
  pool_size_ = hypotheses.front().pmf.rows();
  num_labels_ = static_cast<int>(hypotheses.front().pmf.cols());
  LabelSpace check(num_labels_);
  for (const ProbHypothesis& h : hypotheses) {
    if (h.pmf.rows() != pool_size_ || h.pmf.cols() != num_labels_) {
      throw Error("bad_input", "hypothesis pmf shape mismatch");
    }
    if ((h.pmf.array() < 0).any() || !h.pmf.allFinite() ||
        ((h.pmf.rowwise().sum().array() - 1.0).abs() > kSumTolerance).any()) {
      throw Error("bad_input", "hypothesis pmf rows must be probability vectors");
    }
  }
  for (const RateFunction& r : rates) {
    if (r.abstain.size() != pool_size_) throw Error("bad_input", "rate function length mismatch");
    if ((r.abstain.array() < 0).any() || (r.abstain.array() > 1).any() || !r.abstain.allFinite()) {
      throw Error("bad_input", "rates must lie in [0, 1]");
    }
  }
  hypotheses_ = std::make_shared<const std::vector<ProbHypothesis>>(std::move(hypotheses));
  rates_ = std::make_shared<const std::vector<RateFunction>>(std::move(rates));
  hypothesis_weights_ = normalised(hypothesis_weights, "hypothesis weights");
  rate_weights_ = normalised(rate_weights, "rate weights");
}

FiniteBelief FiniteBelief::with_weights(Eigen::VectorXd hypothesis_weights,
                                        Eigen::VectorXd rate_weights) const {
  if (hypothesis_weights.size() != hypothesis_weights_.size() || rate_weights.size() != rate_weights_.size()) {
    throw Error("bad_input", "weight vector length mismatch");
  }
  FiniteBelief out;
  out.hypotheses_ = hypotheses_;
  out.rates_ = rates_;
  out.pool_size_ = pool_size_;
  out.num_labels_ = num_labels_;
  out.hypothesis_weights_ = normalised(hypothesis_weights, "hypothesis weights");
  out.rate_weights_ = normalised(rate_weights, "rate weights");
  return out;
}

std::unique_ptr<Belief> FiniteBelief::clone() const { return std::make_unique<FiniteBelief>(*this); }

Eigen::VectorXd FiniteBelief::predictive_pmf(const Example& x) const {
  return abstain_al::predictive_pmf(*this, x.index);
}

double FiniteBelief::estimated_rate(const Example& x) const {
  return abstain_al::estimated_rate(*this, x.index);
}

void FiniteBelief::observe_label(const Example& x, Label y) { *this = update_on_label(*this, x.index, y); }

void FiniteBelief::observe_abstain(const Example& x) { *this = update_on_abstain(*this, x.index); }

Eigen::VectorXd predictive_pmf(const FiniteBelief& belief, Index x) {
  check_index(belief, x);
  Eigen::VectorXd pmf = Eigen::VectorXd::Zero(belief.num_labels());
  const auto& hs = belief.hypotheses();
  for (std::size_t h = 0; h < hs.size(); ++h) {
    pmf += belief.hypothesis_weights()[static_cast<Index>(h)] * hs[h].pmf.row(x).transpose();
  }
  return pmf;
}

double estimated_rate(const FiniteBelief& belief, Index x) {
  check_index(belief, x);
  double r = 0.0;
  const auto& rs = belief.rates();
  for (std::size_t i = 0; i < rs.size(); ++i) r += belief.rate_weights()[static_cast<Index>(i)] * rs[i].abstain[x];
  return r;
}

namespace {

Eigen::VectorXd rate_posterior(const FiniteBelief& belief, Index x, bool abstained) {
  const auto& rs = belief.rates();
  Eigen::VectorXd w = belief.rate_weights();
  for (std::size_t i = 0; i < rs.size(); ++i) {
    const double r = rs[i].abstain[x];
    w[static_cast<Index>(i)] *= abstained ? r : 1.0 - r;
  }
  if (!(w.sum() > 0)) throw Error("zero_posterior_mass", "rate posterior at example " + std::to_string(x));
  return w;
}

}  // namespace

FiniteBelief update_on_label(const FiniteBelief& belief, Index x, Label y) {
  check_index(belief, x);
  if (y < 1 || y > belief.num_labels()) throw Error("bad_input", "label " + std::to_string(y) + " out of range");
  const auto& hs = belief.hypotheses();
  Eigen::VectorXd wh = belief.hypothesis_weights();
  for (std::size_t h = 0; h < hs.size(); ++h) wh[static_cast<Index>(h)] *= hs[h].pmf(x, y - 1);
  if (!(wh.sum() > 0)) throw Error("zero_posterior_mass", "hypothesis posterior at example " + std::to_string(x));
  return belief.with_weights(std::move(wh), rate_posterior(belief, x, false));
}

FiniteBelief update_on_abstain(const FiniteBelief& belief, Index x) {
  check_index(belief, x);
  FiniteBelief out = belief;
  out.rate_weights_ = normalised(rate_posterior(belief, x, true), "rate weights");
  return out;
}

}  // namespace abstain_al

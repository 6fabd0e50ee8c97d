#include <gtest/gtest.h>

#include <algorithm>
#include <numeric>

#include "abstain_al/finite_bayes.hpp"
#include "test_support.hpp"

using namespace abstain_al;

namespace {

ProbHypothesis binary_hypothesis(std::initializer_list<double> p1) {
  ProbHypothesis h;
  h.pmf.resize(static_cast<Index>(p1.size()), 2);
  Index i = 0;
  for (double p : p1) {
    h.pmf(i, 0) = p;
    h.pmf(i, 1) = 1.0 - p;
    ++i;
  }
  return h;
}

RateFunction rate_function(std::initializer_list<double> r) {
  RateFunction f;
  f.abstain = Eigen::Map<const Eigen::VectorXd>(r.begin(), static_cast<Index>(r.size()));
  return f;
}

Eigen::VectorXd weights(std::initializer_list<double> w) {
  return Eigen::Map<const Eigen::VectorXd>(w.begin(), static_cast<Index>(w.size()));
}

// Two hypotheses and two rate functions on a one-example pool.
FiniteBelief two_by_two() {
  return FiniteBelief({binary_hypothesis({0.9}), binary_hypothesis({0.3})}, weights({0.5, 0.5}),
                      {rate_function({0.2}), rate_function({0.6})}, weights({0.5, 0.5}));
}

FiniteBelief random_belief(std::mt19937_64& rng, Index pool, int labels, int nh, int nr) {
  std::uniform_real_distribution<double> unit(0.05, 0.95);
  std::vector<ProbHypothesis> hs(static_cast<std::size_t>(nh));
  for (auto& h : hs) {
    h.pmf.resize(pool, labels);
    for (Index x = 0; x < pool; ++x) h.pmf.row(x) = abstain_al::testing::random_pmf(rng, labels).transpose();
  }
  std::vector<RateFunction> rs(static_cast<std::size_t>(nr));
  for (auto& r : rs) {
    r.abstain.resize(pool);
    for (Index x = 0; x < pool; ++x) r.abstain[x] = unit(rng);
  }
  Eigen::VectorXd wh(nh), wr(nr);
  for (int i = 0; i < nh; ++i) wh[i] = unit(rng);
  for (int i = 0; i < nr; ++i) wr[i] = unit(rng);
  return FiniteBelief(std::move(hs), wh, std::move(rs), wr);
}

struct Obs {
  Index x;
  Label y;  // 0 = abstain
};

FiniteBelief apply_all(FiniteBelief b, const std::vector<Obs>& seq) {
  for (const Obs& o : seq) b = o.y == kAbstain ? update_on_abstain(b, o.x) : update_on_label(b, o.x, o.y);
  return b;
}

// Independent log-space posterior for the same sequence.
std::pair<Eigen::VectorXd, Eigen::VectorXd> log_space_posterior(const FiniteBelief& prior,
                                                                 const std::vector<Obs>& seq) {
  const auto& hs = prior.hypotheses();
  const auto& rs = prior.rates();
  Eigen::VectorXd lh = prior.hypothesis_weights().array().log();
  Eigen::VectorXd lr = prior.rate_weights().array().log();
  for (const Obs& o : seq) {
    for (std::size_t r = 0; r < rs.size(); ++r) {
      const double a = rs[r].abstain[o.x];
      lr[static_cast<Index>(r)] += std::log(o.y == kAbstain ? a : 1.0 - a);
    }
    if (o.y == kAbstain) continue;
    for (std::size_t h = 0; h < hs.size(); ++h) lh[static_cast<Index>(h)] += std::log(hs[h].pmf(o.x, o.y - 1));
  }
  auto normalise = [](Eigen::VectorXd l) {
    const double m = l.maxCoeff();
    Eigen::VectorXd e = (l.array() - m).exp();
    return Eigen::VectorXd(e / e.sum());
  };
  return {normalise(lh), normalise(lr)};
}

std::vector<Obs> random_sequence(std::mt19937_64& rng, Index pool, int labels, int length) {
  std::uniform_int_distribution<Index> pick(0, pool - 1);
  std::uniform_int_distribution<int> fb(0, labels);
  std::vector<Obs> seq(static_cast<std::size_t>(length));
  for (auto& o : seq) o = {pick(rng), fb(rng)};
  return seq;
}

}  // namespace

TEST(FiniteBelief, PredictivePmfWorkedExample) {
  const FiniteBelief b = two_by_two();
  EXPECT_NEAR(predictive_pmf(b, 0)[0], 0.6, 1e-15);
  EXPECT_NEAR(predictive_pmf(b, 0)[1], 0.4, 1e-15);
}

TEST(FiniteBelief, PredictivePmfSingleHypothesisAndSymmetry) {
  const FiniteBelief one({binary_hypothesis({0.7})}, weights({1.0}), {rate_function({0.0})}, weights({1.0}));
  EXPECT_NEAR(predictive_pmf(one, 0)[0], 0.7, 1e-15);
  const FiniteBelief mirrored({binary_hypothesis({0.8}), binary_hypothesis({0.2})}, weights({1, 1}),
                              {rate_function({0.0})}, weights({1.0}));
  EXPECT_NEAR(predictive_pmf(mirrored, 0)[0], 0.5, 1e-15);
}

TEST(FiniteBelief, EstimatedRateWorkedExamples) {
  const FiniteBelief b({binary_hypothesis({0.5})}, weights({1.0}), {rate_function({0.2}), rate_function({0.8})},
                       weights({0.5, 0.5}));
  EXPECT_NEAR(estimated_rate(b, 0), 0.5, 1e-15);
  const FiniteBelief zero({binary_hypothesis({0.5})}, weights({1.0}), {rate_function({0.0}), rate_function({0.0})},
                          weights({0.3, 0.7}));
  EXPECT_EQ(estimated_rate(zero, 0), 0.0);
  const FiniteBelief single({binary_hypothesis({0.5})}, weights({1.0}), {rate_function({0.37})}, weights({1.0}));
  EXPECT_NEAR(estimated_rate(single, 0), 0.37, 1e-15);
}

TEST(FiniteBelief, LabelUpdateWorkedExample) {
  const FiniteBelief b({binary_hypothesis({0.9}), binary_hypothesis({0.3})}, weights({0.5, 0.5}),
                       {rate_function({0.2}), rate_function({0.6})}, weights({0.5, 0.5}));
  const FiniteBelief post = update_on_label(b, 0, 1);
  EXPECT_NEAR(post.hypothesis_weights()[0], 0.75, 1e-15);
  EXPECT_NEAR(post.hypothesis_weights()[1], 0.25, 1e-15);
  // Non-abstention: (0.5*0.8, 0.5*0.4) normalised.
  EXPECT_NEAR(post.rate_weights()[0], 2.0 / 3.0, 1e-15);
  EXPECT_NEAR(post.rate_weights()[1], 1.0 / 3.0, 1e-15);
  // Prior untouched.
  EXPECT_EQ(b.hypothesis_weights()[0], 0.5);
}

TEST(FiniteBelief, LabelUpdateWithSingleHypothesisIsIdentity) {
  const FiniteBelief b({binary_hypothesis({0.9})}, weights({1.0}), {rate_function({0.2})}, weights({1.0}));
  EXPECT_EQ(update_on_label(b, 0, 2).hypothesis_weights()[0], 1.0);
}

TEST(FiniteBelief, AbstainUpdateWorkedExamples) {
  const FiniteBelief b({binary_hypothesis({0.9}), binary_hypothesis({0.3})}, weights({0.5, 0.5}),
                       {rate_function({0.2}), rate_function({0.6})}, weights({0.5, 0.5}));
  const FiniteBelief post = update_on_abstain(b, 0);
  EXPECT_NEAR(post.rate_weights()[0], 0.25, 1e-15);
  EXPECT_NEAR(post.rate_weights()[1], 0.75, 1e-15);
  EXPECT_EQ(post.hypothesis_weights(), b.hypothesis_weights());

  const FiniteBelief equal({binary_hypothesis({0.5})}, weights({1.0}), {rate_function({0.4}), rate_function({0.4})},
                           weights({0.3, 0.7}));
  EXPECT_NEAR(update_on_abstain(equal, 0).rate_weights()[0], 0.3, 1e-15);

  const FiniteBelief extreme({binary_hypothesis({0.5})}, weights({1.0}), {rate_function({0.0}), rate_function({1.0})},
                             weights({0.5, 0.5}));
  const FiniteBelief ex = update_on_abstain(extreme, 0);
  EXPECT_EQ(ex.rate_weights()[0], 0.0);
  EXPECT_EQ(ex.rate_weights()[1], 1.0);
}

TEST(FiniteBelief, ImpossibleObservationsThrow) {
  const FiniteBelief b({binary_hypothesis({1.0}), binary_hypothesis({1.0})}, weights({0.5, 0.5}),
                       {rate_function({0.0})}, weights({1.0}));
  try {
    update_on_label(b, 0, 2);
    FAIL() << "expected throw";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), "zero_posterior_mass");
  }
  try {
    update_on_abstain(b, 0);
    FAIL() << "expected throw";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), "zero_posterior_mass");
  }
  EXPECT_THROW(predictive_pmf(b, 3), Error);
}

TEST(FiniteBelief, RejectsMalformedDefinitions) {
  EXPECT_THROW(FiniteBelief({binary_hypothesis({0.5})}, weights({1.0}), {rate_function({1.5})}, weights({1.0})),
               Error);
  ProbHypothesis bad;
  bad.pmf.resize(1, 2);
  bad.pmf << 0.5, 0.6;
  EXPECT_THROW(FiniteBelief({bad}, weights({1.0}), {rate_function({0.1})}, weights({1.0})), Error);
  EXPECT_THROW(FiniteBelief({binary_hypothesis({0.5})}, weights({-1.0}), {rate_function({0.1})}, weights({1.0})),
               Error);
}

TEST(FiniteBelief, AbstentionLeavesPredictivePmfUnchanged) {
  std::mt19937_64 rng(3);
  for (int t = 0; t < 50; ++t) {
    const FiniteBelief b = random_belief(rng, 4, 3, 3, 3);
    const FiniteBelief post = update_on_abstain(b, t % 4);
    for (Index x = 0; x < 4; ++x) EXPECT_EQ(predictive_pmf(post, x), predictive_pmf(b, x));
  }
}

TEST(FiniteBelief, NormalizationOverLongSequences) {
  std::mt19937_64 rng(17);
  for (int t = 0; t < 20; ++t) {
    FiniteBelief b = random_belief(rng, 5, 2, 4, 3);
    for (const Obs& o : random_sequence(rng, 5, 2, 100)) {
      b = apply_all(b, {o});
      EXPECT_NEAR(b.hypothesis_weights().sum(), 1.0, 1e-12);
      EXPECT_NEAR(b.rate_weights().sum(), 1.0, 1e-12);
      EXPECT_GE(b.hypothesis_weights().minCoeff(), 0.0);
    }
  }
}

TEST(FiniteBelief, MatchesLogSpaceOracle) {
  std::mt19937_64 rng(23);
  for (int t = 0; t < 20; ++t) {
    const FiniteBelief prior = random_belief(rng, 5, 3, 4, 3);
    const auto seq = random_sequence(rng, 5, 3, 100);
    const FiniteBelief post = apply_all(prior, seq);
    const auto [wh, wr] = log_space_posterior(prior, seq);
    for (Index i = 0; i < wh.size(); ++i) {
      EXPECT_LE(std::abs(post.hypothesis_weights()[i] - wh[i]), 1e-9 * std::max(wh[i], 1e-300) + 1e-300);
    }
    for (Index i = 0; i < wr.size(); ++i) {
      EXPECT_LE(std::abs(post.rate_weights()[i] - wr[i]), 1e-9 * std::max(wr[i], 1e-300) + 1e-300);
    }
  }
}

TEST(FiniteBelief, UpdatesCommuteAndSequencesAreExchangeable) {
  std::mt19937_64 rng(29);
  for (int t = 0; t < 30; ++t) {
    const FiniteBelief prior = random_belief(rng, 4, 2, 3, 3);
    auto seq = random_sequence(rng, 4, 2, 12);
    const FiniteBelief a = apply_all(prior, seq);
    std::shuffle(seq.begin(), seq.end(), rng);
    const FiniteBelief b = apply_all(prior, seq);
    EXPECT_TRUE(a.hypothesis_weights().isApprox(b.hypothesis_weights(), 1e-9));
    EXPECT_TRUE(a.rate_weights().isApprox(b.rate_weights(), 1e-9));
  }
}

TEST(FiniteBelief, SupportOnlyShrinks) {
  const FiniteBelief b({binary_hypothesis({1.0, 0.5}), binary_hypothesis({0.0, 0.5}), binary_hypothesis({0.6, 0.5})},
                       weights({1, 1, 1}), {rate_function({0.0, 0.5}), rate_function({0.3, 0.5})}, weights({1, 1}));
  const FiniteBelief post = update_on_label(b, 0, 1);
  EXPECT_EQ(post.hypothesis_weights()[1], 0.0);
  const FiniteBelief later = update_on_label(post, 1, 2);
  EXPECT_EQ(later.hypothesis_weights()[1], 0.0);
  const FiniteBelief abst = update_on_abstain(later, 0);
  EXPECT_EQ(abst.rate_weights()[0], 0.0);
}

TEST(FiniteBelief, BeliefInterfaceMatchesFreeFunctions) {
  FiniteBelief b = two_by_two();
  Example x;
  x.index = 0;
  EXPECT_EQ(b.predictive_pmf(x), predictive_pmf(b, 0));
  EXPECT_EQ(b.estimated_rate(x), estimated_rate(b, 0));
  const FiniteBelief expected = update_on_label(b, 0, 1);
  auto copy = b.clone();
  copy->observe_label(x, 1);
  EXPECT_EQ(copy->predictive_pmf(x), predictive_pmf(expected, 0));
  EXPECT_EQ(b.predictive_pmf(x), predictive_pmf(two_by_two(), 0));
}

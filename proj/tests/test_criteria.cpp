#include <gtest/gtest.h>

#include <set>

#include "abstain_al/criteria.hpp"
#include "test_support.hpp"

using namespace abstain_al;
using abstain_al::testing::blank_pool;
using abstain_al::testing::pmf2;
using abstain_al::testing::random_pmf;
using abstain_al::testing::TableBelief;

TEST(Scores, GibbsWorkedValues) {
  EXPECT_DOUBLE_EQ(score_gibbs(pmf2(0.5)), 0.5);
  EXPECT_DOUBLE_EQ(score_gibbs(pmf2(1.0)), 0.0);
  EXPECT_NEAR(score_gibbs(pmf2(0.9)), 0.18, 1e-15);
}

TEST(Scores, AverageCaseWorkedValues) {
  const Eigen::VectorXd u = pmf2(0.5);
  EXPECT_DOUBLE_EQ(score_avg(u, 0.0), 0.5);
  EXPECT_DOUBLE_EQ(score_avg(u, 1.0), 0.0);
  EXPECT_NEAR(score_avg(u, 1.0 / 3.0), 2.0 / 3.0, 1e-15);
  EXPECT_NEAR(avg_maximizing_rate(u), 1.0 / 3.0, 1e-15);
}

TEST(Scores, WorstCaseWorkedValues) {
  const Eigen::VectorXd u = pmf2(0.5);
  EXPECT_DOUBLE_EQ(score_worst(u, 0.0), 0.5);
  EXPECT_DOUBLE_EQ(score_worst(u, 1.0), 1.0);
  EXPECT_NEAR(score_worst(u, 1.0 / 3.0), 1.0 / 3.0, 1e-15);
  EXPECT_NEAR(worst_minimizing_rate(u), 1.0 / 3.0, 1e-15);
}

TEST(Scores, TemplatedOnScalar) {
  Eigen::Vector2f p(0.5f, 0.5f);
  EXPECT_FLOAT_EQ(score_avg(p, 0.0f), 0.5f);
  Eigen::Matrix<long double, 2, 1> q(0.9L, 0.1L);
  EXPECT_NEAR(static_cast<double>(score_gibbs(q)), 0.18, 1e-15);
}

TEST(Scores, GridSearchFindsClosedFormExtrema) {
  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 50; ++trial) {
    const Eigen::VectorXd p = random_pmf(rng, 2 + trial % 3);
    double best_avg = -1, arg_avg = -1, best_worst = 2, arg_worst = -1;
    for (int i = 0; i <= 1000; ++i) {
      const double r = i * 1e-3;
      const double a = score_avg(p, r);
      const double w = score_worst(p, r);
      if (a > best_avg) best_avg = a, arg_avg = r;
      if (w < best_worst) best_worst = w, arg_worst = r;
    }
    EXPECT_NEAR(arg_avg, avg_maximizing_rate(p), 2e-3);
    EXPECT_NEAR(arg_worst, worst_minimizing_rate(p), 2e-3);
  }
}

TEST(Scores, RateFreeReductionsAndRange) {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  for (int trial = 0; trial < 1000; ++trial) {
    const Eigen::VectorXd p = random_pmf(rng, 2 + trial % 4);
    EXPECT_NEAR(score_avg(p, 0.0), score_gibbs(p), 1e-12);
    EXPECT_NEAR(score_worst(p, 0.0), p.maxCoeff(), 1e-12);
    const double r = unit(rng);
    for (double s : {score_gibbs(p), score_avg(p, r), score_worst(p, r)}) {
      EXPECT_GE(s, 0.0);
      EXPECT_LE(s, 1.0);
    }
  }
}

TEST(Scores, BinaryGibbsLeastConfidenceEntropyAgree) {
  std::mt19937_64 rng(7);
  std::uniform_int_distribution<int> size(1, 12);
  std::uniform_int_distribution<int> grid(0, 20);
  for (int trial = 0; trial < 500; ++trial) {
    // Coarse grid so ties actually occur.
    std::vector<Eigen::VectorXd> pmfs(static_cast<std::size_t>(size(rng)));
    for (auto& p : pmfs) p = pmf2(grid(rng) / 20.0);
    auto extremal = [&](auto score, bool maximise) {
      double best = maximise ? -1e300 : 1e300;
      for (const auto& p : pmfs) best = maximise ? std::max(best, score(p)) : std::min(best, score(p));
      std::set<std::size_t> arg;
      for (std::size_t i = 0; i < pmfs.size(); ++i) {
        if (std::abs(score(pmfs[i]) - best) <= 1e-12) arg.insert(i);
      }
      return arg;
    };
    const auto gibbs = extremal([](const Eigen::VectorXd& p) { return score_gibbs(p); }, true);
    const auto least = extremal([](const Eigen::VectorXd& p) { return score_max_probability(p); }, false);
    const auto entropy = extremal([](const Eigen::VectorXd& p) { return score_entropy(p); }, true);
    EXPECT_EQ(gibbs, least);
    EXPECT_EQ(gibbs, entropy);
  }
}

TEST(Select, SingleCandidateForEveryPolicy) {
  const Dataset pool = blank_pool(3);
  TableBelief belief({pmf2(0.9), pmf2(0.5), pmf2(0.7)}, {0.1, 0.2, 0.3});
  const std::vector<Index> only{2};
  std::mt19937_64 rng(0);
  for (const char* name : {"pl", "alg", "ala", "alw", "ala-known", "alw-known"}) {
    const Policy p = parse_policy(name, [](const Example&) { return 0.4; });
    EXPECT_EQ(select(p, belief, pool, only, rng), 2) << name;
  }
}

TEST(Select, GibbsPrefersUniformPmf) {
  const Dataset pool = blank_pool(2);
  TableBelief belief({pmf2(0.9), pmf2(0.5)}, {0.0, 0.0});
  const std::vector<Index> c{0, 1};
  std::mt19937_64 rng(0);
  EXPECT_EQ(select(Policy::gibbs(), belief, pool, c, rng), 1);
}

TEST(Select, AverageCasePrefersBalancedRate) {
  const Dataset pool = blank_pool(3);
  TableBelief belief({pmf2(0.5), pmf2(0.5), pmf2(0.5)}, {0.0, 1.0 / 3.0, 0.9});
  EXPECT_NEAR(policy_score(Policy::average(), belief, pool[2]), 0.185, 1e-12);
  const std::vector<Index> c{0, 1, 2};
  std::mt19937_64 rng(0);
  EXPECT_EQ(select(Policy::average(), belief, pool, c, rng), 1);
  EXPECT_EQ(select(Policy::worst(), belief, pool, c, rng), 1);
}

TEST(Select, KnownRateOverridesBeliefRate) {
  const Dataset pool = blank_pool(2);
  TableBelief belief({pmf2(0.5), pmf2(0.5)}, {0.0, 0.9});
  const std::vector<Index> c{0, 1};
  std::mt19937_64 rng(0);
  EXPECT_EQ(select(Policy::average(), belief, pool, c, rng), 0);
  auto flipped = [](const Example& x) { return x.index == 0 ? 0.95 : 0.0; };
  EXPECT_EQ(select(Policy::average_known(flipped), belief, pool, c, rng), 1);
  EXPECT_EQ(select(Policy::worst_known(flipped), belief, pool, c, rng), 1);
}

TEST(Select, TiesGoToLowestIndexWhateverTheOrder) {
  const Dataset pool = blank_pool(4);
  TableBelief belief({pmf2(0.5), pmf2(0.5), pmf2(0.5), pmf2(0.5)}, {0.2, 0.2, 0.2, 0.2});
  const std::vector<Index> c{3, 1, 2};
  std::mt19937_64 rng(0);
  for (const Policy& p : {Policy::gibbs(), Policy::average(), Policy::worst()}) {
    EXPECT_EQ(select(p, belief, pool, c, rng), 1) << p.name();
  }
}

TEST(Select, PassiveDrawIgnoresEnumerationOrder) {
  const Dataset pool = blank_pool(10);
  std::vector<Eigen::VectorXd> pmfs(10, pmf2(0.5));
  TableBelief belief(pmfs, std::vector<double>(10, 0.0));
  std::vector<Index> a{0, 1, 2, 3, 4, 5, 6, 7, 8, 9};
  std::vector<Index> b{9, 3, 5, 1, 0, 8, 2, 7, 6, 4};
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    std::mt19937_64 r1(seed), r2(seed);
    EXPECT_EQ(select(Policy::passive(), belief, pool, a, r1), select(Policy::passive(), belief, pool, b, r2));
  }
}

TEST(Select, EmptyCandidatesRejected) {
  const Dataset pool = blank_pool(1);
  TableBelief belief({pmf2(0.5)}, {0.0});
  std::mt19937_64 rng(0);
  EXPECT_THROW(select(Policy::gibbs(), belief, pool, std::span<const Index>{}, rng), Error);
}

TEST(PolicyParsing, NamesRoundTripAndRateSources) {
  auto known = [](const Example&) { return 0.5; };
  for (const char* name : {"pl", "alg", "ala", "alw", "ala-known", "alw-known"}) {
    EXPECT_EQ(parse_policy(name, known).name(), name);
  }
  EXPECT_EQ(Policy::passive().rate_source(), RateSource::none);
  EXPECT_EQ(Policy::gibbs().rate_source(), RateSource::none);
  EXPECT_EQ(Policy::average().rate_source(), RateSource::learned);
  EXPECT_EQ(parse_policy("alw-known", known).rate_source(), RateSource::fixed);
  EXPECT_THROW(parse_policy("ala-known"), Error);
  EXPECT_THROW(parse_policy("bald"), Error);
}

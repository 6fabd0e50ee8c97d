#include "abstain_al/sim.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "abstain_al/map_models.hpp"

namespace abstain_al {

ScenarioKind parse_scenario(std::string_view name) {
  if (name == "unrelated") return ScenarioKind::unrelated;
  if (name == "easy") return ScenarioKind::easy;
  if (name == "hard") return ScenarioKind::hard;
  if (name == "stochastic") return ScenarioKind::stochastic;
  throw Error("bad_config", "unknown scenario '" + std::string(name) + "'");
}

std::string scenario_name(ScenarioKind kind) {
  switch (kind) {
    case ScenarioKind::unrelated: return "unrelated";
    case ScenarioKind::easy: return "easy";
    case ScenarioKind::hard: return "hard";
    case ScenarioKind::stochastic: return "stochastic";
  }
  return "?";
}

namespace {

std::vector<Label> true_labels(const Dataset& pool) {
  std::vector<Label> answers;
  answers.reserve(static_cast<std::size_t>(pool.size()));
  for (const Example& ex : pool.examples()) answers.push_back(ex.true_label);
  return answers;
}

Index abstain_count(double fraction, Index m) {
  if (!(fraction >= 0.0 && fraction <= 1.0)) throw Error("bad_input", "abstention fraction must be in [0, 1]");
  // Guard against q*m landing a rounding error above an integer.
  return std::min<Index>(m, static_cast<Index>(std::ceil(fraction * static_cast<double>(m) - 1e-9)));
}

SimulatedLabeler by_distance(const Dataset& pool, double fraction, double prior_variance, bool largest) {
  if (pool.redundant_count() > 0) throw Error("bad_input", "distance scenarios need a fully labeled pool");
  const std::vector<double> d = confidence_distance(pool, prior_variance);
  std::vector<Index> order(d.size());
  std::iota(order.begin(), order.end(), Index{0});
  std::stable_sort(order.begin(), order.end(), [&](Index a, Index b) {
    const double da = d[static_cast<std::size_t>(a)];
    const double db = d[static_cast<std::size_t>(b)];
    return largest ? da > db : da < db;
  });
  std::vector<Label> answers = true_labels(pool);
  const Index n = abstain_count(fraction, pool.size());
  for (Index i = 0; i < n; ++i) answers[static_cast<std::size_t>(order[static_cast<std::size_t>(i)])] = kAbstain;
  return SimulatedLabeler(std::move(answers));
}

}  // namespace

SimulatedLabeler make_unrelated(const Dataset& pool) {
  if (pool.redundant_count() == pool.size()) throw Error("bad_input", "pool has no target examples");
  std::vector<Label> answers = true_labels(pool);
  std::replace(answers.begin(), answers.end(), kRedundant, kAbstain);
  return SimulatedLabeler(std::move(answers));
}

std::vector<double> confidence_distance(const Dataset& pool, double prior_variance) {
  const int l = pool.labels().size();
  const std::size_t models = l == 2 ? 1 : static_cast<std::size_t>(l);
  std::vector<LinearModel> fitted;
  for (std::size_t c = 0; c < models; ++c) {
    const Label positive = l == 2 ? 2 : static_cast<Label>(c + 1);
    std::vector<BinarySample> samples;
    for (const Example& ex : pool.examples()) {
      if (!ex.redundant()) samples.push_back(BinarySample{ex.features, ex.true_label == positive ? 1 : 0});
    }
    fitted.push_back(fit_map(samples, pool.dimension(), prior_variance));
  }

  std::vector<double> d;
  d.reserve(static_cast<std::size_t>(pool.size()));
  for (const Example& ex : pool.examples()) {
    double top;
    if (l == 2) {
      const double p = predict_proba(fitted.front(), ex.features);
      top = std::max(p, 1.0 - p);
    } else {
      Eigen::VectorXd s(l);
      for (int c = 0; c < l; ++c) s[c] = predict_proba(fitted[static_cast<std::size_t>(c)], ex.features);
      top = s.maxCoeff() / s.sum();
    }
    d.push_back(std::abs(top - 0.5));
  }
  return d;
}

SimulatedLabeler make_easy_abstain(const Dataset& pool, double fraction, double prior_variance) {
  return by_distance(pool, fraction, prior_variance, true);
}

SimulatedLabeler make_hard_abstain(const Dataset& pool, double fraction, double prior_variance) {
  return by_distance(pool, fraction, prior_variance, false);
}

SimulatedLabeler make_stochastic(const Dataset& pool, const Eigen::VectorXd& rate, std::uint64_t seed) {
  if (rate.size() != pool.size()) throw Error("bad_input", "rate vector does not cover the pool");
  if ((rate.array() < 0).any() || (rate.array() > 1).any()) throw Error("bad_input", "rates must lie in [0, 1]");
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<Label> answers = true_labels(pool);
  for (Index i = 0; i < pool.size(); ++i) {
    if (u(rng) < rate[i] || pool[i].redundant()) answers[static_cast<std::size_t>(i)] = kAbstain;
  }
  return SimulatedLabeler(std::move(answers));
}

SimulatedLabeler make_labeler(const Dataset& pool, const Scenario& scenario) {
  switch (scenario.kind) {
    case ScenarioKind::unrelated: return make_unrelated(pool);
    case ScenarioKind::easy:
      return make_easy_abstain(pool, scenario.abstention_fraction, scenario.generator_prior_variance);
    case ScenarioKind::hard:
      return make_hard_abstain(pool, scenario.abstention_fraction, scenario.generator_prior_variance);
    case ScenarioKind::stochastic:
      return make_stochastic(pool, Eigen::VectorXd::Constant(pool.size(), scenario.abstention_fraction),
                             scenario.seed);
  }
  throw Error("bad_input", "unknown scenario");
}

}  // namespace abstain_al

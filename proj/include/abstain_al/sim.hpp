#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "abstain_al/types.hpp"

namespace abstain_al {

enum class ScenarioKind { unrelated, easy, hard, stochastic };

struct Scenario {
  ScenarioKind kind = ScenarioKind::unrelated;
  double abstention_fraction = 0.0;
  double generator_prior_variance = 0.5;
  std::uint64_t seed = 0;
};

ScenarioKind parse_scenario(std::string_view name);
std::string scenario_name(ScenarioKind kind);

/// Abstains exactly on the redundant examples.
SimulatedLabeler make_unrelated(const Dataset& pool);

/// |max_y p(y|x) - 0.5| under a MAP label model fit on the whole labeled pool.
/// For binary labels this is the distance of the prediction from 0.5.
std::vector<double> confidence_distance(const Dataset& pool, double prior_variance = 0.5);

/// Abstains on the ceil(q*m) examples farthest from the generator model's boundary.
SimulatedLabeler make_easy_abstain(const Dataset& pool, double fraction, double prior_variance = 0.5);

/// Abstains on the ceil(q*m) examples closest to the generator model's boundary.
SimulatedLabeler make_hard_abstain(const Dataset& pool, double fraction, double prior_variance = 0.5);

/// Draws k(x) ~ Bernoulli(rate[x]) once per example.
SimulatedLabeler make_stochastic(const Dataset& pool, const Eigen::VectorXd& rate, std::uint64_t seed);

/// Dispatches on scenario.kind; the stochastic scenario uses a constant rate.
SimulatedLabeler make_labeler(const Dataset& pool, const Scenario& scenario);

}  // namespace abstain_al

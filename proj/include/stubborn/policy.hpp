#pragma once

#include <string>
#include <variant>
#include <vector>

#include "stubborn/env.hpp"
#include "stubborn/network.hpp"

namespace stubborn {

struct ActionDistribution {
  double p_left = 0.5;
  double p_right() const { return 1.0 - p_left; }
  double prob(Action a) const { return a == Action::Left ? p_left : p_right(); }
};

struct AlwaysLeft {};
struct AlwaysRight {};
struct UniformRandom {};
/// Picks the side with the larger own estimate; exact ties are a fair coin.
struct GreedyEstimate {};
/// Greedy while the estimate gap exceeds margin and fewer than k disagreement
/// turns have passed; afterwards copies the partner's previous move.
struct ThresholdStubborn {
  int k = 2;
  double margin = 0.0;
};
struct Learned {
  PolicyParams params;
};

using PolicySpec =
    std::variant<AlwaysLeft, AlwaysRight, UniformRandom, GreedyEstimate, ThresholdStubborn, Learned>;

/// Short human-readable name ("greedy", "stubborn(k=2,margin=0)", ...).
std::string describe(const PolicySpec& policy);

ActionDistribution dist(const PolicySpec& policy, const Observation& obs);

struct SampledAction {
  Action action = Action::Left;
  double log_prob = 0.0;
};

SampledAction act(const PolicySpec& policy, const Observation& obs, RngStream& rng);

/// Gradient of log pi(action | obs) with respect to every parameter.
std::vector<double> logprob_grad(const PolicyParams& params, const Observation& obs, Action action);

double value(const PolicyParams& params, const Observation& obs);

/// Adapts a policy to the environment's Actor callback. The policy is copied.
Actor make_actor(PolicySpec policy);

}  // namespace stubborn

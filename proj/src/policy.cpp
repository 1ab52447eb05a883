#include "stubborn/policy.hpp"

#include <cmath>
#include <sstream>

#include "stubborn/errors.hpp"

namespace stubborn {

namespace {

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};

ActionDistribution greedy(const Observation& obs) {
  if (obs.est_left > obs.est_right) return {1.0};
  if (obs.est_left < obs.est_right) return {0.0};
  return {0.5};
}

void require_finite(const Observation& obs) {
  if (!std::isfinite(obs.est_left) || !std::isfinite(obs.est_right) ||
      !std::isfinite(obs.skirmish_turn_norm)) {
    throw NumericError("non-finite observation");
  }
}

}  // namespace

std::string describe(const PolicySpec& policy) {
  return std::visit(
      overloaded{
          [](const AlwaysLeft&) -> std::string { return "left"; },
          [](const AlwaysRight&) -> std::string { return "right"; },
          [](const UniformRandom&) -> std::string { return "uniform"; },
          [](const GreedyEstimate&) -> std::string { return "greedy"; },
          [](const ThresholdStubborn& s) -> std::string {
            std::ostringstream os;
            os << "stubborn(k=" << s.k << ",margin=" << s.margin << ")";
            return os.str();
          },
          [](const Learned& l) -> std::string {
            return "learned(hidden=" + std::to_string(l.params.hidden()) + ")";
          },
      },
      policy);
}

ActionDistribution dist(const PolicySpec& policy, const Observation& obs) {
  require_finite(obs);
  return std::visit(
      overloaded{
          [](const AlwaysLeft&) { return ActionDistribution{1.0}; },
          [](const AlwaysRight&) { return ActionDistribution{0.0}; },
          [](const UniformRandom&) { return ActionDistribution{0.5}; },
          [&](const GreedyEstimate&) { return greedy(obs); },
          [&](const ThresholdStubborn& s) {
            const double gap = std::abs(obs.est_left - obs.est_right);
            if (gap > s.margin && obs.skirmish_turn < s.k) return greedy(obs);
            if (obs.other_prev) return ActionDistribution{*obs.other_prev == Action::Left ? 1.0 : 0.0};
            return greedy(obs);
          },
          [&](const Learned& l) {
            const auto pass = forward(l.params, encode(l.params.encoding(), obs));
            return ActionDistribution{pass.probs[0]};
          },
      },
      policy);
}

SampledAction act(const PolicySpec& policy, const Observation& obs, RngStream& rng) {
  if (const auto* learned = std::get_if<Learned>(&policy)) {
    const auto pass = forward(learned->params, encode(learned->params.encoding(), obs));
    const Action a = rng.uniform() < pass.probs[0] ? Action::Left : Action::Right;
    return {a, pass.log_probs[a == Action::Left ? 0 : 1]};
  }
  const ActionDistribution d = dist(policy, obs);
  const Action a = rng.uniform() < d.p_left ? Action::Left : Action::Right;
  return {a, std::log(d.prob(a))};
}

std::vector<double> logprob_grad(const PolicyParams& params, const Observation& obs, Action action) {
  const auto pass = forward(params, encode(params.encoding(), obs));
  // d log softmax_a / d logit_k = [k == a] - p_k
  const std::size_t chosen = action == Action::Left ? 0 : 1;
  std::array<double, 2> dlogits{};
  for (std::size_t k = 0; k < 2; ++k) dlogits[k] = (k == chosen ? 1.0 : 0.0) - pass.probs[k];
  std::vector<double> grad(params.size(), 0.0);
  backward(params, pass, dlogits, 0.0, grad);
  for (double g : grad) {
    if (!std::isfinite(g)) throw NumericError("non-finite log-probability gradient");
  }
  return grad;
}

double value(const PolicyParams& params, const Observation& obs) {
  return forward(params, encode(params.encoding(), obs)).value;
}

Actor make_actor(PolicySpec policy) {
  return [policy = std::move(policy)](const Observation& obs, RngStream& rng) {
    return act(policy, obs, rng).action;
  };
}

}  // namespace stubborn

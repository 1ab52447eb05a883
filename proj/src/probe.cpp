#include "stubborn/probe.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "stubborn/errors.hpp"

namespace stubborn {

void ProbeSpec::validate() const {
  if (n_values.empty()) throw ConfigError("probe.n_values must not be empty");
  if (d_values.empty()) throw ConfigError("probe.d_values must not be empty");
  for (int n : n_values) {
    if (n < 0) throw ConfigError("probe.n_values must be >= 0");
  }
  for (double d : d_values) {
    if (!std::isfinite(d)) throw ConfigError("probe.d_values must be finite");
  }
  if (const auto* avg = std::get_if<AveragedBase>(&base_mode); avg && avg->samples < 1) {
    throw ConfigError("probe.samples must be >= 1");
  }
}

namespace {

double probe_handicap(const EnvConfig& env, Agent agent) {
  if (const auto* fixed = std::get_if<FixedHandicaps>(&env.handicap_mode)) {
    return agent == Agent::A ? fixed->a : fixed->b;
  }
  const auto& r = std::get<RandomizedHandicaps>(env.handicap_mode);
  return 0.5 * (r.min + r.max);
}

}  // namespace

Observation probe_observation(int n, double d, const ProbeSpec& spec, const EnvConfig& env,
                              Agent agent, double base_draw, bool mirrored) {
  if (n < 0) throw ConfigError("probe n must be >= 0");
  const double range = env.reward_high - env.reward_low;
  double mid = 0.5 * (env.reward_low + env.reward_high);
  if (std::holds_alternative<AveragedBase>(spec.base_mode)) {
    if (std::abs(d) > range) {
      throw ConfigError("probe d exceeds the reward range; no base keeps both estimates inside it");
    }
    mid = env.reward_low + 0.5 * std::abs(d) + base_draw * (range - std::abs(d));
  }

  Observation obs;
  // Keeps est_left - est_right == d exactly for symmetric probes.
  const double high = mid + 0.5 * d;
  const double low = high - d;
  obs.est_left = mirrored ? low : high;
  obs.est_right = mirrored ? high : low;
  obs.skirmish_turn = n;
  obs.skirmish_turn_norm = static_cast<double>(n) / static_cast<double>(env.turns_per_episode);
  if (n >= 1) {
    obs.own_prev = mirrored ? Action::Right : Action::Left;
    obs.other_prev = mirrored ? Action::Left : Action::Right;
  }
  if (env.observe_own_handicap) obs.own_handicap = probe_handicap(env, agent);
  return obs;
}

double measure_zeta(const PolicySpec& policy, int n, double d, const ProbeSpec& spec,
                    const EnvConfig& env, Agent agent) {
  auto at_base = [&](double base_draw) {
    const double left = dist(policy, probe_observation(n, d, spec, env, agent, base_draw)).p_left;
    if (!spec.mirror) return left;
    const double right =
        dist(policy, probe_observation(n, d, spec, env, agent, base_draw, true)).p_right();
    return 0.5 * (left + right);
  };

  if (const auto* avg = std::get_if<AveragedBase>(&spec.base_mode)) {
    RngStream rng(derive_seed(avg->seed, "probe-base"));
    double sum = 0.0;
    for (int i = 0; i < avg->samples; ++i) sum += at_base(rng.uniform());
    return sum / static_cast<double>(avg->samples);
  }
  return at_base(0.5);
}

double ZetaMatrix::at(Agent agent, int n, double d) const {
  for (const auto& e : entries[agent]) {
    if (e.n == n && e.d == d) return e.zeta;
  }
  throw std::out_of_range("zeta grid point not found");
}

ZetaMatrix zeta_sweep(const PolicySpec& policy_a, const PolicySpec& policy_b, const ProbeSpec& spec,
                      const EnvConfig& env, int generation) {
  spec.validate();
  ZetaMatrix m;
  m.generation = generation;
  m.spec = spec;
  for (Agent agent : {Agent::A, Agent::B}) {
    const PolicySpec& policy = agent == Agent::A ? policy_a : policy_b;
    for (double d : spec.d_values) {
      for (int n : spec.n_values) {
        m.entries[agent].push_back({n, d, measure_zeta(policy, n, d, spec, env, agent)});
      }
    }
  }
  return m;
}

namespace {

std::vector<double> ranks(const std::vector<double>& v) {
  std::vector<std::size_t> order(v.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](auto a, auto b) { return v[a] < v[b]; });
  std::vector<double> r(v.size());
  std::size_t i = 0;
  while (i < order.size()) {
    std::size_t j = i;
    while (j + 1 < order.size() && v[order[j + 1]] == v[order[i]]) ++j;
    const double avg = 0.5 * static_cast<double>(i + j) + 1.0;
    for (std::size_t k = i; k <= j; ++k) r[order[k]] = avg;
    i = j + 1;
  }
  return r;
}

}  // namespace

double spearman(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size()) throw std::invalid_argument("spearman: length mismatch");
  const std::size_t n = x.size();
  if (n < 2) return 0.0;
  const auto rx = ranks(x);
  const auto ry = ranks(y);
  const double mean = 0.5 * static_cast<double>(n + 1);
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    sxy += (rx[i] - mean) * (ry[i] - mean);
    sxx += (rx[i] - mean) * (rx[i] - mean);
    syy += (ry[i] - mean) * (ry[i] - mean);
  }
  if (sxx == 0.0 || syy == 0.0) return 0.0;
  return sxy / std::sqrt(sxx * syy);
}

}  // namespace stubborn

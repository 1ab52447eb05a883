#include "stubborn/env.hpp"

#include <cmath>
#include <string>

#include "stubborn/errors.hpp"

namespace stubborn {

std::string_view to_string(Event e) {
  switch (e) {
    case Event::AgreeLeft: return "AgreeLeft";
    case Event::AgreeRight: return "AgreeRight";
    case Event::Disagree: return "Disagree";
    case Event::TiebreakLeft: return "TiebreakLeft";
    case Event::TiebreakRight: return "TiebreakRight";
  }
  return "?";
}

std::optional<Event> parse_event(std::string_view s) {
  for (Event e : {Event::AgreeLeft, Event::AgreeRight, Event::Disagree, Event::TiebreakLeft,
                  Event::TiebreakRight}) {
    if (to_string(e) == s) return e;
  }
  return std::nullopt;
}

char to_char(Action a) { return a == Action::Left ? 'L' : 'R'; }

void EnvConfig::validate() const {
  if (turns_per_episode < 1) throw ConfigError("env.turns_per_episode must be >= 1");
  if (!std::isfinite(reward_low) || !std::isfinite(reward_high) || !(reward_low < reward_high)) {
    throw ConfigError("env.reward_low must be < env.reward_high");
  }
  if (const auto* fixed = std::get_if<FixedHandicaps>(&handicap_mode)) {
    if (!(fixed->a >= 0.0) || !(fixed->b >= 0.0) || !std::isfinite(fixed->a) ||
        !std::isfinite(fixed->b)) {
      throw ConfigError("env.handicap_a and env.handicap_b must be finite and >= 0");
    }
  } else {
    const auto& r = std::get<RandomizedHandicaps>(handicap_mode);
    if (!(r.min >= 0.0) || !std::isfinite(r.max) || !(r.min <= r.max)) {
      throw ConfigError("env.handicap_min must satisfy 0 <= handicap_min <= handicap_max");
    }
  }
}

EpisodeState new_episode(const EnvConfig& config, std::uint64_t seed) {
  config.validate();
  EpisodeState ep;
  ep.config = config;
  ep.rng = RngStreams(seed);
  if (const auto* fixed = std::get_if<FixedHandicaps>(&config.handicap_mode)) {
    ep.handicaps[Agent::A] = fixed->a;
    ep.handicaps[Agent::B] = fixed->b;
  } else {
    const auto& r = std::get<RandomizedHandicaps>(config.handicap_mode);
    auto& s = ep.rng[Stream::Handicaps];
    ep.handicaps[Agent::A] = s.uniform(r.min, r.max);
    ep.handicaps[Agent::B] = s.uniform(r.min, r.max);
  }
  ep.current = begin_skirmish(ep);
  return ep;
}

SkirmishState begin_skirmish(EpisodeState& ep) {
  const auto& cfg = ep.config;
  SkirmishState s;
  auto& rewards = ep.rng[Stream::Rewards];
  s.true_left = rewards.uniform(cfg.reward_low, cfg.reward_high);
  s.true_right = rewards.uniform(cfg.reward_low, cfg.reward_high);

  auto draw = [&](Agent agent, Stream stream) {
    auto& r = ep.rng[stream];
    const double h = ep.handicaps[agent];
    s.est[agent].left = r.normal(s.true_left, h);
    s.est[agent].right = r.normal(s.true_right, h);
  };
  draw(Agent::A, Stream::EstimatesA);
  draw(Agent::B, Stream::EstimatesB);
  return s;
}

Observation observe(const EpisodeState& ep, Agent agent) {
  if (ep.ended()) throw InvalidStateError("observe called after the episode ended");
  const auto& s = ep.current;
  Observation obs;
  obs.est_left = s.est[agent].left;
  obs.est_right = s.est[agent].right;
  obs.own_prev = s.prev_action[agent];
  obs.other_prev = s.prev_action[other(agent)];
  obs.skirmish_turn = s.turn_in_skirmish;
  obs.skirmish_turn_norm =
      static_cast<double>(s.turn_in_skirmish) / static_cast<double>(ep.config.turns_per_episode);
  if (ep.config.observe_own_handicap) obs.own_handicap = ep.handicaps[agent];
  return obs;
}

TurnOutcome step(EpisodeState& ep, Action action_a, Action action_b) {
  if (ep.ended()) throw InvalidStateError("step called after the episode ended");
  auto& s = ep.current;
  TurnOutcome out;

  if (action_a == action_b) {
    out.event = action_a == Action::Left ? Event::AgreeLeft : Event::AgreeRight;
  } else {
    const auto& prev = s.prev_action;
    const bool both_switched = prev[Agent::A].has_value() && prev[Agent::B].has_value() &&
                               *prev[Agent::A] != action_a && *prev[Agent::B] != action_b;
    if (both_switched) {
      const bool left = ep.rng[Stream::Tiebreak].uniform() < 0.5;
      out.event = left ? Event::TiebreakLeft : Event::TiebreakRight;
    } else {
      out.event = Event::Disagree;
    }
  }

  switch (out.event) {
    case Event::AgreeLeft:
    case Event::TiebreakLeft: out.reward = s.true_left; break;
    case Event::AgreeRight:
    case Event::TiebreakRight: out.reward = s.true_right; break;
    case Event::Disagree: out.reward = 0.0; break;
  }

  ep.turn_index += 1;
  ep.cumulative_reward[Agent::A] += out.reward;
  ep.cumulative_reward[Agent::B] += out.reward;
  out.episode_ended = ep.ended();

  if (out.event == Event::Disagree) {
    s.turn_in_skirmish += 1;
    s.prev_action[Agent::A] = action_a;
    s.prev_action[Agent::B] = action_b;
  } else {
    out.skirmish_ended = true;
    if (!out.episode_ended) {
      ep.skirmish_index += 1;
      ep.current = begin_skirmish(ep);
    }
  }
  return out;
}

TurnRecord play_turn(EpisodeState& ep, Action action_a, Action action_b) {
  TurnRecord rec;
  rec.turn_index = ep.turn_index;
  rec.skirmish_index = ep.skirmish_index;
  rec.turn_in_skirmish = ep.current.turn_in_skirmish;
  rec.true_left = ep.current.true_left;
  rec.true_right = ep.current.true_right;
  rec.est_a = ep.current.est[Agent::A];
  rec.est_b = ep.current.est[Agent::B];
  rec.action_a = action_a;
  rec.action_b = action_b;
  const TurnOutcome out = step(ep, action_a, action_b);
  rec.event = out.event;
  rec.reward = out.reward;
  return rec;
}

EpisodeTrace run_episode(const EnvConfig& config, std::uint64_t seed, const Actor& policy_a,
                         const Actor& policy_b, const Recorder& recorder) {
  EpisodeState ep = new_episode(config, seed);
  EpisodeTrace trace;
  trace.turns.reserve(static_cast<std::size_t>(config.turns_per_episode));
  while (!ep.ended()) {
    // Both observations are taken before either action is applied.
    const Observation obs_a = observe(ep, Agent::A);
    const Observation obs_b = observe(ep, Agent::B);
    const Action a = policy_a(obs_a, ep.rng[Stream::PolicyA]);
    const Action b = policy_b(obs_b, ep.rng[Stream::PolicyB]);

    const TurnRecord rec = play_turn(ep, a, b);
    if (recorder) recorder(rec);
    trace.turns.push_back(rec);
  }
  trace.total_reward = ep.cumulative_reward[Agent::A];
  return trace;
}

}  // namespace stubborn

#pragma once

// Stubborn: a two-agent, fully cooperative game with private noisy
// estimates of two rewards. Both agents pick Left or Right simultaneously;
// matching picks pay the true value of that side to both, mismatches pay
// zero and the skirmish continues.

#include <array>
#include <cstdint>
#include <functional>
#include <optional>
#include <string_view>
#include <variant>
#include <vector>

#include "stubborn/rng.hpp"

namespace stubborn {

enum class Agent : std::size_t { A = 0, B = 1 };
enum class Action : std::uint8_t { Left, Right };

enum class Event : std::uint8_t { AgreeLeft, AgreeRight, Disagree, TiebreakLeft, TiebreakRight };

inline Action opposite(Action a) { return a == Action::Left ? Action::Right : Action::Left; }
inline Agent other(Agent a) { return a == Agent::A ? Agent::B : Agent::A; }

std::string_view to_string(Event e);
std::optional<Event> parse_event(std::string_view s);
char to_char(Action a);

/// Value held once per agent, indexed by Agent.
template <typename T>
struct PerAgent {
  std::array<T, 2> values{};

  T& operator[](Agent a) { return values[static_cast<std::size_t>(a)]; }
  const T& operator[](Agent a) const { return values[static_cast<std::size_t>(a)]; }
  bool operator==(const PerAgent&) const = default;
};

/// Both agents' estimate noise fixed for every episode.
struct FixedHandicaps {
  double a = 2.0;
  double b = 2.0;
  bool operator==(const FixedHandicaps&) const = default;
};

/// Each agent's noise drawn uniformly in [min, max] once per episode.
struct RandomizedHandicaps {
  double min = 1.0;
  double max = 5.0;
  bool operator==(const RandomizedHandicaps&) const = default;
};

using HandicapMode = std::variant<FixedHandicaps, RandomizedHandicaps>;

struct EnvConfig {
  int turns_per_episode = 40;
  double reward_low = 0.0;
  double reward_high = 10.0;
  // Handicap = standard deviation of an agent's estimate noise.
  HandicapMode handicap_mode = FixedHandicaps{};
  bool observe_own_handicap = false;
  // Learned policies drop own_prev and skirmish_turn_norm from their inputs.
  bool strict_observation = false;
  std::uint64_t seed = 0;

  /// Throws ConfigError naming the first violated constraint.
  void validate() const;
  bool operator==(const EnvConfig&) const = default;
};

struct Estimates {
  double left = 0.0;
  double right = 0.0;
  bool operator==(const Estimates&) const = default;
};

struct SkirmishState {
  double true_left = 0.0;
  double true_right = 0.0;
  PerAgent<Estimates> est;
  // Completed disagreement turns in this skirmish.
  int turn_in_skirmish = 0;
  // Absent exactly when turn_in_skirmish == 0.
  PerAgent<std::optional<Action>> prev_action;

  bool operator==(const SkirmishState&) const = default;
};

struct EpisodeState {
  EnvConfig config;
  int turn_index = 0;
  int skirmish_index = 0;
  PerAgent<double> cumulative_reward;
  SkirmishState current;
  PerAgent<double> handicaps;
  RngStreams rng{0};

  bool ended() const { return turn_index >= config.turns_per_episode; }
  bool operator==(const EpisodeState&) const = default;
};

struct Observation {
  double est_left = 0.0;
  double est_right = 0.0;
  std::optional<Action> own_prev;
  std::optional<Action> other_prev;
  // turn_in_skirmish / turns_per_episode
  double skirmish_turn_norm = 0.0;
  // Raw disagreement count; scripted policies read this, learned ones see the normalized form.
  int skirmish_turn = 0;
  std::optional<double> own_handicap;

  bool operator==(const Observation&) const = default;
};

struct TurnOutcome {
  Event event = Event::Disagree;
  double reward = 0.0;
  bool skirmish_ended = false;
  bool episode_ended = false;
};

/// Everything known about one environment step, captured before the step mutates state.
struct TurnRecord {
  int turn_index = 0;
  int skirmish_index = 0;
  int turn_in_skirmish = 0;
  double true_left = 0.0;
  double true_right = 0.0;
  Estimates est_a;
  Estimates est_b;
  Action action_a = Action::Left;
  Action action_b = Action::Left;
  Event event = Event::Disagree;
  double reward = 0.0;

  bool operator==(const TurnRecord&) const = default;
};

EpisodeState new_episode(const EnvConfig& config, std::uint64_t seed);

/// Draws fresh true rewards and the four estimates from the episode's substreams.
SkirmishState begin_skirmish(EpisodeState& ep);

/// Pure read of the agent's view; throws InvalidStateError after the episode ended.
Observation observe(const EpisodeState& ep, Agent agent);

/// Advances one simultaneous turn.
TurnOutcome step(EpisodeState& ep, Action action_a, Action action_b);

/// step() plus a snapshot of the pre-step state.
TurnRecord play_turn(EpisodeState& ep, Action action_a, Action action_b);

/// Samples an action for an observation using the given stream.
using Actor = std::function<Action(const Observation&, RngStream&)>;
using Recorder = std::function<void(const TurnRecord&)>;

struct EpisodeTrace {
  std::vector<TurnRecord> turns;
  double total_reward = 0.0;
};

/// Plays all turns_per_episode turns. Agent A samples from the policy-a
/// substream and agent B from policy-b.
EpisodeTrace run_episode(const EnvConfig& config, std::uint64_t seed, const Actor& policy_a,
                         const Actor& policy_b, const Recorder& recorder = {});

}  // namespace stubborn

#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <vector>

#include "stubborn/env.hpp"
#include "stubborn/network.hpp"
#include "stubborn/policy.hpp"
#include "stubborn/probe.hpp"
#include "stubborn/telemetry.hpp"

namespace stubborn {

struct TrainConfig {
  int generations = 300;
  int episodes_per_generation = 16;
  double gamma = 0.99;
  double gae_lambda = 0.95;
  double clip = 0.2;
  double learning_rate = 1e-3;
  int epochs_per_generation = 4;
  int minibatch_count = 4;
  double entropy_coefficient = 0.01;
  double value_coefficient = 0.5;
  int hidden = 32;
  std::vector<std::uint64_t> seeds{7};
  // zeta sweep every probe_interval generations (and on the last one).
  int probe_interval = 1;
  // Checkpoints every checkpoint_interval generations (and on the last one).
  int checkpoint_interval = 50;
  bool write_traces = true;
  // Worker threads for episode collection; results do not depend on it.
  int jobs = 1;

  void validate() const;
  bool operator==(const TrainConfig&) const = default;
};

struct RolloutStep {
  std::vector<double> features;
  Action action = Action::Left;
  double log_prob = 0.0;
  double reward = 0.0;
  double value = 0.0;
  // Last step of its episode.
  bool episode_end = false;
};

/// One agent's experience for a generation, episodes stored contiguously.
struct RolloutBatch {
  std::vector<RolloutStep> steps;
  int episodes = 0;
};

struct LossReport {
  double surrogate = 0.0;
  double value_loss = 0.0;
  double entropy = 0.0;
  double total = 0.0;
};

struct GenerationReport {
  int generation = 0;
  double mean_episode_reward = 0.0;
  double mean_skirmish_length = 0.0;
  double agreement_rate = 0.0;
  PerAgent<LossReport> losses;
};

struct Collected {
  RolloutBatch batch_a;
  RolloutBatch batch_b;
  GenerationReport report;
  // Every step in episode order; generation field left at 0 for the caller to set.
  std::vector<TraceRecord> records;
};

/// Seed of episode `episode` within a generation.
std::uint64_t episode_seed(std::uint64_t generation_seed, int episode);

Collected collect(const EnvConfig& env, const TrainConfig& train, const PolicyParams& params_a,
                  const PolicyParams& params_b, std::uint64_t generation_seed);

struct Advantages {
  std::vector<double> raw;         // GAE before normalization
  std::vector<double> normalized;  // zero mean, unit variance (variance floor 1e-8)
  std::vector<double> returns;     // discounted return-to-go within each episode
};

/// Throws InvalidStateError on an empty batch.
Advantages advantages(const RolloutBatch& batch, double gamma, double lambda);

/// First-order adaptive-moment optimizer state for one parameter vector.
class Adam {
 public:
  Adam() = default;
  explicit Adam(std::size_t size) : m_(size, 0.0), v_(size, 0.0) {}

  void step(std::span<double> theta, std::span<const double> grad, double lr);
  long steps() const { return t_; }

  static constexpr double kBeta1 = 0.9;
  static constexpr double kBeta2 = 0.999;
  static constexpr double kEps = 1e-8;

 private:
  std::vector<double> m_;
  std::vector<double> v_;
  long t_ = 0;
};

/// Clipped-surrogate update over shuffled minibatches. Minibatch order is
/// drawn from `shuffle`; optimizer state is carried in `adam`.
/// Throws NumericError when a minibatch loss is non-finite.
LossReport update(PolicyParams& params, Adam& adam, const RolloutBatch& batch,
                  const Advantages& adv, const TrainConfig& train, RngStream& shuffle);

struct TrainResult {
  std::vector<GenerationReport> reports;
  std::vector<ZetaMatrix> zetas;
  PolicyParams params_a;
  PolicyParams params_b;
};

/// Called after each generation's metrics are final.
using GenerationCallback = std::function<void(const GenerationReport&, const MetricsRow&)>;

/// Self-play training of two independent policies from `seed`. When
/// `out_dir` is set, writes metrics, traces, zeta CSVs, checkpoints and
/// charts there.
TrainResult train(const EnvConfig& env, const TrainConfig& train, const ProbeSpec& probe,
                  std::uint64_t seed, const std::optional<std::filesystem::path>& out_dir = {},
                  const GenerationCallback& on_generation = {});

}  // namespace stubborn

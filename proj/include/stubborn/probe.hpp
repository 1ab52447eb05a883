#pragma once

// Counterfactual stubbornness probe. zeta(n, d) is the probability that an
// agent picks Left when its own estimates favour Left by d points and the
// last n turns were spent disagreeing with it on Left and the partner on
// Right. It is read off the policy's action distribution, not sampled.

#include <cstdint>
#include <variant>
#include <vector>

#include "stubborn/env.hpp"
#include "stubborn/policy.hpp"

namespace stubborn {

/// Estimates centred on the reward midpoint: (mid + d/2, mid - d/2).
struct SymmetricBase {
  bool operator==(const SymmetricBase&) const = default;
};

/// Midpoint drawn uniformly so both estimates stay inside the reward range;
/// zeta is the mean over the draws.
struct AveragedBase {
  int samples = 64;
  std::uint64_t seed = 0;
  bool operator==(const AveragedBase&) const = default;
};

using BaseMode = std::variant<SymmetricBase, AveragedBase>;

struct ProbeSpec {
  std::vector<int> n_values{0, 1, 2, 3, 4};
  std::vector<double> d_values{5.0};
  BaseMode base_mode = SymmetricBase{};
  // Average with the right-preferring mirror image of each probe.
  bool mirror = false;

  void validate() const;
  bool operator==(const ProbeSpec&) const = default;
};

/// What the probed agent would observe after n forced disagreement turns.
///
/// base_draw in [0, 1) places the midpoint in averaged mode and is ignored
/// in symmetric mode. A mirrored probe swaps the estimates and the
/// previous actions. Throws ConfigError when averaged mode cannot fit d
/// inside the reward range.
Observation probe_observation(int n, double d, const ProbeSpec& spec, const EnvConfig& env,
                              Agent agent, double base_draw = 0.5, bool mirrored = false);

double measure_zeta(const PolicySpec& policy, int n, double d, const ProbeSpec& spec,
                    const EnvConfig& env, Agent agent);

struct ZetaEntry {
  int n = 0;
  double d = 0.0;
  double zeta = 0.0;
  bool operator==(const ZetaEntry&) const = default;
};

struct ZetaMatrix {
  int generation = 0;
  ProbeSpec spec;
  // Grid order: d outer, n inner.
  PerAgent<std::vector<ZetaEntry>> entries;

  /// Throws std::out_of_range when (n, d) is not on the grid.
  double at(Agent agent, int n, double d) const;
};

ZetaMatrix zeta_sweep(const PolicySpec& policy_a, const PolicySpec& policy_b, const ProbeSpec& spec,
                      const EnvConfig& env, int generation = 0);

/// Spearman rank correlation with average ranks for ties. Returns 0 when
/// either series is constant.
double spearman(const std::vector<double>& x, const std::vector<double>& y);

}  // namespace stubborn

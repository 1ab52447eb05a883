#pragma once

#include <algorithm>
#include <array>
#include <cstdint>
#include <random>
#include <string_view>

namespace stubborn {

/// Mixes a 64-bit value (splitmix64 finalizer).
std::uint64_t mix64(std::uint64_t x);

/// Derives a child seed from a parent seed and a stream name.
std::uint64_t derive_seed(std::uint64_t parent, std::string_view name);
std::uint64_t derive_seed(std::uint64_t parent, std::uint64_t index);

/// One independent pseudo-random stream.
class RngStream {
 public:
  RngStream() : engine_(0) {}
  explicit RngStream(std::uint64_t seed) : engine_(seed) {}

  /// Uniform in [0, 1).
  double uniform();
  double uniform(double low, double high);
  /// Normal draw; a zero standard deviation returns the mean without consuming the stream.
  double normal(double mean, double stddev);
  std::uint64_t next() { return engine_(); }

  template <typename It>
  void shuffle(It first, It last) {
    std::shuffle(first, last, engine_);
  }

  bool operator==(const RngStream&) const = default;

 private:
  std::mt19937_64 engine_;
};

enum class Stream : std::size_t {
  Rewards,
  EstimatesA,
  EstimatesB,
  Tiebreak,
  Handicaps,
  PolicyA,
  PolicyB,
};

inline constexpr std::size_t kStreamCount = 7;

std::string_view stream_name(Stream s);

/// Named substreams for one episode. Consumers draw only from their own
/// stream, so adding draws in one never shifts another.
class RngStreams {
 public:
  explicit RngStreams(std::uint64_t seed);

  RngStream& operator[](Stream s) { return streams_[static_cast<std::size_t>(s)]; }
  const RngStream& operator[](Stream s) const { return streams_[static_cast<std::size_t>(s)]; }

  bool operator==(const RngStreams&) const = default;

 private:
  std::array<RngStream, kStreamCount> streams_;
};

}  // namespace stubborn

#include "stubborn/rng.hpp"

#include <algorithm>

namespace stubborn {

std::uint64_t mix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

std::uint64_t derive_seed(std::uint64_t parent, std::string_view name) {
  // FNV-1a over the name, then mixed with the parent.
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : name) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return mix64(mix64(parent) ^ h);
}

std::uint64_t derive_seed(std::uint64_t parent, std::uint64_t index) {
  return mix64(mix64(parent) ^ mix64(index + 0x632be59bd9b4e019ULL));
}

double RngStream::uniform() {
  // 53 random bits -> [0, 1)
  return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
}

double RngStream::uniform(double low, double high) {
  return low + (high - low) * uniform();
}

double RngStream::normal(double mean, double stddev) {
  if (stddev == 0.0) return mean;
  return std::normal_distribution<double>(mean, stddev)(engine_);
}

std::string_view stream_name(Stream s) {
  switch (s) {
    case Stream::Rewards: return "rewards";
    case Stream::EstimatesA: return "estimates-a";
    case Stream::EstimatesB: return "estimates-b";
    case Stream::Tiebreak: return "tie-break";
    case Stream::Handicaps: return "handicaps";
    case Stream::PolicyA: return "policy-a";
    case Stream::PolicyB: return "policy-b";
  }
  return "unknown";
}

RngStreams::RngStreams(std::uint64_t seed) {
  for (std::size_t i = 0; i < kStreamCount; ++i) {
    streams_[i] = RngStream(derive_seed(seed, stream_name(static_cast<Stream>(i))));
  }
}

}  // namespace stubborn

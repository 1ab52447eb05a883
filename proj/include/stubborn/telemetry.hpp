#pragma once

// Run artifacts:
//   <run>/traces-gen<G>.jsonl   one JSON object per environment step
//   <run>/metrics.csv           one row per generation
//   <run>/zeta-gen<G>.csv       probe grid for generation G
//   <run>/ckpt-gen<G>-{a,b}.bin policy parameters after generation G's update
//
// Checkpoint layout (little-endian):
//   magic "STBK" | u32 version | f64 estimate_scale | f64 handicap_scale |
//   u8 include_history | u8 include_handicap | i32 inputs | i32 hidden |
//   u64 count | f64 theta[count]

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "stubborn/env.hpp"
#include "stubborn/network.hpp"
#include "stubborn/probe.hpp"

namespace stubborn {

struct TraceRecord {
  int episode_id = 0;
  int generation = 0;
  TurnRecord turn;
  bool operator==(const TraceRecord&) const = default;
};

std::string serialize(const TraceRecord& record);
/// Throws FormatError on a malformed line.
TraceRecord parse_trace_line(const std::string& line);

/// Append-only JSONL writer. Lines are buffered and flushed at episode end.
class TraceSink {
 public:
  explicit TraceSink(const std::filesystem::path& path);
  void append(const TraceRecord& record);
  void end_episode();
  std::size_t lines() const { return lines_; }

 private:
  std::filesystem::path path_;
  std::ofstream out_;
  std::size_t lines_ = 0;
};

void append_trace(TraceSink& sink, const TraceRecord& record);

std::vector<TraceRecord> read_traces(const std::filesystem::path& path);

/// Aggregates recomputed from trace records of one generation.
struct TraceSummary {
  int episodes = 0;
  int turns = 0;
  int skirmishes = 0;
  int agreements = 0;
  double mean_episode_reward = 0.0;
  double mean_skirmish_length = 0.0;
  // Fraction of turns on which both agents picked the same side.
  double agreement_rate = 0.0;
};

/// Records must be grouped by episode, each episode's turns in order.
TraceSummary summarize(std::span<const TraceRecord> records);

struct MetricsRow {
  int generation = 0;
  double mean_episode_reward = 0.0;
  double mean_skirmish_length = 0.0;
  double agreement_rate = 0.0;
  double loss_a = 0.0;
  double loss_b = 0.0;
  double entropy_a = 0.0;
  double entropy_b = 0.0;
  std::optional<ZetaMatrix> zeta;
};

/// Six significant digits, the format used for every real in metrics files.
std::string format_real(double v);

std::vector<std::string> metrics_header(const ProbeSpec& spec);
std::string format_metrics_row(const MetricsRow& row, const ProbeSpec& spec);

void write_metrics(std::span<const MetricsRow> rows, const ProbeSpec& spec,
                   const std::filesystem::path& path);

/// Streams rows as they are produced so an aborted run keeps what it had.
class MetricsWriter {
 public:
  MetricsWriter(const std::filesystem::path& path, ProbeSpec spec);
  void write(const MetricsRow& row);

 private:
  ProbeSpec spec_;
  std::ofstream out_;
};

/// A CSV read back as strings, keyed by header name.
struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  std::optional<std::size_t> column(const std::string& name) const;
};

CsvTable read_csv(const std::filesystem::path& path);

/// Standalone per-probe CSV: agent,n,d,zeta
void write_zeta_csv(const ZetaMatrix& zeta, const std::filesystem::path& path);

inline constexpr char kCheckpointMagic[4] = {'S', 'T', 'B', 'K'};
inline constexpr std::uint32_t kCheckpointVersion = 1;

void save_checkpoint(const PolicyParams& params, const std::filesystem::path& path);
/// Throws IoError when unreadable and FormatError on bad magic, version or layout.
PolicyParams load_checkpoint(const std::filesystem::path& path);

std::filesystem::path trace_path(const std::filesystem::path& run, int generation);
std::filesystem::path checkpoint_path(const std::filesystem::path& run, int generation, Agent agent);
std::filesystem::path zeta_path(const std::filesystem::path& run, int generation);

}  // namespace stubborn

#include <gtest/gtest.h>

#include <algorithm>
#include <cstring>
#include <fstream>
#include <regex>
#include <sstream>

#include "stubborn/chart.hpp"
#include "stubborn/errors.hpp"
#include "stubborn/policy.hpp"
#include "stubborn/telemetry.hpp"
#include "test_util.hpp"

namespace stubborn {
namespace {

using testing::slurp;
using testing::TempDir;

std::vector<TraceRecord> play(int episodes, const PolicySpec& a, const PolicySpec& b,
                              std::uint64_t seed, int generation = 0) {
  std::vector<TraceRecord> out;
  for (int e = 0; e < episodes; ++e) {
    const EpisodeTrace t = run_episode(EnvConfig{}, seed + e, make_actor(a), make_actor(b));
    for (const auto& turn : t.turns) out.push_back({e, generation, turn});
  }
  return out;
}

std::size_t count_lines(const std::filesystem::path& p) {
  std::ifstream in(p);
  std::size_t n = 0;
  for (std::string line; std::getline(in, line);) ++n;
  return n;
}

TEST(Trace, SerializedKeysInFixedOrder) {
  TraceRecord r;
  r.episode_id = 3;
  r.generation = 2;
  r.turn.turn_index = 5;
  r.turn.true_left = 1.25;
  r.turn.action_b = Action::Right;
  r.turn.event = Event::TiebreakRight;
  const std::string line = serialize(r);
  EXPECT_EQ(line.find('\n'), std::string::npos);
  const std::vector<std::string> keys{"episode_id", "generation", "turn_index", "skirmish_index",
                                      "turn_in_skirmish", "true_left", "true_right", "est_a_left",
                                      "est_a_right", "est_b_left", "est_b_right", "action_a", "action_b", "event", "reward"};
  std::size_t pos = 0;
  for (const auto& k : keys) {
    const auto at = line.find("\"" + k + "\"", pos);
    ASSERT_NE(at, std::string::npos) << k;
    pos = at;
  }
  EXPECT_NE(line.find("\"action_b\":\"R\""), std::string::npos);
  EXPECT_NE(line.find("\"event\":\"TiebreakRight\""), std::string::npos);
}

TEST(Trace, RoundTripIsExact) {
  for (const auto& r : play(3, GreedyEstimate{}, UniformRandom{}, 40)) {
    EXPECT_EQ(parse_trace_line(serialize(r)), r);
  }
}

TEST(Trace, MalformedLinesRejected) {
  EXPECT_THROW(parse_trace_line("not json"), FormatError);
  EXPECT_THROW(parse_trace_line("{\"episode_id\":1}"), FormatError);
  TraceRecord r;
  std::string line = serialize(r);
  line.replace(line.find("\"L\""), 3, "\"X\"");
  EXPECT_THROW(parse_trace_line(line), FormatError);
}

TEST(Trace, SinkWritesOneLinePerTurn) {
  TempDir dir("trace");
  const auto records = play(4, UniformRandom{}, UniformRandom{}, 1);
  const auto path = dir.path() / "t.jsonl";
  {
    TraceSink sink(path);
    for (std::size_t i = 0; i < records.size(); ++i) {
      append_trace(sink, records[i]);
      if ((i + 1) % 40 == 0) sink.end_episode();
    }
    EXPECT_EQ(sink.lines(), 160u);
  }
  EXPECT_EQ(count_lines(path), 160u);
  EXPECT_EQ(read_traces(path), records);
}

TEST(Summarize, CountsFromHandBuiltRecords) {
  // Episode 0: disagree, agree (skirmish 0), agree (skirmish 1). Episode 1: one disagreement.
  auto rec = [](int ep, int skirmish, Event ev, double reward) {
    TraceRecord r;
    r.episode_id = ep;
    r.turn.skirmish_index = skirmish;
    r.turn.event = ev;
    r.turn.reward = reward;
    return r;
  };
  const std::vector<TraceRecord> rs{rec(0, 0, Event::Disagree, 0), rec(0, 0, Event::AgreeLeft, 6),
                                    rec(0, 1, Event::TiebreakRight, 4),
                                    rec(1, 0, Event::Disagree, 0)};
  const TraceSummary s = summarize(rs);
  EXPECT_EQ(s.episodes, 2);
  EXPECT_EQ(s.turns, 4);
  EXPECT_EQ(s.skirmishes, 3);
  EXPECT_EQ(s.agreements, 1);
  EXPECT_DOUBLE_EQ(s.mean_episode_reward, 5.0);
  EXPECT_DOUBLE_EQ(s.mean_skirmish_length, 4.0 / 3.0);
  EXPECT_DOUBLE_EQ(s.agreement_rate, 0.25);
}

TEST(Summarize, EmptyIsZero) {
  const TraceSummary s = summarize({});
  EXPECT_EQ(s.episodes, 0);
  EXPECT_EQ(s.mean_episode_reward, 0.0);
}

TEST(Metrics, HeaderAndRowShape) {
  ProbeSpec spec;
  spec.n_values = {0, 1};
  spec.d_values = {2.5};
  const auto header = metrics_header(spec);
  const std::vector<std::string> expected{
      "generation", "mean_episode_reward", "mean_skirmish_length", "agreement_rate",
      "loss_a",     "loss_b",              "entropy_a",            "entropy_b",
      "zeta_a_n0_d2.5", "zeta_a_n1_d2.5", "zeta_b_n0_d2.5", "zeta_b_n1_d2.5"};
  EXPECT_EQ(header, expected);

  MetricsRow row;
  row.generation = 4;
  row.mean_episode_reward = 1.0 / 3.0;
  EXPECT_EQ(format_metrics_row(row, spec), "4,0.333333,0,0,0,0,0,0,,,,");
  row.zeta = zeta_sweep(GreedyEstimate{}, UniformRandom{}, spec, EnvConfig{});
  EXPECT_EQ(format_metrics_row(row, spec), "4,0.333333,0,0,0,0,0,0,1,1,0.5,0.5");
}

TEST(Metrics, FormatReal) {
  EXPECT_EQ(format_real(200.0), "200");
  EXPECT_EQ(format_real(6.666666666), "6.66667");
  EXPECT_EQ(format_real(1e-7), "1e-07");
}

TEST(Metrics, FileHasHeaderPlusOneLinePerRow) {
  TempDir dir("metrics");
  std::vector<MetricsRow> rows(300);
  for (int g = 0; g < 300; ++g) {
    rows[g].generation = g;
    rows[g].mean_episode_reward = g * 0.5;
  }
  write_metrics(rows, ProbeSpec{}, dir.path() / "m.csv");
  EXPECT_EQ(count_lines(dir.path() / "m.csv"), 301u);
  write_metrics(rows, ProbeSpec{}, dir.path() / "m2.csv");
  EXPECT_EQ(slurp(dir.path() / "m.csv"), slurp(dir.path() / "m2.csv"));

  write_metrics({}, ProbeSpec{}, dir.path() / "empty.csv");
  EXPECT_EQ(count_lines(dir.path() / "empty.csv"), 1u);

  const CsvTable t = read_csv(dir.path() / "m.csv");
  ASSERT_EQ(t.rows.size(), 300u);
  EXPECT_EQ(t.rows[7][*t.column("mean_episode_reward")], "3.5");
  EXPECT_FALSE(t.column("nope").has_value());
}

TEST(Metrics, StreamingWriterMatchesBatchWriter) {
  TempDir dir("stream");
  std::vector<MetricsRow> rows(3);
  rows[1].zeta = zeta_sweep(GreedyEstimate{}, GreedyEstimate{}, ProbeSpec{}, EnvConfig{});
  {
    MetricsWriter w(dir.path() / "s.csv", ProbeSpec{});
    for (const auto& r : rows) w.write(r);
  }
  write_metrics(rows, ProbeSpec{}, dir.path() / "b.csv");
  EXPECT_EQ(slurp(dir.path() / "s.csv"), slurp(dir.path() / "b.csv"));
}

TEST(Zeta, CsvLayout) {
  TempDir dir("zcsv");
  const ZetaMatrix z = zeta_sweep(GreedyEstimate{}, ThresholdStubborn{}, ProbeSpec{}, EnvConfig{});
  write_zeta_csv(z, dir.path() / "z.csv");
  const CsvTable t = read_csv(dir.path() / "z.csv");
  EXPECT_EQ(t.header, (std::vector<std::string>{"agent", "n", "d", "zeta"}));
  ASSERT_EQ(t.rows.size(), 10u);
  EXPECT_EQ(t.rows[0], (std::vector<std::string>{"a", "0", "5", "1"}));
  EXPECT_EQ(t.rows[9], (std::vector<std::string>{"b", "4", "5", "0"}));
}

class CheckpointCorruption : public ::testing::Test {
 protected:
  TempDir dir{"corrupt"};
  std::filesystem::path path = dir.path() / "c.bin";
  std::string bytes;

  void SetUp() override {
    RngStream init(3);
    save_checkpoint(PolicyParams::random(encoding_for(EnvConfig{}), 4, init), path);
    bytes = slurp(path);
  }
  void rewrite(const std::string& b) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    out << b;
  }
};

TEST_F(CheckpointCorruption, HeaderStartsWithMagicAndVersion) {
  ASSERT_GE(bytes.size(), 8u);
  EXPECT_EQ(bytes.substr(0, 4), "STBK");
  std::uint32_t version = 0;
  std::memcpy(&version, bytes.data() + 4, 4);
  EXPECT_EQ(version, kCheckpointVersion);
}

TEST_F(CheckpointCorruption, BadMagic) {
  bytes[0] = 'X';
  rewrite(bytes);
  EXPECT_THROW(load_checkpoint(path), FormatError);
}

TEST_F(CheckpointCorruption, WrongVersion) {
  bytes[4] = 2;
  rewrite(bytes);
  EXPECT_THROW(load_checkpoint(path), FormatError);
}

TEST_F(CheckpointCorruption, Truncated) {
  rewrite(bytes.substr(0, bytes.size() - 3));
  EXPECT_THROW(load_checkpoint(path), FormatError);
}

TEST_F(CheckpointCorruption, TrailingBytes) {
  rewrite(bytes + "x");
  EXPECT_THROW(load_checkpoint(path), FormatError);
}

TEST(Checkpoint, MissingFileIsIoError) {
  EXPECT_THROW(load_checkpoint("/nonexistent/ckpt.bin"), IoError);
}

TEST(Paths, NamingScheme) {
  EXPECT_EQ(trace_path("r", 12).filename(), "traces-gen12.jsonl");
  EXPECT_EQ(checkpoint_path("r", 49, Agent::B).filename(), "ckpt-gen49-b.bin");
  EXPECT_EQ(zeta_path("r", 0).filename(), "zeta-gen0.csv");
}

bool well_formed(const std::string& svg) {
  return svg.rfind("<svg", 0) == 0 && svg.find("</svg>") != std::string::npos &&
         std::count(svg.begin(), svg.end(), '<') == std::count(svg.begin(), svg.end(), '>');
}

std::vector<double> polyline_y(const std::string& svg) {
  std::smatch m;
  std::regex re("points=\"([^\"]*)\"");
  if (!std::regex_search(svg, m, re)) return {};
  std::istringstream in(m[1].str());
  std::vector<double> ys;
  for (std::string pt; in >> pt;) ys.push_back(std::stod(pt.substr(pt.find(',') + 1)));
  return ys;
}

TEST(Chart, EmptySeriesIsStillAValidDocument) {
  const std::string svg = reward_curve_svg({});
  EXPECT_TRUE(well_formed(svg));
  EXPECT_NE(svg.find("class=\"axis\""), std::string::npos);
  EXPECT_EQ(svg.find("polyline"), std::string::npos);
}

TEST(Chart, MonotoneSeriesDrawsMonotoneLine) {
  std::vector<SeriesPoint> pts;
  for (int i = 0; i < 30; ++i) pts.push_back({double(i), 3.0 * i + 1.0});
  const std::string svg = reward_curve_svg(pts);
  EXPECT_TRUE(well_formed(svg));
  const auto ys = polyline_y(svg);
  ASSERT_EQ(ys.size(), 30u);
  for (std::size_t i = 1; i < ys.size(); ++i) EXPECT_LT(ys[i], ys[i - 1]);  // SVG y grows downward
  EXPECT_EQ(svg, reward_curve_svg(pts));
}

TEST(Chart, ZetaBarsOneRectPerAgentAndCell) {
  ZetaBars bars{{0, 1, 2}, {5.0}, {}};
  bars.values[Agent::A] = {1.0, 0.6, 0.2};
  bars.values[Agent::B] = {0.9, 0.5, 0.1};
  const std::string svg = zeta_bars_svg(bars);
  EXPECT_TRUE(well_formed(svg));
  std::size_t rects = 0;
  for (auto p = svg.find("<rect"); p != std::string::npos; p = svg.find("<rect", p + 1)) ++rects;
  EXPECT_EQ(rects, 1u + 6u);  // background plus bars
  EXPECT_EQ(svg, zeta_bars_svg(bars));
}

}  // namespace
}  // namespace stubborn

#include "stubborn/telemetry.hpp"

#include <cstdio>
#include <cstring>
#include <sstream>

#include "json.hpp"
#include "stubborn/errors.hpp"

namespace stubborn {

namespace fs = std::filesystem;
using ordered_json = nlohmann::ordered_json;

namespace {

Action parse_action(const std::string& s) {
  if (s == "L") return Action::Left;
  if (s == "R") return Action::Right;
  throw FormatError("bad action '" + s + "' in trace");
}

std::ofstream open_out(const fs::path& path, std::ios::openmode mode = std::ios::out) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, mode);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  return out;
}

std::string format_d(double d) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%g", d);
  return buf;
}

}  // namespace

std::string serialize(const TraceRecord& r) {
  const auto& t = r.turn;
  ordered_json j;
  j["episode_id"] = r.episode_id;
  j["generation"] = r.generation;
  j["turn_index"] = t.turn_index;
  j["skirmish_index"] = t.skirmish_index;
  j["turn_in_skirmish"] = t.turn_in_skirmish;
  j["true_left"] = t.true_left;
  j["true_right"] = t.true_right;
  j["est_a_left"] = t.est_a.left;
  j["est_a_right"] = t.est_a.right;
  j["est_b_left"] = t.est_b.left;
  j["est_b_right"] = t.est_b.right;
  j["action_a"] = std::string(1, to_char(t.action_a));
  j["action_b"] = std::string(1, to_char(t.action_b));
  j["event"] = std::string(to_string(t.event));
  j["reward"] = t.reward;
  return j.dump();
}

TraceRecord parse_trace_line(const std::string& line) {
  try {
    const auto j = nlohmann::json::parse(line);
    TraceRecord r;
    r.episode_id = j.at("episode_id").get<int>();
    r.generation = j.at("generation").get<int>();
    auto& t = r.turn;
    t.turn_index = j.at("turn_index").get<int>();
    t.skirmish_index = j.at("skirmish_index").get<int>();
    t.turn_in_skirmish = j.at("turn_in_skirmish").get<int>();
    t.true_left = j.at("true_left").get<double>();
    t.true_right = j.at("true_right").get<double>();
    t.est_a = {j.at("est_a_left").get<double>(), j.at("est_a_right").get<double>()};
    t.est_b = {j.at("est_b_left").get<double>(), j.at("est_b_right").get<double>()};
    t.action_a = parse_action(j.at("action_a").get<std::string>());
    t.action_b = parse_action(j.at("action_b").get<std::string>());
    const auto ev = j.at("event").get<std::string>();
    const auto parsed = parse_event(ev);
    if (!parsed) throw FormatError("bad event '" + ev + "' in trace");
    t.event = *parsed;
    t.reward = j.at("reward").get<double>();
    return r;
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("malformed trace line: ") + e.what());
  }
}

TraceSink::TraceSink(const fs::path& path) : path_(path), out_(open_out(path)) {}

void TraceSink::append(const TraceRecord& record) {
  out_ << serialize(record) << '\n';
  ++lines_;
  if (!out_) throw IoError("write failed on " + path_.string());
}

void TraceSink::end_episode() {
  out_.flush();
  if (!out_) throw IoError("flush failed on " + path_.string());
}

void append_trace(TraceSink& sink, const TraceRecord& record) { sink.append(record); }

std::vector<TraceRecord> read_traces(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  std::vector<TraceRecord> out;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    out.push_back(parse_trace_line(line));
  }
  return out;
}

TraceSummary summarize(std::span<const TraceRecord> records) {
  TraceSummary s;
  double total_reward = 0.0;
  int episode_max_skirmish = -1;
  const TraceRecord* prev = nullptr;
  for (const auto& r : records) {
    const bool new_episode =
        !prev || prev->episode_id != r.episode_id || prev->generation != r.generation;
    if (new_episode) {
      if (prev) s.skirmishes += episode_max_skirmish + 1;
      s.episodes += 1;
      episode_max_skirmish = -1;
    }
    episode_max_skirmish = std::max(episode_max_skirmish, r.turn.skirmish_index);
    total_reward += r.turn.reward;
    s.turns += 1;
    if (r.turn.event == Event::AgreeLeft || r.turn.event == Event::AgreeRight) s.agreements += 1;
    prev = &r;
  }
  if (prev) s.skirmishes += episode_max_skirmish + 1;
  if (s.episodes > 0) s.mean_episode_reward = total_reward / s.episodes;
  if (s.skirmishes > 0) s.mean_skirmish_length = static_cast<double>(s.turns) / s.skirmishes;
  if (s.turns > 0) s.agreement_rate = static_cast<double>(s.agreements) / s.turns;
  return s;
}

std::string format_real(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

std::vector<std::string> metrics_header(const ProbeSpec& spec) {
  std::vector<std::string> h{"generation", "mean_episode_reward", "mean_skirmish_length",
                             "agreement_rate", "loss_a", "loss_b", "entropy_a", "entropy_b"};
  for (const char* agent : {"a", "b"}) {
    for (double d : spec.d_values) {
      for (int n : spec.n_values) {
        h.push_back(std::string("zeta_") + agent + "_n" + std::to_string(n) + "_d" + format_d(d));
      }
    }
  }
  return h;
}

std::string format_metrics_row(const MetricsRow& row, const ProbeSpec& spec) {
  std::ostringstream os;
  os << row.generation << ',' << format_real(row.mean_episode_reward) << ','
     << format_real(row.mean_skirmish_length) << ',' << format_real(row.agreement_rate) << ','
     << format_real(row.loss_a) << ',' << format_real(row.loss_b) << ','
     << format_real(row.entropy_a) << ',' << format_real(row.entropy_b);
  for (Agent agent : {Agent::A, Agent::B}) {
    for (double d : spec.d_values) {
      for (int n : spec.n_values) {
        os << ',';
        if (row.zeta) os << format_real(row.zeta->at(agent, n, d));
      }
    }
  }
  return os.str();
}

namespace {

std::string join(const std::vector<std::string>& v) {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) s += ',';
    s += v[i];
  }
  return s;
}

}  // namespace

void write_metrics(std::span<const MetricsRow> rows, const ProbeSpec& spec, const fs::path& path) {
  auto out = open_out(path);
  out << join(metrics_header(spec)) << '\n';
  for (const auto& row : rows) out << format_metrics_row(row, spec) << '\n';
  if (!out.flush()) throw IoError("write failed on " + path.string());
}

MetricsWriter::MetricsWriter(const fs::path& path, ProbeSpec spec)
    : spec_(std::move(spec)), out_(open_out(path)) {
  out_ << join(metrics_header(spec_)) << '\n';
  out_.flush();
}

void MetricsWriter::write(const MetricsRow& row) {
  out_ << format_metrics_row(row, spec_) << '\n';
  if (!out_.flush()) throw IoError("metrics write failed");
}

std::optional<std::size_t> CsvTable::column(const std::string& name) const {
  for (std::size_t i = 0; i < header.size(); ++i) {
    if (header[i] == name) return i;
  }
  return std::nullopt;
}

CsvTable read_csv(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  auto split = [](const std::string& line) {
    std::vector<std::string> cells;
    std::string cell;
    std::istringstream is(line);
    while (std::getline(is, cell, ',')) cells.push_back(cell);
    if (!line.empty() && line.back() == ',') cells.emplace_back();
    return cells;
  };
  CsvTable t;
  std::string line;
  if (!std::getline(in, line)) throw FormatError(path.string() + " is empty");
  t.header = split(line);
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    t.rows.push_back(split(line));
  }
  return t;
}

void write_zeta_csv(const ZetaMatrix& zeta, const fs::path& path) {
  auto out = open_out(path);
  out << "agent,n,d,zeta\n";
  for (Agent agent : {Agent::A, Agent::B}) {
    for (const auto& e : zeta.entries[agent]) {
      out << (agent == Agent::A ? 'a' : 'b') << ',' << e.n << ',' << format_d(e.d) << ','
          << format_real(e.zeta) << '\n';
    }
  }
  if (!out.flush()) throw IoError("write failed on " + path.string());
}

namespace {

template <typename T>
void put(std::string& buf, T v) {
  char bytes[sizeof(T)];
  std::memcpy(bytes, &v, sizeof(T));
  buf.append(bytes, sizeof(T));
}

class Reader {
 public:
  Reader(std::string data, std::string name) : data_(std::move(data)), name_(std::move(name)) {}

  template <typename T>
  T get() {
    if (pos_ + sizeof(T) > data_.size()) throw FormatError(name_ + ": truncated checkpoint");
    T v;
    std::memcpy(&v, data_.data() + pos_, sizeof(T));
    pos_ += sizeof(T);
    return v;
  }
  bool done() const { return pos_ == data_.size(); }

 private:
  std::string data_;
  std::string name_;
  std::size_t pos_ = 0;
};

}  // namespace

void save_checkpoint(const PolicyParams& params, const fs::path& path) {
  std::string buf(kCheckpointMagic, 4);
  put<std::uint32_t>(buf, kCheckpointVersion);
  const auto& enc = params.encoding();
  put<double>(buf, enc.estimate_scale);
  put<double>(buf, enc.handicap_scale);
  put<std::uint8_t>(buf, enc.include_history ? 1 : 0);
  put<std::uint8_t>(buf, enc.include_handicap ? 1 : 0);
  put<std::int32_t>(buf, params.inputs());
  put<std::int32_t>(buf, params.hidden());
  put<std::uint64_t>(buf, params.size());
  for (double v : params.theta()) put<double>(buf, v);
  auto out = open_out(path, std::ios::out | std::ios::binary);
  out.write(buf.data(), static_cast<std::streamsize>(buf.size()));
  if (!out.flush()) throw IoError("write failed on " + path.string());
}

PolicyParams load_checkpoint(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open checkpoint " + path.string());
  std::string data((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  const std::string name = path.string();
  if (data.size() < 8 || std::memcmp(data.data(), kCheckpointMagic, 4) != 0) {
    throw FormatError(name + ": not a checkpoint (bad magic)");
  }
  Reader r(data.substr(4), name);
  const auto version = r.get<std::uint32_t>();
  if (version != kCheckpointVersion) {
    throw FormatError(name + ": checkpoint version " + std::to_string(version) +
                      ", expected " + std::to_string(kCheckpointVersion));
  }
  FeatureEncoding enc;
  enc.estimate_scale = r.get<double>();
  enc.handicap_scale = r.get<double>();
  enc.include_history = r.get<std::uint8_t>() != 0;
  enc.include_handicap = r.get<std::uint8_t>() != 0;
  const auto inputs = r.get<std::int32_t>();
  const auto hidden = r.get<std::int32_t>();
  const auto count = r.get<std::uint64_t>();
  if (hidden < 1 || inputs != enc.dim()) throw FormatError(name + ": inconsistent layout");
  PolicyParams p(enc, hidden);
  if (count != p.size()) throw FormatError(name + ": parameter count mismatch");
  for (auto& v : p.theta()) v = r.get<double>();
  if (!r.done()) throw FormatError(name + ": trailing bytes");
  if (!p.all_finite()) throw FormatError(name + ": non-finite parameters");
  return p;
}

fs::path trace_path(const fs::path& run, int generation) {
  return run / ("traces-gen" + std::to_string(generation) + ".jsonl");
}

fs::path checkpoint_path(const fs::path& run, int generation, Agent agent) {
  return run / ("ckpt-gen" + std::to_string(generation) + (agent == Agent::A ? "-a" : "-b") + ".bin");
}

fs::path zeta_path(const fs::path& run, int generation) {
  return run / ("zeta-gen" + std::to_string(generation) + ".csv");
}

}  // namespace stubborn

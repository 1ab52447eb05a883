#include "stubborn/trainer.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <mutex>
#include <numeric>
#include <thread>

#include "stubborn/chart.hpp"
#include "stubborn/errors.hpp"

namespace stubborn {

void TrainConfig::validate() const {
  if (generations < 1) throw ConfigError("train.generations must be >= 1");
  if (episodes_per_generation < 1) throw ConfigError("train.episodes_per_generation must be >= 1");
  if (!(gamma > 0.0 && gamma <= 1.0)) throw ConfigError("train.gamma must be in (0, 1]");
  if (!(gae_lambda >= 0.0 && gae_lambda <= 1.0)) throw ConfigError("train.gae_lambda must be in [0, 1]");
  if (!(clip > 0.0)) throw ConfigError("train.clip must be > 0");
  if (!(learning_rate > 0.0) || !std::isfinite(learning_rate)) {
    throw ConfigError("train.learning_rate must be > 0");
  }
  if (epochs_per_generation < 1) throw ConfigError("train.epochs_per_generation must be >= 1");
  if (minibatch_count < 1) throw ConfigError("train.minibatch_count must be >= 1");
  if (!(entropy_coefficient >= 0.0)) throw ConfigError("train.entropy_coefficient must be >= 0");
  if (!(value_coefficient >= 0.0)) throw ConfigError("train.value_coefficient must be >= 0");
  if (hidden < 1) throw ConfigError("train.hidden must be >= 1");
  if (seeds.empty()) throw ConfigError("train.seeds must not be empty");
  if (probe_interval < 1) throw ConfigError("train.probe_interval must be >= 1");
  if (checkpoint_interval < 1) throw ConfigError("train.checkpoint_interval must be >= 1");
  if (jobs < 1) throw ConfigError("train.jobs must be >= 1");
}

std::uint64_t episode_seed(std::uint64_t generation_seed, int episode) {
  return derive_seed(generation_seed, static_cast<std::uint64_t>(episode));
}

namespace {

struct EpisodeRollout {
  std::vector<RolloutStep> a;
  std::vector<RolloutStep> b;
  std::vector<TraceRecord> records;
};

RolloutStep sample_step(const PolicyParams& params, const Observation& obs, RngStream& rng) {
  RolloutStep s;
  s.features = encode(params.encoding(), obs);
  const ForwardPass pass = forward(params, s.features);
  // Same sampling rule as act().
  s.action = rng.uniform() < pass.probs[0] ? Action::Left : Action::Right;
  s.log_prob = pass.log_probs[s.action == Action::Left ? 0 : 1];
  s.value = pass.value;
  return s;
}

EpisodeRollout play_episode(const EnvConfig& env, const PolicyParams& params_a,
                            const PolicyParams& params_b, std::uint64_t seed, int episode_id) {
  EpisodeRollout out;
  const auto n = static_cast<std::size_t>(env.turns_per_episode);
  out.a.reserve(n);
  out.b.reserve(n);
  out.records.reserve(n);
  EpisodeState ep = new_episode(env, seed);
  while (!ep.ended()) {
    const Observation obs_a = observe(ep, Agent::A);
    const Observation obs_b = observe(ep, Agent::B);
    RolloutStep sa = sample_step(params_a, obs_a, ep.rng[Stream::PolicyA]);
    RolloutStep sb = sample_step(params_b, obs_b, ep.rng[Stream::PolicyB]);
    const TurnRecord rec = play_turn(ep, sa.action, sb.action);
    sa.reward = rec.reward;
    sb.reward = rec.reward;
    sa.episode_end = sb.episode_end = ep.ended();
    out.a.push_back(std::move(sa));
    out.b.push_back(std::move(sb));
    out.records.push_back({episode_id, 0, rec});
  }
  return out;
}

}  // namespace

Collected collect(const EnvConfig& env, const TrainConfig& train, const PolicyParams& params_a,
                  const PolicyParams& params_b, std::uint64_t generation_seed) {
  env.validate();
  const int episodes = train.episodes_per_generation;
  std::vector<EpisodeRollout> rollouts(static_cast<std::size_t>(episodes));

  auto run = [&](int e) {
    rollouts[static_cast<std::size_t>(e)] =
        play_episode(env, params_a, params_b, episode_seed(generation_seed, e), e);
  };

  const int workers = std::min(train.jobs, episodes);
  if (workers <= 1) {
    for (int e = 0; e < episodes; ++e) run(e);
  } else {
    std::atomic<int> next{0};
    std::exception_ptr error;
    std::mutex error_mutex;
    std::vector<std::thread> pool;
    for (int w = 0; w < workers; ++w) {
      pool.emplace_back([&] {
        for (int e = next++; e < episodes; e = next++) {
          try {
            run(e);
          } catch (...) {
            std::lock_guard lock(error_mutex);
            if (!error) error = std::current_exception();
          }
        }
      });
    }
    for (auto& t : pool) t.join();
    if (error) std::rethrow_exception(error);
  }

  // Merge in episode order so the result does not depend on scheduling.
  Collected c;
  for (auto& r : rollouts) {
    std::move(r.a.begin(), r.a.end(), std::back_inserter(c.batch_a.steps));
    std::move(r.b.begin(), r.b.end(), std::back_inserter(c.batch_b.steps));
    std::move(r.records.begin(), r.records.end(), std::back_inserter(c.records));
  }
  c.batch_a.episodes = c.batch_b.episodes = episodes;

  const TraceSummary s = summarize(c.records);
  c.report.mean_episode_reward = s.mean_episode_reward;
  c.report.mean_skirmish_length = s.mean_skirmish_length;
  c.report.agreement_rate = s.agreement_rate;
  return c;
}

Advantages advantages(const RolloutBatch& batch, double gamma, double lambda) {
  const std::size_t n = batch.steps.size();
  if (n == 0) throw InvalidStateError("advantages: empty batch");
  Advantages out;
  out.raw.assign(n, 0.0);
  out.returns.assign(n, 0.0);

  double gae = 0.0;
  double ret = 0.0;
  double next_value = 0.0;
  for (std::size_t i = n; i-- > 0;) {
    const auto& s = batch.steps[i];
    if (s.episode_end) {
      gae = 0.0;
      ret = 0.0;
      next_value = 0.0;
    }
    const double delta = s.reward + gamma * next_value - s.value;
    gae = delta + gamma * lambda * gae;
    ret = s.reward + gamma * ret;
    out.raw[i] = gae;
    out.returns[i] = ret;
    next_value = s.value;
  }

  const double mean = std::accumulate(out.raw.begin(), out.raw.end(), 0.0) / static_cast<double>(n);
  double var = 0.0;
  for (double a : out.raw) var += (a - mean) * (a - mean);
  var /= static_cast<double>(n);
  const double sd = std::sqrt(std::max(var, 1e-8));
  out.normalized.resize(n);
  for (std::size_t i = 0; i < n; ++i) out.normalized[i] = (out.raw[i] - mean) / sd;
  return out;
}

void Adam::step(std::span<double> theta, std::span<const double> grad, double lr) {
  if (m_.size() != theta.size()) {
    m_.assign(theta.size(), 0.0);
    v_.assign(theta.size(), 0.0);
    t_ = 0;
  }
  ++t_;
  const double c1 = 1.0 - std::pow(kBeta1, static_cast<double>(t_));
  const double c2 = 1.0 - std::pow(kBeta2, static_cast<double>(t_));
  for (std::size_t i = 0; i < theta.size(); ++i) {
    m_[i] = kBeta1 * m_[i] + (1.0 - kBeta1) * grad[i];
    v_[i] = kBeta2 * v_[i] + (1.0 - kBeta2) * grad[i] * grad[i];
    const double m_hat = m_[i] / c1;
    const double v_hat = v_[i] / c2;
    theta[i] -= lr * m_hat / (std::sqrt(v_hat) + kEps);
  }
}

LossReport update(PolicyParams& params, Adam& adam, const RolloutBatch& batch,
                  const Advantages& adv, const TrainConfig& train, RngStream& shuffle) {
  const std::size_t n = batch.steps.size();
  if (n == 0 || adv.normalized.size() != n || adv.returns.size() != n) {
    throw InvalidStateError("update: batch and advantages are not aligned");
  }
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  const auto minibatches = static_cast<std::size_t>(std::min<int>(train.minibatch_count, static_cast<int>(n)));

  LossReport report;
  int computed = 0;
  std::vector<double> grad(params.size());

  for (int epoch = 0; epoch < train.epochs_per_generation; ++epoch) {
    shuffle.shuffle(order.begin(), order.end());
    for (std::size_t mb = 0; mb < minibatches; ++mb) {
      const std::size_t begin = mb * n / minibatches;
      const std::size_t end = (mb + 1) * n / minibatches;
      const double inv_m = 1.0 / static_cast<double>(end - begin);
      std::fill(grad.begin(), grad.end(), 0.0);

      double surrogate = 0.0, value_loss = 0.0, entropy = 0.0;
      for (std::size_t k = begin; k < end; ++k) {
        const std::size_t i = order[k];
        const auto& s = batch.steps[i];
        const ForwardPass pass = forward(params, s.features);
        const std::size_t a = s.action == Action::Left ? 0 : 1;
        const double A = adv.normalized[i];
        const double ratio = std::exp(pass.log_probs[a] - s.log_prob);
        const double clipped = std::clamp(ratio, 1.0 - train.clip, 1.0 + train.clip);
        const double unclipped_term = ratio * A;
        const double clipped_term = clipped * A;
        surrogate += std::min(unclipped_term, clipped_term);

        // d(-surrogate)/d log pi is -ratio*A when the unclipped branch is active, else 0.
        const double dlogp = unclipped_term <= clipped_term ? -ratio * A : 0.0;

        double h = 0.0;
        for (double lp : pass.log_probs) h -= std::exp(lp) * lp;
        entropy += h;

        std::array<double, 2> dlogits{};
        for (std::size_t j = 0; j < 2; ++j) {
          const double p = pass.probs[j];
          const double dlogp_dz = (j == a ? 1.0 : 0.0) - p;
          const double dh_dz = -p * (pass.log_probs[j] + h);
          dlogits[j] = (dlogp * dlogp_dz - train.entropy_coefficient * dh_dz) * inv_m;
        }
        const double err = pass.value - adv.returns[i];
        value_loss += err * err;
        const double dvalue = 2.0 * train.value_coefficient * err * inv_m;
        backward(params, pass, dlogits, dvalue, grad);
      }
      surrogate *= inv_m;
      value_loss *= inv_m;
      entropy *= inv_m;
      const double total =
          -surrogate + train.value_coefficient * value_loss - train.entropy_coefficient * entropy;
      if (!std::isfinite(total)) throw NumericError("non-finite loss during update");
      for (double g : grad) {
        if (!std::isfinite(g)) throw NumericError("non-finite gradient during update");
      }
      adam.step(params.theta(), grad, train.learning_rate);

      report.surrogate += surrogate;
      report.value_loss += value_loss;
      report.entropy += entropy;
      report.total += total;
      ++computed;
    }
  }
  if (computed > 0) {
    report.surrogate /= computed;
    report.value_loss /= computed;
    report.entropy /= computed;
    report.total /= computed;
  }
  if (!params.all_finite()) throw NumericError("non-finite parameters after update");
  return report;
}

namespace {

bool on_interval(int generation, int interval, int generations) {
  return (generation + 1) % interval == 0 || generation + 1 == generations;
}

void write_charts(const std::filesystem::path& out, const TrainResult& result,
                  const ProbeSpec& probe) {
  std::vector<SeriesPoint> series;
  for (const auto& r : result.reports) {
    series.push_back({static_cast<double>(r.generation), r.mean_episode_reward});
  }
  write_text_file(out / "reward_curve.svg", reward_curve_svg(series));

  // zeta averaged over the last (up to) 50 probes.
  ZetaBars bars;
  bars.n_values = probe.n_values;
  bars.d_values = probe.d_values;
  const std::size_t count = std::min<std::size_t>(50, result.zetas.size());
  const std::size_t cells = probe.n_values.size() * probe.d_values.size();
  for (Agent agent : {Agent::A, Agent::B}) {
    bars.values[agent].assign(cells, 0.0);
    for (std::size_t z = result.zetas.size() - count; z < result.zetas.size(); ++z) {
      const auto& entries = result.zetas[z].entries[agent];
      for (std::size_t c = 0; c < cells; ++c) bars.values[agent][c] += entries[c].zeta / count;
    }
  }
  write_text_file(out / "zeta_bars.svg", zeta_bars_svg(bars));
}

}  // namespace

TrainResult train(const EnvConfig& env_in, const TrainConfig& cfg, const ProbeSpec& probe,
                  std::uint64_t seed, const std::optional<std::filesystem::path>& out_dir,
                  const GenerationCallback& on_generation) {
  EnvConfig env = env_in;
  env.seed = seed;
  env.validate();
  cfg.validate();
  probe.validate();

  const FeatureEncoding enc = encoding_for(env);
  TrainResult result;
  {
    RngStream init_a(derive_seed(seed, "init-a"));
    RngStream init_b(derive_seed(seed, "init-b"));
    result.params_a = PolicyParams::random(enc, cfg.hidden, init_a);
    result.params_b = PolicyParams::random(enc, cfg.hidden, init_b);
  }
  Adam adam_a(result.params_a.size());
  Adam adam_b(result.params_b.size());

  std::optional<MetricsWriter> metrics;
  if (out_dir) {
    std::filesystem::create_directories(*out_dir);
    metrics.emplace(*out_dir / "metrics.csv", probe);
  }

  const std::uint64_t collect_seed = derive_seed(seed, "collect");
  const std::uint64_t shuffle_seed_a = derive_seed(seed, "shuffle-a");
  const std::uint64_t shuffle_seed_b = derive_seed(seed, "shuffle-b");

  for (int g = 0; g < cfg.generations; ++g) {
    Collected c = collect(env, cfg, result.params_a, result.params_b,
                          derive_seed(collect_seed, static_cast<std::uint64_t>(g)));
    c.report.generation = g;
    for (auto& r : c.records) r.generation = g;

    if (out_dir && cfg.write_traces) {
      TraceSink sink(trace_path(*out_dir, g));
      for (std::size_t i = 0; i < c.records.size(); ++i) {
        append_trace(sink, c.records[i]);
        if (i + 1 == c.records.size() || c.records[i + 1].episode_id != c.records[i].episode_id) {
          sink.end_episode();
        }
      }
    }

    MetricsRow row;
    // The probe reads the policies that produced this generation's rollouts.
    if (on_interval(g, cfg.probe_interval, cfg.generations)) {
      ZetaMatrix z = zeta_sweep(Learned{result.params_a}, Learned{result.params_b}, probe, env, g);
      if (out_dir) write_zeta_csv(z, zeta_path(*out_dir, g));
      row.zeta = z;
      result.zetas.push_back(std::move(z));
    }

    const Advantages adv_a = advantages(c.batch_a, cfg.gamma, cfg.gae_lambda);
    const Advantages adv_b = advantages(c.batch_b, cfg.gamma, cfg.gae_lambda);
    RngStream shuffle_a(derive_seed(shuffle_seed_a, static_cast<std::uint64_t>(g)));
    RngStream shuffle_b(derive_seed(shuffle_seed_b, static_cast<std::uint64_t>(g)));
    c.report.losses[Agent::A] = update(result.params_a, adam_a, c.batch_a, adv_a, cfg, shuffle_a);
    c.report.losses[Agent::B] = update(result.params_b, adam_b, c.batch_b, adv_b, cfg, shuffle_b);

    row.generation = g;
    row.mean_episode_reward = c.report.mean_episode_reward;
    row.mean_skirmish_length = c.report.mean_skirmish_length;
    row.agreement_rate = c.report.agreement_rate;
    row.loss_a = c.report.losses[Agent::A].total;
    row.loss_b = c.report.losses[Agent::B].total;
    row.entropy_a = c.report.losses[Agent::A].entropy;
    row.entropy_b = c.report.losses[Agent::B].entropy;
    if (metrics) metrics->write(row);

    if (out_dir && on_interval(g, cfg.checkpoint_interval, cfg.generations)) {
      save_checkpoint(result.params_a, checkpoint_path(*out_dir, g, Agent::A));
      save_checkpoint(result.params_b, checkpoint_path(*out_dir, g, Agent::B));
    }
    if (on_generation) on_generation(c.report, row);
    result.reports.push_back(c.report);
  }

  if (out_dir) write_charts(*out_dir, result, probe);
  return result;
}

}  // namespace stubborn

#include "stubborn/network.hpp"

#include <algorithm>
#include <cmath>

#include "stubborn/errors.hpp"

namespace stubborn {

namespace {

double encode_action(const std::optional<Action>& a) {
  if (!a) return 0.0;
  return *a == Action::Left ? 1.0 : -1.0;
}

}  // namespace

FeatureEncoding encoding_for(const EnvConfig& config) {
  FeatureEncoding enc;
  enc.estimate_scale = 1.0 / config.reward_high;
  enc.handicap_scale = 1.0 / config.reward_high;
  enc.include_history = !config.strict_observation;
  enc.include_handicap = config.observe_own_handicap;
  return enc;
}

std::vector<double> encode(const FeatureEncoding& enc, const Observation& obs) {
  std::vector<double> x;
  x.reserve(static_cast<std::size_t>(enc.dim()));
  x.push_back(obs.est_left * enc.estimate_scale);
  x.push_back(obs.est_right * enc.estimate_scale);
  x.push_back(encode_action(obs.other_prev));
  if (enc.include_history) {
    x.push_back(encode_action(obs.own_prev));
    x.push_back(obs.skirmish_turn_norm);
  }
  if (enc.include_handicap) {
    x.push_back(obs.own_handicap.value_or(0.0) * enc.handicap_scale);
  }
  for (double v : x) {
    if (!std::isfinite(v)) throw NumericError("non-finite observation feature");
  }
  return x;
}

PolicyParams::PolicyParams(FeatureEncoding encoding, int hidden)
    : encoding_(encoding), inputs_(encoding.dim()), hidden_(hidden) {
  if (hidden < 1) throw ConfigError("policy.hidden must be >= 1");
  layout();
}

void PolicyParams::layout() {
  const auto in = static_cast<std::size_t>(inputs_);
  const auto h = static_cast<std::size_t>(hidden_);
  std::size_t off = 0;
  off_w1_ = off; off += h * in;
  off_b1_ = off; off += h;
  off_w2_ = off; off += h * h;
  off_b2_ = off; off += h;
  off_wpi_ = off; off += 2 * h;
  off_bpi_ = off; off += 2;
  off_cw1_ = off; off += h * in;
  off_cb1_ = off; off += h;
  off_cw2_ = off; off += h * h;
  off_cb2_ = off; off += h;
  off_wv_ = off; off += h;
  off_bv_ = off; off += 1;
  theta_.assign(off, 0.0);
}

PolicyParams PolicyParams::random(FeatureEncoding encoding, int hidden, RngStream& rng) {
  PolicyParams p(encoding, hidden);
  auto fill = [&](std::size_t off, int fan_in, int fan_out, double gain) {
    const double limit = gain * std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
    const auto n = static_cast<std::size_t>(fan_in) * static_cast<std::size_t>(fan_out);
    for (std::size_t i = 0; i < n; ++i) p.theta_[off + i] = rng.uniform(-limit, limit);
  };
  fill(p.off_w1_, p.inputs_, hidden, 1.0);
  fill(p.off_w2_, hidden, hidden, 1.0);
  fill(p.off_wpi_, hidden, 2, 0.01);
  fill(p.off_cw1_, p.inputs_, hidden, 1.0);
  fill(p.off_cw2_, hidden, hidden, 1.0);
  fill(p.off_wv_, hidden, 1, 1.0);
  return p;
}

bool PolicyParams::all_finite() const {
  return std::all_of(theta_.begin(), theta_.end(), [](double v) { return std::isfinite(v); });
}

namespace {

// Two tanh layers; writes both activations.
void trunk(std::span<const double> input, std::span<const double> w1, std::span<const double> b1,
           std::span<const double> w2, std::span<const double> b2, int in, int h,
           std::vector<double>& a1, std::vector<double>& a2) {
  a1.resize(static_cast<std::size_t>(h));
  a2.resize(static_cast<std::size_t>(h));
  for (int j = 0; j < h; ++j) {
    double z = b1[j];
    for (int i = 0; i < in; ++i) z += w1[j * in + i] * input[i];
    a1[j] = std::tanh(z);
  }
  for (int j = 0; j < h; ++j) {
    double z = b2[j];
    for (int i = 0; i < h; ++i) z += w2[j * h + i] * a1[i];
    a2[j] = std::tanh(z);
  }
}

// Backpropagates d(output)/d(a2) through a trunk, accumulating into grad.
void trunk_backward(const std::vector<double>& input, const std::vector<double>& a1,
                    const std::vector<double>& a2, std::span<const double> w2,
                    const std::vector<double>& da2, int in, int h, double* g_w1, double* g_b1,
                    double* g_w2, double* g_b2) {
  std::vector<double> da1(static_cast<std::size_t>(h), 0.0);
  for (int j = 0; j < h; ++j) {
    const double dz2 = da2[j] * (1.0 - a2[j] * a2[j]);
    g_b2[j] += dz2;
    for (int i = 0; i < h; ++i) {
      g_w2[j * h + i] += dz2 * a1[i];
      da1[i] += dz2 * w2[j * h + i];
    }
  }
  for (int j = 0; j < h; ++j) {
    const double dz1 = da1[j] * (1.0 - a1[j] * a1[j]);
    g_b1[j] += dz1;
    for (int i = 0; i < in; ++i) g_w1[j * in + i] += dz1 * input[i];
  }
}

}  // namespace

ForwardPass forward(const PolicyParams& params, std::span<const double> input) {
  const int in = params.inputs();
  const int h = params.hidden();
  if (static_cast<int>(input.size()) != in) {
    throw InvalidStateError("input width does not match the network");
  }
  ForwardPass f;
  f.input.assign(input.begin(), input.end());
  trunk(input, params.w1(), params.b1(), params.w2(), params.b2(), in, h, f.h1, f.h2);
  trunk(input, params.cw1(), params.cb1(), params.cw2(), params.cb2(), in, h, f.c1, f.c2);

  const auto wpi = params.w_pi();
  const auto bpi = params.b_pi();
  for (int k = 0; k < 2; ++k) {
    double z = bpi[k];
    for (int i = 0; i < h; ++i) z += wpi[k * h + i] * f.h2[i];
    f.logits[k] = z;
  }
  const auto wv = params.w_v();
  f.value = params.b_v()[0];
  for (int i = 0; i < h; ++i) f.value += wv[i] * f.c2[i];

  const double m = std::max(f.logits[0], f.logits[1]);
  const double lse = m + std::log(std::exp(f.logits[0] - m) + std::exp(f.logits[1] - m));
  for (int k = 0; k < 2; ++k) {
    f.log_probs[k] = f.logits[k] - lse;
    f.probs[k] = std::exp(f.log_probs[k]);
  }
  if (!std::isfinite(lse) || !std::isfinite(f.value)) {
    throw NumericError("non-finite network output");
  }
  return f;
}

void backward(const PolicyParams& params, const ForwardPass& f, const std::array<double, 2>& dlogits,
              double dvalue, std::span<double> grad) {
  const int in = params.inputs();
  const int h = params.hidden();
  const auto wpi = params.w_pi();
  const auto wv = params.w_v();
  double* g = grad.data();

  if (dlogits[0] != 0.0 || dlogits[1] != 0.0) {
    double* g_wpi = g + params.offset_w_pi();
    double* g_bpi = g + params.offset_b_pi();
    std::vector<double> da2(static_cast<std::size_t>(h));
    for (int k = 0; k < 2; ++k) {
      g_bpi[k] += dlogits[k];
      for (int i = 0; i < h; ++i) g_wpi[k * h + i] += dlogits[k] * f.h2[i];
    }
    for (int i = 0; i < h; ++i) da2[i] = dlogits[0] * wpi[i] + dlogits[1] * wpi[h + i];
    trunk_backward(f.input, f.h1, f.h2, params.w2(), da2, in, h, g + params.offset_w1(),
                   g + params.offset_b1(), g + params.offset_w2(), g + params.offset_b2());
  }

  if (dvalue != 0.0) {
    double* g_wv = g + params.offset_w_v();
    g[params.offset_b_v()] += dvalue;
    std::vector<double> dc2(static_cast<std::size_t>(h));
    for (int i = 0; i < h; ++i) {
      g_wv[i] += dvalue * f.c2[i];
      dc2[i] = dvalue * wv[i];
    }
    trunk_backward(f.input, f.c1, f.c2, params.cw2(), dc2, in, h, g + params.offset_cw1(),
                   g + params.offset_cb1(), g + params.offset_cw2(), g + params.offset_cb2());
  }
}

}  // namespace stubborn

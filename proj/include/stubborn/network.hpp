#pragma once

#include <array>
#include <span>
#include <vector>

#include "stubborn/env.hpp"
#include "stubborn/rng.hpp"

namespace stubborn {

/// How an Observation becomes the network's input vector.
///
/// Layout: est_left, est_right, other_prev, then own_prev and
/// skirmish_turn_norm unless the observation is strict, then the own
/// handicap when observed. Estimates and handicap are multiplied by their
/// scale; previous actions map None -> 0, Left -> +1, Right -> -1.
struct FeatureEncoding {
  double estimate_scale = 0.1;
  double handicap_scale = 0.1;
  bool include_history = true;
  bool include_handicap = false;

  int dim() const { return 3 + (include_history ? 2 : 0) + (include_handicap ? 1 : 0); }
  bool operator==(const FeatureEncoding&) const = default;
};

FeatureEncoding encoding_for(const EnvConfig& config);

/// Throws NumericError when any feature is non-finite.
std::vector<double> encode(const FeatureEncoding& enc, const Observation& obs);

/// Parameters of two two-hidden-layer tanh networks over the same input: an
/// actor trunk feeding a 2-logit action head and a critic trunk feeding a
/// scalar value head. All weights live in one flat vector so gradients and
/// optimizer state share its layout.
class PolicyParams {
 public:
  PolicyParams() = default;
  /// All-zero parameters.
  PolicyParams(FeatureEncoding encoding, int hidden);

  /// Glorot-uniform trunk, action head scaled down so initial policies are near uniform.
  static PolicyParams random(FeatureEncoding encoding, int hidden, RngStream& rng);

  const FeatureEncoding& encoding() const { return encoding_; }
  int inputs() const { return inputs_; }
  int hidden() const { return hidden_; }

  std::span<double> theta() { return theta_; }
  std::span<const double> theta() const { return theta_; }
  std::size_t size() const { return theta_.size(); }

  // Row-major views into theta.
  std::span<const double> w1() const { return view(off_w1_, hidden_ * inputs_); }
  std::span<const double> b1() const { return view(off_b1_, hidden_); }
  std::span<const double> w2() const { return view(off_w2_, hidden_ * hidden_); }
  std::span<const double> b2() const { return view(off_b2_, hidden_); }
  std::span<const double> w_pi() const { return view(off_wpi_, 2 * hidden_); }
  std::span<const double> b_pi() const { return view(off_bpi_, 2); }
  std::span<const double> cw1() const { return view(off_cw1_, hidden_ * inputs_); }
  std::span<const double> cb1() const { return view(off_cb1_, hidden_); }
  std::span<const double> cw2() const { return view(off_cw2_, hidden_ * hidden_); }
  std::span<const double> cb2() const { return view(off_cb2_, hidden_); }
  std::span<const double> w_v() const { return view(off_wv_, hidden_); }
  std::span<const double> b_v() const { return view(off_bv_, 1); }

  // Offsets, for writing gradients in the same layout.
  std::size_t offset_w1() const { return off_w1_; }
  std::size_t offset_b1() const { return off_b1_; }
  std::size_t offset_w2() const { return off_w2_; }
  std::size_t offset_b2() const { return off_b2_; }
  std::size_t offset_w_pi() const { return off_wpi_; }
  std::size_t offset_b_pi() const { return off_bpi_; }
  std::size_t offset_cw1() const { return off_cw1_; }
  std::size_t offset_cb1() const { return off_cb1_; }
  std::size_t offset_cw2() const { return off_cw2_; }
  std::size_t offset_cb2() const { return off_cb2_; }
  std::size_t offset_w_v() const { return off_wv_; }
  std::size_t offset_b_v() const { return off_bv_; }

  bool all_finite() const;
  bool operator==(const PolicyParams&) const = default;

 private:
  void layout();
  std::span<const double> view(std::size_t off, int n) const {
    return std::span<const double>(theta_).subspan(off, static_cast<std::size_t>(n));
  }

  FeatureEncoding encoding_;
  int inputs_ = 0;
  int hidden_ = 0;
  std::vector<double> theta_;
  std::size_t off_w1_ = 0, off_b1_ = 0, off_w2_ = 0, off_b2_ = 0;
  std::size_t off_wpi_ = 0, off_bpi_ = 0;
  std::size_t off_cw1_ = 0, off_cb1_ = 0, off_cw2_ = 0, off_cb2_ = 0;
  std::size_t off_wv_ = 0, off_bv_ = 0;
};

struct ForwardPass {
  std::vector<double> input;
  std::vector<double> h1;  // actor tanh activations
  std::vector<double> h2;
  std::vector<double> c1;  // critic tanh activations
  std::vector<double> c2;
  std::array<double, 2> logits{};
  std::array<double, 2> log_probs{};
  std::array<double, 2> probs{};
  double value = 0.0;
};

/// Throws NumericError on non-finite activations or outputs.
ForwardPass forward(const PolicyParams& params, std::span<const double> input);

/// Accumulates into grad the gradient of (dlogits . logits + dvalue * value).
void backward(const PolicyParams& params, const ForwardPass& pass,
              const std::array<double, 2>& dlogits, double dvalue, std::span<double> grad);

}  // namespace stubborn

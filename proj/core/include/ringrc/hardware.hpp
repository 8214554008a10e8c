#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <vector>

#include "ringrc/rng.hpp"

namespace ringrc {

// Emulated imperfections of the opto-electronic loop and its digital readout.
// Every effect toggles independently; with all flags off the model composes
// to the identity and trajectories match the ideal core bit for bit.
//
// Where each effect acts during one reservoir update:
//  - high-pass filter: on the alpha*x feedback term, per neuron sample,
//    stateful across the whole run (AC coupling of the loop amplifier);
//  - noise, ADC quantization, state gain: on the acquisition path, i.e. the
//    recorded states consumed by training and readout (readout photodiode
//    plus converter chain). The optical loop itself stays clean, so noise
//    reaches the dynamics only through the fed-back output;
//  - DAC quantization: on the scalar input I(n) injected into the loop
//    (teacher while training, fed-back output when running autonomously).
struct HardwareModel {
  double noise_sigma = 0.0;
  bool noise_enabled = false;

  int adc_bits = 14;
  bool adc_enabled = false;

  int dac_bits = 16;
  bool dac_enabled = false;

  int weight_bits = 25;  // 1 sign bit + 24 fractional bits
  bool weight_quant_enabled = false;

  double state_gain = 8.0;
  bool gain_enabled = false;

  double highpass_cutoff = 1e-4;  // cycles per neuron sample
  bool highpass_enabled = false;

  bool any_enabled() const {
    return noise_enabled || adc_enabled || dac_enabled ||
           weight_quant_enabled || gain_enabled || highpass_enabled;
  }

  void validate() const;

  // Common configurations: everything off / the experimental emulation
  // (noise sigma, 14-bit ADC, 16-bit DAC, 25-bit weights, x8 gain, AC filter).
  static HardwareModel ideal();
  static HardwareModel experiment(double noise_sigma = 1e-3);
};

// Readout weights rounded to weight_bits-wide signed fixed point, all values
// strictly inside ]-1, 1[.
struct FixedPointWeights {
  std::vector<std::int32_t> q;
  double scale = 0.0;    // 2^-(weight_bits-1)
  bool clipped = false;  // some |w| >= 1 had to be saturated

  Eigen::VectorXd to_real() const;
};

// Round to the nearest of 2^bits levels spanning [lo, hi); values outside
// saturate to the nearest end level. Idempotent and monotone.
double quantize(double value, int bits, double lo, double hi);

FixedPointWeights quantize_weights(const Eigen::VectorXd& w,
                                   int weight_bits = 25);

// Independent N(0, sigma^2) perturbation of each neuron value, in place.
void add_state_noise(Eigen::VectorXd& state, double sigma, Rng& rng);

// Single-pole high-pass: y_k = a*(y_{k-1} - u_{k-1} + u_k), a = exp(-2*pi*fc)
// with fc in cycles per sample. Initialized at rest (zero in, zero out).
class HighpassFilter {
 public:
  HighpassFilter() = default;
  explicit HighpassFilter(double cutoff);

  double operator()(double u) {
    const double y = a_ * ((prev_out_ - prev_in_) + u);
    prev_in_ = u;
    prev_out_ = y;
    return y;
  }

  void reset() { prev_in_ = prev_out_ = 0.0; }

 private:
  double a_ = 1.0;
  double prev_in_ = 0.0;
  double prev_out_ = 0.0;
};

}  // namespace ringrc

#include "ringrc/hardware.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace ringrc {

void HardwareModel::validate() const {
  if (noise_sigma < 0.0 || !std::isfinite(noise_sigma))
    throw std::invalid_argument("hardware: noise_sigma must be >= 0");
  if (adc_bits < 2 || dac_bits < 2 || weight_bits < 2)
    throw std::invalid_argument("hardware: converter bit widths must be >= 2");
  if (weight_bits > 31)
    throw std::invalid_argument("hardware: weight_bits must fit 32-bit ints");
  if (state_gain <= 0.0 || !std::isfinite(state_gain))
    throw std::invalid_argument("hardware: state_gain must be > 0");
  if (highpass_cutoff < 0.0 || !std::isfinite(highpass_cutoff))
    throw std::invalid_argument("hardware: highpass_cutoff must be >= 0");
}

HardwareModel HardwareModel::ideal() { return HardwareModel{}; }

HardwareModel HardwareModel::experiment(double noise_sigma) {
  HardwareModel hw;
  hw.noise_sigma = noise_sigma;
  hw.noise_enabled = true;
  hw.adc_enabled = true;
  hw.dac_enabled = true;
  hw.weight_quant_enabled = true;
  hw.gain_enabled = true;
  hw.highpass_enabled = true;
  return hw;
}

double quantize(double value, int bits, double lo, double hi) {
  if (bits < 2 || bits > 31)
    throw std::invalid_argument("quantize: bits out of range");
  if (!(hi > lo)) throw std::invalid_argument("quantize: empty range");
  if (!std::isfinite(value))
    throw std::invalid_argument("quantize: non-finite value");
  const double levels = std::ldexp(1.0, bits);
  const double step = (hi - lo) / levels;
  double k = std::round((value - lo) / step);
  if (k < 0.0) k = 0.0;
  const double kmax = levels - 1.0;
  if (k > kmax) k = kmax;
  return lo + k * step;
}

FixedPointWeights quantize_weights(const Eigen::VectorXd& w, int weight_bits) {
  if (weight_bits < 2 || weight_bits > 31)
    throw std::invalid_argument("quantize_weights: weight_bits out of range");
  FixedPointWeights fx;
  fx.scale = std::ldexp(1.0, -(weight_bits - 1));
  const double qmax = std::ldexp(1.0, weight_bits - 1) - 1.0;
  fx.q.resize(static_cast<std::size_t>(w.size()));
  for (Eigen::Index i = 0; i < w.size(); ++i) {
    if (!std::isfinite(w(i)))
      throw std::invalid_argument("quantize_weights: non-finite weight");
    double q = std::round(w(i) / fx.scale);
    if (q > qmax) {
      q = qmax;
      fx.clipped = true;
    } else if (q < -qmax) {
      q = -qmax;
      fx.clipped = true;
    }
    fx.q[static_cast<std::size_t>(i)] = static_cast<std::int32_t>(q);
  }
  return fx;
}

Eigen::VectorXd FixedPointWeights::to_real() const {
  Eigen::VectorXd w(static_cast<Eigen::Index>(q.size()));
  for (std::size_t i = 0; i < q.size(); ++i)
    w(static_cast<Eigen::Index>(i)) = static_cast<double>(q[i]) * scale;
  return w;
}

void add_state_noise(Eigen::VectorXd& state, double sigma, Rng& rng) {
  if (sigma < 0.0 || !std::isfinite(sigma))
    throw std::invalid_argument("add_state_noise: sigma must be >= 0");
  if (sigma == 0.0) return;
  for (Eigen::Index i = 0; i < state.size(); ++i)
    state(i) += sigma * rng.gaussian();
}

HighpassFilter::HighpassFilter(double cutoff) {
  if (cutoff < 0.0 || !std::isfinite(cutoff))
    throw std::invalid_argument("highpass: cutoff must be >= 0");
  a_ = std::exp(-2.0 * std::numbers::pi * cutoff);
}

}  // namespace ringrc

#include "ringrc/reservoir.hpp"

#include <cmath>
#include <stdexcept>

namespace ringrc {

void ReservoirConfig::validate() const {
  if (n_neurons < 2)
    throw std::invalid_argument("reservoir: n_neurons must be >= 2");
  if (!std::isfinite(alpha) || !std::isfinite(beta))
    throw std::invalid_argument("reservoir: alpha and beta must be finite");
  if (latency_prefix < 0 || latency_prefix >= n_neurons)
    throw std::invalid_argument(
        "reservoir: latency_prefix must lie in [0, n_neurons)");
  if (roundtrip_time <= 0.0 || !std::isfinite(roundtrip_time))
    throw std::invalid_argument("reservoir: roundtrip_time must be > 0");
  if (mask.size() != n_neurons)
    throw std::invalid_argument("reservoir: mask length must equal n_neurons");
  for (Eigen::Index i = 0; i < mask.size(); ++i) {
    if (!(mask(i) >= -1.0 && mask(i) <= 1.0))
      throw std::invalid_argument("reservoir: mask entries must lie in [-1,1]");
    if (i < latency_prefix && mask(i) != 0.0)
      throw std::invalid_argument(
          "reservoir: latency prefix of the mask must be zero");
  }
}

ReservoirState ReservoirState::zero(int n_neurons) {
  ReservoirState s;
  s.x = Eigen::VectorXd::Zero(n_neurons);
  s.x_last_prev = 0.0;
  return s;
}

HardwareContext::HardwareContext(const HardwareModel* m,
                                 std::uint64_t noise_seed)
    : model(m), noise(noise_seed) {
  if (m) {
    m->validate();
    if (m->highpass_enabled) filter = HighpassFilter(m->highpass_cutoff);
  }
}

Eigen::VectorXd make_mask(std::uint64_t seed, const ReservoirConfig& config) {
  if (config.n_neurons < 2)
    throw std::invalid_argument("make_mask: n_neurons must be >= 2");
  if (config.latency_prefix < 0 || config.latency_prefix >= config.n_neurons)
    throw std::invalid_argument(
        "make_mask: latency_prefix must lie in [0, n_neurons)");
  Rng rng(seed);
  Eigen::VectorXd m(config.n_neurons);
  for (Eigen::Index i = 0; i < m.size(); ++i) m(i) = rng.uniform(-1.0, 1.0);
  m.head(config.latency_prefix).setZero();
  return m;
}

void step(ReservoirState& state, double input, const ReservoirConfig& config,
          HardwareContext* hw) {
  if (!std::isfinite(input))
    throw std::invalid_argument("step: non-finite input");
  const int n = config.n_neurons;
  if (state.x.size() != n || config.mask.size() != n)
    throw std::invalid_argument("step: state/mask dimension mismatch");

  const HardwareModel* m = hw ? hw->model : nullptr;
  double in = input;
  if (m && m->dac_enabled) in = quantize(in, m->dac_bits, -1.0, 1.0);

  const bool hp = m && m->highpass_enabled;
  const double a = config.alpha;
  const double b = config.beta;
  const double new_carry = state.x(n - 1);  // becomes x_{N-1}(n-1) next step

  double fb = a * state.x_last_prev;
  if (hp) fb = hw->filter(fb);
  double prev_orig = state.x(0);
  state.x(0) = std::sin(fb + b * config.mask(0) * in);
  for (int i = 1; i < n; ++i) {
    fb = a * prev_orig;
    if (hp) fb = hw->filter(fb);
    prev_orig = state.x(i);
    state.x(i) = std::sin(fb + b * config.mask(i) * in);
  }
  state.x_last_prev = new_carry;
}

Eigen::VectorXd acquire_state(const Eigen::VectorXd& x, HardwareContext* hw) {
  Eigen::VectorXd a = x;
  const HardwareModel* m = hw ? hw->model : nullptr;
  if (!m) return a;
  if (m->noise_enabled) add_state_noise(a, m->noise_sigma, hw->noise);
  if (m->adc_enabled)
    for (Eigen::Index i = 0; i < a.size(); ++i)
      a(i) = quantize(a(i), m->adc_bits, -1.0, 1.0);
  if (m->gain_enabled) a *= m->state_gain;
  return a;
}

StateTrajectory drive(const ReservoirConfig& config, HardwareContext* hw,
                      ReservoirState& state, const Eigen::VectorXd& inputs) {
  config.validate();
  if (state.x.size() != config.n_neurons)
    throw std::invalid_argument("drive: state dimension mismatch");

  const Eigen::Index t = inputs.size();
  StateTrajectory traj;
  traj.states.resize(t, config.n_neurons);
  traj.inputs.resize(t);
  const HardwareModel* m = hw ? hw->model : nullptr;
  for (Eigen::Index k = 0; k < t; ++k) {
    double in = inputs(k);
    if (!std::isfinite(in))
      throw std::invalid_argument("drive: non-finite input series");
    if (m && m->dac_enabled) in = quantize(in, m->dac_bits, -1.0, 1.0);
    step(state, in, config, hw);
    traj.states.row(k) = acquire_state(state.x, hw);
    traj.inputs(k) = in;
  }
  return traj;
}

AutonomousRun autonomous_run(const ReservoirConfig& config, HardwareContext* hw,
                             const ReadoutWeights& weights,
                             const Eigen::VectorXd& warmup_series, int n_steps,
                             double blowup_bound) {
  config.validate();
  if (warmup_series.size() == 0)
    throw std::invalid_argument("autonomous_run: warmup series is empty");
  if (weights.w.size() != config.n_neurons)
    throw std::invalid_argument("autonomous_run: weight dimension mismatch");
  if (n_steps < 0)
    throw std::invalid_argument("autonomous_run: n_steps must be >= 0");

  ReservoirState state = ReservoirState::zero(config.n_neurons);
  Eigen::VectorXd acq;
  for (Eigen::Index k = 0; k < warmup_series.size(); ++k) {
    step(state, warmup_series(k), config, hw);
    acq = acquire_state(state.x, hw);
  }

  AutonomousRun run;
  run.outputs.resize(n_steps);
  run.trajectory.states.resize(n_steps, config.n_neurons);
  run.trajectory.inputs.resize(n_steps);
  const HardwareModel* m = hw ? hw->model : nullptr;
  int done = 0;
  for (int k = 0; k < n_steps; ++k) {
    const double y = readout(acq, weights);
    run.outputs(k) = y;
    if (!std::isfinite(y) || std::abs(y) > blowup_bound) {
      run.diverged = true;
      done = k + 1;
      break;
    }
    double in = y;
    if (m && m->dac_enabled) in = quantize(in, m->dac_bits, -1.0, 1.0);
    step(state, in, config, hw);
    acq = acquire_state(state.x, hw);
    run.trajectory.states.row(k) = acq;
    run.trajectory.inputs(k) = in;
    done = k + 1;
  }
  if (done < n_steps) {
    run.outputs.conservativeResize(done);
    run.trajectory.states.conservativeResize(run.diverged ? done - 1 : done,
                                             Eigen::NoChange);
    run.trajectory.inputs.conservativeResize(run.diverged ? done - 1 : done);
  }
  return run;
}

}  // namespace ringrc

#pragma once

#include <Eigen/Dense>
#include <cstdint>

#include "ringrc/hardware.hpp"
#include "ringrc/rng.hpp"

namespace ringrc {

// Static parameters of the ring reservoir.
struct ReservoirConfig {
  int n_neurons = 100;
  double alpha = 0.9;  // feedback gain
  double beta = 0.5;   // input gain
  Eigen::VectorXd mask;
  int latency_prefix = 23;          // leading mask entries forced to zero
  double roundtrip_time = 7.93e-6;  // seconds; physical-unit conversion only

  void validate() const;
};

// Neuron values x_i(n) plus the one extra delayed sample x_{N-1}(n-1) that
// closes the ring across the node-0 update.
struct ReservoirState {
  Eigen::VectorXd x;
  double x_last_prev = 0.0;

  static ReservoirState zero(int n_neurons);
};

struct StateTrajectory {
  Eigen::MatrixXd states;  // row n = recorded (acquired) state after step n
  Eigen::VectorXd inputs;  // I(n) actually applied at step n
};

struct ReadoutWeights {
  Eigen::VectorXd w;
};

// Mutable per-run hardware context: the feedback filter state and the noise
// stream. One instance per run, never shared between runs.
struct HardwareContext {
  const HardwareModel* model = nullptr;  // null = ideal path
  HighpassFilter filter;
  Rng noise;

  HardwareContext() : noise(0) {}
  HardwareContext(const HardwareModel* m, std::uint64_t noise_seed);
};

// N i.i.d. uniform values on [-1, +1], then the first latency_prefix entries
// overwritten with zero. Deterministic per seed.
Eigen::VectorXd make_mask(std::uint64_t seed, const ReservoirConfig& config);

// One update of the ring dynamics:
//   x_0(n+1) = sin(alpha * x_{N-1}(n-1) + beta * M_0 * I(n))
//   x_i(n+1) = sin(alpha * x_{i-1}(n)   + beta * M_i * I(n)),  i >= 1
// Nodes read the pre-update state. With hardware attached, the feedback term
// passes the high-pass filter and the input passes the DAC.
void step(ReservoirState& state, double input, const ReservoirConfig& config,
          HardwareContext* hw = nullptr);

// The acquisition chain (noise -> ADC -> digital gain) applied to a freshly
// updated ring state; this is what training and readout see.
Eigen::VectorXd acquire_state(const Eigen::VectorXd& x, HardwareContext* hw);

// Feeds every input through `step`, recording the acquired state after each.
StateTrajectory drive(const ReservoirConfig& config, HardwareContext* hw,
                      ReservoirState& state, const Eigen::VectorXd& inputs);

inline double readout(const Eigen::VectorXd& state_row,
                      const ReadoutWeights& weights) {
  return weights.w.dot(state_row);
}

struct AutonomousRun {
  Eigen::VectorXd outputs;
  StateTrajectory trajectory;
  bool diverged = false;
};

// Teacher-forces the warmup series from a zero state, then closes the loop:
// each output y(n) = w . state(n) becomes the next input. Terminates early
// and flags the run when |y| exceeds blowup_bound.
AutonomousRun autonomous_run(const ReservoirConfig& config, HardwareContext* hw,
                             const ReadoutWeights& weights,
                             const Eigen::VectorXd& warmup_series, int n_steps,
                             double blowup_bound = 1e6);

}  // namespace ringrc

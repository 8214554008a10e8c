#pragma once

#include <Eigen/Dense>
#include <cstdint>

namespace ringrc {

// Sine generation at relative angular frequency nu (radians per step).
// Success needs the generated frequency within `threshold` of nu and the
// output amplitude within `amplitude_tol` of 1.
struct FrequencyTask {
  double nu = 0.1;
  double threshold = 1e-3;
  double amplitude_tol = 0.1;

  void validate() const;
};

// Periodic reproduction of a random pattern of L values in [-0.5, 0.5].
struct PatternTask {
  Eigen::VectorXd pattern;
  double threshold = 1e-3;

  void validate() const;
};

struct TaskOutcome {
  bool success = false;
  double error_value = 0.0;  // frequency error or max windowed NMSE
  bool diverged = false;
};

// u(n) = sin(nu * n), n = 0..length-1. nu must lie in (0, pi]; nu = pi is
// the Nyquist edge and yields the (degenerate) all-zero sequence.
Eigen::VectorXd sine_teacher(double nu, int length);

// Eq.-(6)-style conversion: f = nu / (2 pi T), in hertz.
double physical_frequency(double nu, double roundtrip_time);

// Wall-clock period of the L-periodic pattern: L * T, in seconds.
double physical_period(int length, double roundtrip_time);

// L i.i.d. uniform values on [-0.5, 0.5]; deterministic per seed.
PatternTask random_pattern(std::uint64_t seed, int length);

// u(n) = pattern[n mod L].
Eigen::VectorXd periodic_teacher(const Eigen::VectorXd& pattern, int length);

// Relative angular frequency (radians/step, in [0, pi]) of the dominant
// magnitude-spectrum peak, refined by quadratic interpolation around the
// peak bin. Rectangular window over the full series.
double estimate_frequency(const Eigen::VectorXd& series);

TaskOutcome evaluate_frequency_run(const Eigen::VectorXd& outputs,
                                   const FrequencyTask& task,
                                   bool diverged = false);

struct PatternEvaluation {
  Eigen::VectorXd nmse_series;  // causal windowed NMSE at each step (NaN
                                // while the window is still degenerate)
  TaskOutcome outcome;
  double whole_run_nmse = 0.0;
};

// Windowed NMSE of the outputs against the periodic target. The target at
// step k is pattern[(phase_offset + k) mod L]; teacher-forced warmup makes
// phase_offset = warmup mod L. window <= 0 selects max(3L, 60); settle < 0
// selects 2L. Success gates on the max NMSE over windows that start at or
// after `settle` (the re-locking transient is excluded).
PatternEvaluation evaluate_pattern_run(const Eigen::VectorXd& outputs,
                                       const PatternTask& task,
                                       int window = 0, int phase_offset = 0,
                                       int settle = -1, bool diverged = false);

}  // namespace ringrc

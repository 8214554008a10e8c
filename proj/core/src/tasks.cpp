#include "ringrc/tasks.hpp"

#include <fftw3.h>

#include <cmath>
#include <complex>
#include <limits>
#include <mutex>
#include <numbers>
#include <stdexcept>
#include <vector>

#include "ringrc/rng.hpp"

namespace ringrc {

namespace {
constexpr double kPi = std::numbers::pi;
constexpr double kNan = std::numeric_limits<double>::quiet_NaN();
constexpr double kInf = std::numeric_limits<double>::infinity();

// The FFTW planner is not thread-safe; plan creation/destruction serialize
// here. Execution on distinct plans is safe concurrently.
std::mutex& planner_mutex() {
  static std::mutex m;
  return m;
}
}  // namespace

void FrequencyTask::validate() const {
  if (!(nu > 0.0 && nu <= kPi))
    throw std::invalid_argument("frequency task: nu must lie in (0, pi]");
  if (!(threshold > 0.0))
    throw std::invalid_argument("frequency task: threshold must be > 0");
  if (!(amplitude_tol > 0.0))
    throw std::invalid_argument("frequency task: amplitude_tol must be > 0");
}

void PatternTask::validate() const {
  if (pattern.size() < 1)
    throw std::invalid_argument("pattern task: pattern must be non-empty");
  for (Eigen::Index i = 0; i < pattern.size(); ++i)
    if (!(pattern(i) >= -0.5 && pattern(i) <= 0.5))
      throw std::invalid_argument(
          "pattern task: entries must lie in [-0.5, 0.5]");
  if (!(threshold > 0.0))
    throw std::invalid_argument("pattern task: threshold must be > 0");
}

Eigen::VectorXd sine_teacher(double nu, int length) {
  if (!(nu > 0.0 && nu <= kPi))
    throw std::invalid_argument("sine_teacher: nu must lie in (0, pi]");
  if (length < 0) throw std::invalid_argument("sine_teacher: negative length");
  Eigen::VectorXd u(length);
  for (int n = 0; n < length; ++n) u(n) = std::sin(nu * n);
  return u;
}

double physical_frequency(double nu, double roundtrip_time) {
  if (!(roundtrip_time > 0.0))
    throw std::invalid_argument("physical_frequency: roundtrip_time must be > 0");
  return nu / (2.0 * kPi * roundtrip_time);
}

double physical_period(int length, double roundtrip_time) {
  if (!(roundtrip_time > 0.0))
    throw std::invalid_argument("physical_period: roundtrip_time must be > 0");
  if (length < 1)
    throw std::invalid_argument("physical_period: length must be >= 1");
  return length * roundtrip_time;
}

PatternTask random_pattern(std::uint64_t seed, int length) {
  if (length < 1)
    throw std::invalid_argument("random_pattern: length must be >= 1");
  Rng rng(seed);
  PatternTask task;
  task.pattern.resize(length);
  for (int i = 0; i < length; ++i) task.pattern(i) = rng.uniform(-0.5, 0.5);
  return task;
}

Eigen::VectorXd periodic_teacher(const Eigen::VectorXd& pattern, int length) {
  if (pattern.size() < 1)
    throw std::invalid_argument("periodic_teacher: empty pattern");
  if (length < 0)
    throw std::invalid_argument("periodic_teacher: negative length");
  Eigen::VectorXd u(length);
  const Eigen::Index l = pattern.size();
  for (int n = 0; n < length; ++n) u(n) = pattern(n % l);
  return u;
}

double estimate_frequency(const Eigen::VectorXd& series) {
  const int n = static_cast<int>(series.size());
  if (n < 64)
    throw std::invalid_argument("estimate_frequency: need >= 64 samples");

  const int nb = n / 2 + 1;
  std::vector<double> in(series.data(), series.data() + n);
  std::vector<std::complex<double>> out(static_cast<std::size_t>(nb));
  fftw_plan plan;
  {
    std::lock_guard<std::mutex> lock(planner_mutex());
    plan = fftw_plan_dft_r2c_1d(n, in.data(),
                                reinterpret_cast<fftw_complex*>(out.data()),
                                FFTW_ESTIMATE);
  }
  fftw_execute(plan);
  {
    std::lock_guard<std::mutex> lock(planner_mutex());
    fftw_destroy_plan(plan);
  }

  int kbest = 0;
  double best = 0.0;
  for (int k = 0; k < nb; ++k) {
    const double mag = std::abs(out[static_cast<std::size_t>(k)]);
    if (mag > best) {
      best = mag;
      kbest = k;
    }
  }
  if (best == 0.0)
    throw std::runtime_error("estimate_frequency: no dominant frequency");

  double delta = 0.0;
  if (kbest > 0 && kbest < nb - 1) {
    const double a = std::abs(out[static_cast<std::size_t>(kbest - 1)]);
    const double b = best;
    const double c = std::abs(out[static_cast<std::size_t>(kbest + 1)]);
    const double denom = a - 2.0 * b + c;
    if (denom != 0.0) {
      delta = 0.5 * (a - c) / denom;
      if (delta > 0.5) delta = 0.5;
      if (delta < -0.5) delta = -0.5;
    }
  }
  return 2.0 * kPi * (kbest + delta) / n;
}

TaskOutcome evaluate_frequency_run(const Eigen::VectorXd& outputs,
                                   const FrequencyTask& task, bool diverged) {
  task.validate();
  TaskOutcome o;
  o.diverged = diverged;
  o.error_value = kInf;
  bool amplitude_ok = false;
  if (outputs.size() >= 64) {
    try {
      o.error_value = std::abs(estimate_frequency(outputs) - task.nu);
    } catch (const std::exception&) {
      o.error_value = kInf;  // no dominant peak: the run failed
    }
    const double rms =
        std::sqrt(outputs.squaredNorm() / static_cast<double>(outputs.size()));
    amplitude_ok = std::abs(rms * std::numbers::sqrt2 - 1.0) <= task.amplitude_tol;
  }
  o.success = !diverged && amplitude_ok && o.error_value < task.threshold;
  return o;
}

PatternEvaluation evaluate_pattern_run(const Eigen::VectorXd& outputs,
                                       const PatternTask& task, int window,
                                       int phase_offset, int settle,
                                       bool diverged) {
  task.validate();
  const int l = static_cast<int>(task.pattern.size());
  const int n = static_cast<int>(outputs.size());
  const int w = window > 0 ? window : std::max(3 * l, 60);
  const int s = settle >= 0 ? settle : 2 * l;
  if (phase_offset < 0)
    throw std::invalid_argument("evaluate_pattern_run: negative phase offset");

  Eigen::VectorXd target(n);
  for (int k = 0; k < n; ++k) target(k) = task.pattern((phase_offset + k) % l);

  // prefix sums for O(1) windowed moments
  std::vector<double> se(static_cast<std::size_t>(n) + 1, 0.0);
  std::vector<double> td(static_cast<std::size_t>(n) + 1, 0.0);
  std::vector<double> td2(static_cast<std::size_t>(n) + 1, 0.0);
  for (int k = 0; k < n; ++k) {
    const double e = outputs(k) - target(k);
    se[k + 1] = se[k] + e * e;
    td[k + 1] = td[k] + target(k);
    td2[k + 1] = td2[k] + target(k) * target(k);
  }

  PatternEvaluation eval;
  eval.nmse_series = Eigen::VectorXd::Constant(n, kNan);
  for (int k = 0; k < n; ++k) {
    const int j0 = std::max(0, k - w + 1);
    const int m = k - j0 + 1;
    if (m < 2) continue;
    const double inv = 1.0 / m;
    const double mse = (se[k + 1] - se[j0]) * inv;
    const double dm = (td[k + 1] - td[j0]) * inv;
    const double dv = (td2[k + 1] - td2[j0]) * inv - dm * dm;
    if (!(dv > 1e-30)) continue;
    eval.nmse_series(k) = mse / dv;
  }

  // success gate: full windows that start past the re-locking transient
  const int gate_start = s + w - 1;
  double worst = -kInf;
  for (int k = gate_start; k < n; ++k) {
    const double v = eval.nmse_series(k);
    if (std::isnan(v)) continue;
    if (v > worst) worst = v;
  }
  eval.outcome.diverged = diverged;
  eval.outcome.error_value = std::isfinite(worst) ? worst : kInf;
  eval.outcome.success =
      !diverged && eval.outcome.error_value < task.threshold;

  if (n >= 2) {
    const double dm = td[n] / n;
    const double dv = td2[n] / n - dm * dm;
    eval.whole_run_nmse = dv > 1e-30 ? (se[n] / n) / dv : kInf;
  } else {
    eval.whole_run_nmse = kInf;
  }
  return eval;
}

}  // namespace ringrc

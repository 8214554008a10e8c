#include "ringrc/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <bit>
#include <chrono>
#include <cmath>
#include <exception>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iomanip>
#include <mutex>
#include <sstream>
#include <stdexcept>
#include <thread>

#include <nlohmann/json.hpp>

namespace ringrc {

namespace {

using json = nlohmann::ordered_json;
constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kNan = std::numeric_limits<double>::quiet_NaN();

std::uint64_t key_bits(double v) { return std::bit_cast<std::uint64_t>(v); }

// Index-sharded worker pool; results land in caller-owned slots, so the
// merge order never depends on scheduling.
void parallel_for(int n, int threads, const std::function<void(int)>& fn) {
  if (n <= 0) return;
  if (threads <= 0)
    threads = static_cast<int>(std::thread::hardware_concurrency());
  threads = std::max(1, std::min(threads, n));
  if (threads == 1) {
    for (int i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<int> next{0};
  std::exception_ptr first_error;
  std::mutex error_mutex;
  auto work = [&] {
    for (;;) {
      const int i = next.fetch_add(1);
      if (i >= n) return;
      try {
        fn(i);
      } catch (...) {
        std::lock_guard<std::mutex> lock(error_mutex);
        if (!first_error) first_error = std::current_exception();
      }
    }
  };
  std::vector<std::thread> pool;
  pool.reserve(static_cast<std::size_t>(threads));
  for (int t = 0; t < threads; ++t) pool.emplace_back(work);
  for (auto& th : pool) th.join();
  if (first_error) std::rethrow_exception(first_error);
}

struct CellResult {
  RunRecord record;
  Eigen::VectorXd nmse_series;  // pattern runs only
};

ReservoirConfig make_reservoir_config(const ExperimentConfig& cfg,
                                      std::uint64_t mask_seed) {
  ReservoirConfig rc;
  rc.n_neurons = cfg.n_neurons;
  rc.alpha = cfg.alpha;
  rc.beta = cfg.beta;
  rc.latency_prefix = cfg.latency_prefix;
  rc.roundtrip_time = cfg.roundtrip_time;
  rc.mask = make_mask(mask_seed, rc);
  return rc;
}

struct TrainedModel {
  RidgeSolution solution;
  ReadoutWeights weights;  // after optional fixed-point rounding
  bool clipped = false;
};

TrainedModel train_cell(const ExperimentConfig& cfg, const ReservoirConfig& rc,
                        const TaskDescriptor& task,
                        const Eigen::VectorXd& teacher,
                        const PatternTask* pattern, double lambda,
                        std::uint64_t noise_seed) {
  TrainedModel tm;
  if (task.kind == TaskKind::pattern && cfg.feedback_refit.enabled) {
    tm.solution = train_periodic_stabilized(
        rc, &cfg.hardware, noise_seed, pattern->pattern, cfg.train_length,
        cfg.warmup_length, lambda, cfg.washout, cfg.feedback_refit);
  } else {
    HardwareContext ctx(&cfg.hardware, mix64(noise_seed ^ 1));
    tm.solution = train(rc, &ctx, teacher, lambda, cfg.washout);
  }
  tm.weights = tm.solution.weights;
  if (cfg.hardware.weight_quant_enabled) {
    FixedPointWeights fx =
        quantize_weights(tm.weights.w, cfg.hardware.weight_bits);
    tm.weights.w = fx.to_real();
    tm.clipped = fx.clipped;
  }
  return tm;
}

AutonomousRun run_autonomous(const ExperimentConfig& cfg,
                             const ReservoirConfig& rc,
                             const ReadoutWeights& weights,
                             const Eigen::VectorXd& warmup, int n_steps,
                             std::uint64_t noise_seed) {
  HardwareContext ctx(&cfg.hardware, mix64(noise_seed ^ 2));
  return autonomous_run(rc, &ctx, weights, warmup, n_steps, cfg.blowup_bound);
}

double autonomous_score(const ExperimentConfig& cfg, const ReservoirConfig& rc,
                        const TaskDescriptor& task, const PatternTask* pattern,
                        const ReadoutWeights& weights,
                        const Eigen::VectorXd& warmup, int n_steps,
                        std::uint64_t noise_seed) {
  AutonomousRun run =
      run_autonomous(cfg, rc, weights, warmup, n_steps, noise_seed);
  if (task.kind == TaskKind::frequency) {
    FrequencyTask ft{task.nu, task.threshold, task.amplitude_tol};
    return evaluate_frequency_run(run.outputs, ft, run.diverged).error_value;
  }
  const int offset =
      cfg.warmup_length % static_cast<int>(pattern->pattern.size());
  return evaluate_pattern_run(run.outputs, *pattern, 0, offset, -1,
                              run.diverged)
      .outcome.error_value;
}

CellResult run_cell(const ExperimentConfig& config, const TaskDescriptor& task,
                    const RunSeeds& seeds) {
  const auto t0 = std::chrono::steady_clock::now();

  ExperimentConfig cfg = config;
  const OperatingPoint op = default_operating_point(task.kind);
  if (std::isnan(cfg.alpha)) cfg.alpha = op.alpha;
  if (std::isnan(cfg.beta)) cfg.beta = op.beta;
  cfg.validate();

  CellResult cell;
  cell.record.config = cfg;
  cell.record.task = task;
  cell.record.seeds = seeds;

  const ReservoirConfig rc = make_reservoir_config(cfg, seeds.mask_seed);

  Eigen::VectorXd teacher, warmup;
  PatternTask pattern;
  int phase_offset = 0;
  if (task.kind == TaskKind::frequency) {
    FrequencyTask ft{task.nu, task.threshold, task.amplitude_tol};
    ft.validate();
    teacher = sine_teacher(task.nu, cfg.train_length);
    warmup = sine_teacher(task.nu, cfg.warmup_length);
  } else {
    pattern = random_pattern(seeds.pattern_seed, task.pattern_length);
    pattern.threshold = task.threshold;
    teacher = periodic_teacher(pattern.pattern, cfg.train_length);
    warmup = periodic_teacher(pattern.pattern, cfg.warmup_length);
    phase_offset = cfg.warmup_length % task.pattern_length;
  }

  double lambda = cfg.lambda;
  if (!cfg.lambda_grid.empty()) {
    const int probe_steps = std::min(cfg.autonomous_length, 2000);
    double best_score = kInf;
    for (double cand : cfg.lambda_grid) {
      TrainedModel tm = train_cell(cfg, rc, task, teacher,
                                   task.kind == TaskKind::pattern ? &pattern
                                                                  : nullptr,
                                   cand, seeds.noise_seed);
      const double score = autonomous_score(
          cfg, rc, task, task.kind == TaskKind::pattern ? &pattern : nullptr,
          tm.weights, warmup, probe_steps, seeds.noise_seed);
      if (score < best_score) {
        best_score = score;
        lambda = cand;
      }
    }
    cell.record.config.lambda = lambda;
  }

  TrainedModel tm = train_cell(cfg, rc, task, teacher,
                               task.kind == TaskKind::pattern ? &pattern
                                                              : nullptr,
                               lambda, seeds.noise_seed);
  cell.record.train_nmse = tm.solution.train_nmse;
  cell.record.rank_deficient = tm.solution.rank_deficient;
  cell.record.weights_clipped = tm.clipped;

  AutonomousRun run = run_autonomous(cfg, rc, tm.weights, warmup,
                                     cfg.autonomous_length, seeds.noise_seed);

  if (task.kind == TaskKind::frequency) {
    FrequencyTask ft{task.nu, task.threshold, task.amplitude_tol};
    cell.record.outcome = evaluate_frequency_run(run.outputs, ft, run.diverged);
  } else {
    PatternEvaluation ev = evaluate_pattern_run(run.outputs, pattern, 0,
                                                phase_offset, -1, run.diverged);
    cell.record.outcome = ev.outcome;
    cell.record.whole_run_nmse = ev.whole_run_nmse;
    cell.nmse_series = std::move(ev.nmse_series);
  }
  if (cfg.store_outputs) {
    cell.record.outputs = run.outputs;
    cell.record.stored_outputs = true;
  }
  cell.record.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
          .count();
  return cell;
}

// Scan cells must never abort the scan; exceptional cells become failed
// records carrying the reason.
CellResult run_cell_guarded(const ExperimentConfig& config,
                            const TaskDescriptor& task, const RunSeeds& seeds) {
  try {
    return run_cell(config, task, seeds);
  } catch (const std::exception& e) {
    CellResult cell;
    cell.record.config = config;
    cell.record.task = task;
    cell.record.seeds = seeds;
    cell.record.outcome.success = false;
    cell.record.outcome.error_value = kInf;
    cell.record.failure_reason = e.what();
    return cell;
  }
}

}  // namespace

OperatingPoint default_operating_point(TaskKind kind) {
  // Calibrated on the acceptance protocol; see README. The pattern task runs
  // the sine deep into saturation (beta = 3 with patterns in [-0.5, 0.5]),
  // which regulates the amplitude of the generated cycle.
  if (kind == TaskKind::frequency) return {0.9, 0.25};
  return {0.9, 3.0};
}

void ExperimentConfig::validate() const {
  if (n_neurons < 2)
    throw std::invalid_argument("config: n_neurons must be >= 2");
  if (latency_prefix < 0 || latency_prefix >= n_neurons)
    throw std::invalid_argument("config: latency_prefix out of range");
  if (!(roundtrip_time > 0.0))
    throw std::invalid_argument("config: roundtrip_time must be > 0");
  if (warmup_length < 1)
    throw std::invalid_argument("config: warmup_length must be >= 1");
  if (autonomous_length < 1)
    throw std::invalid_argument("config: autonomous_length must be >= 1");
  if (washout < 0) throw std::invalid_argument("config: washout must be >= 0");
  if (train_length < washout + 2)
    throw std::invalid_argument("config: train_length must be >= washout + 2");
  if (!(lambda >= 0.0))
    throw std::invalid_argument("config: lambda must be >= 0");
  if (!(blowup_bound > 0.0))
    throw std::invalid_argument("config: blowup_bound must be > 0");
  if (masks_per_point < 1 || scan_masks < 1 || scan_patterns < 1 ||
      sweep_trials < 1)
    throw std::invalid_argument("config: repetition counts must be >= 1");
  if (sweep_min_length < 2)
    throw std::invalid_argument("config: sweep_min_length must be >= 2");
  if (sweep_max_length < 0)
    throw std::invalid_argument("config: sweep_max_length must be >= 0");
  if (feedback_refit.rounds < 0 || feedback_refit.segments < 1 ||
      feedback_refit.relock_factor < 1 || !(feedback_refit.gate > 0.0) ||
      feedback_refit.exploration_sigma < 0.0)
    throw std::invalid_argument("config: bad feedback_refit parameters");
  hardware.validate();
}

RunSeeds bandwidth_seeds(std::uint64_t master, double nu, int mask_index) {
  RunSeeds s;
  s.mask_seed = derive_seed(master, "bandwidth.mask",
                            {static_cast<std::uint64_t>(mask_index)});
  s.pattern_seed = 0;
  s.noise_seed = derive_seed(master, "bandwidth.noise",
                             {key_bits(nu), static_cast<std::uint64_t>(mask_index)});
  return s;
}

RunSeeds pattern_scan_seeds(std::uint64_t master, int length, int mask_index,
                            int pattern_index) {
  const auto l = static_cast<std::uint64_t>(length);
  const auto m = static_cast<std::uint64_t>(mask_index);
  const auto p = static_cast<std::uint64_t>(pattern_index);
  RunSeeds s;
  s.mask_seed = derive_seed(master, "patterns.mask", {m});
  s.pattern_seed = derive_seed(master, "patterns.pattern", {l, p});
  s.noise_seed = derive_seed(master, "patterns.noise", {l, m, p});
  return s;
}

RunSeeds sweep_seeds(std::uint64_t master, int length, int trial, int salt) {
  const auto l = static_cast<std::uint64_t>(length);
  const auto t = static_cast<std::uint64_t>(trial);
  const auto k = static_cast<std::uint64_t>(salt);
  RunSeeds s;
  s.mask_seed = derive_seed(master, "noise-sweep.mask", {l, k});
  s.pattern_seed = derive_seed(master, "noise-sweep.pattern", {l, t, k});
  s.noise_seed = derive_seed(master, "noise-sweep.noise", {l, t, k});
  return s;
}

RunRecord single_run(const ExperimentConfig& config, const TaskDescriptor& task,
                     const RunSeeds& seeds) {
  return run_cell(config, task, seeds).record;
}

BandwidthScanResult bandwidth_scan(const ExperimentConfig& config) {
  config.validate();
  BandwidthScanResult result;
  const int masks = config.masks_per_point;
  const int cells = static_cast<int>(config.nu_grid.size()) * masks;
  result.records.resize(static_cast<std::size_t>(cells));

  parallel_for(cells, config.threads, [&](int i) {
    const int gi = i / masks;
    const int m = i % masks;
    const double nu = config.nu_grid[static_cast<std::size_t>(gi)];
    TaskDescriptor task;
    task.kind = TaskKind::frequency;
    task.nu = nu;
    result.records[static_cast<std::size_t>(i)] =
        run_cell_guarded(config, task, bandwidth_seeds(config.master_seed, nu, m))
            .record;
  });

  for (std::size_t gi = 0; gi < config.nu_grid.size(); ++gi) {
    BandwidthRow row;
    row.nu = config.nu_grid[gi];
    row.mask_seed_base = derive_seed(config.master_seed, "bandwidth.mask", {0});
    row.trials = masks;
    row.successes = 0;
    for (int m = 0; m < masks; ++m)
      if (result.records[gi * static_cast<std::size_t>(masks) +
                         static_cast<std::size_t>(m)]
              .outcome.success)
        ++row.successes;
    result.rows.push_back(row);
  }
  return result;
}

PatternScanResult pattern_length_scan(const ExperimentConfig& config) {
  config.validate();
  for (int l : config.pattern_lengths)
    if (l < 2)
      throw std::invalid_argument(
          "pattern_length_scan: lengths must be >= 2 (L = 1 is constant)");

  PatternScanResult result;
  const int masks = config.scan_masks;
  const int patterns = config.scan_patterns;
  const int per_length = masks * patterns;
  const int cells =
      static_cast<int>(config.pattern_lengths.size()) * per_length;
  result.records.resize(static_cast<std::size_t>(cells));
  std::vector<Eigen::VectorXd> series(static_cast<std::size_t>(cells));

  parallel_for(cells, config.threads, [&](int i) {
    const int li = i / per_length;
    const int rest = i % per_length;
    const int m = rest / patterns;
    const int p = rest % patterns;
    const int length = config.pattern_lengths[static_cast<std::size_t>(li)];
    TaskDescriptor task;
    task.kind = TaskKind::pattern;
    task.pattern_length = length;
    CellResult cell = run_cell_guarded(
        config, task,
        pattern_scan_seeds(config.master_seed, length, m, p));
    result.records[static_cast<std::size_t>(i)] = std::move(cell.record);
    series[static_cast<std::size_t>(i)] = std::move(cell.nmse_series);
  });

  for (std::size_t li = 0; li < config.pattern_lengths.size(); ++li) {
    PatternLengthResult row;
    row.length = config.pattern_lengths[li];
    row.trials = per_length;
    row.successes = 0;
    row.mean_nmse = Eigen::VectorXd::Zero(config.autonomous_length);
    for (int c = 0; c < per_length; ++c) {
      const std::size_t i = li * static_cast<std::size_t>(per_length) +
                            static_cast<std::size_t>(c);
      if (result.records[i].outcome.success) ++row.successes;
      const Eigen::VectorXd& s = series[i];
      for (int k = 0; k < config.autonomous_length; ++k) {
        // truncated (diverged) series count as infinite error from there on
        const double v = k < s.size() ? s(k) : kInf;
        row.mean_nmse(k) += v / per_length;
      }
    }
    result.rows.push_back(std::move(row));
  }
  return result;
}

RunRecord noise_sweep_cell(const ExperimentConfig& config, double sigma,
                           int length, int trial, int salt) {
  ExperimentConfig cfg = config;
  cfg.hardware.noise_sigma = sigma;
  cfg.hardware.noise_enabled = sigma > 0.0;
  TaskDescriptor task;
  task.kind = TaskKind::pattern;
  task.pattern_length = length;
  return run_cell_guarded(cfg, task,
                          sweep_seeds(config.master_seed, length, trial, salt))
      .record;
}

namespace {

int sweep_search(const ExperimentConfig& config, double sigma, int salt,
                 std::vector<RunRecord>* records) {
  const int max_length =
      config.sweep_max_length > 0 ? config.sweep_max_length : config.n_neurons;
  int best = config.sweep_min_length - 1;
  for (int l = config.sweep_min_length; l <= max_length; ++l) {
    std::vector<RunRecord> batch(static_cast<std::size_t>(config.sweep_trials));
    parallel_for(config.sweep_trials, config.threads, [&](int t) {
      batch[static_cast<std::size_t>(t)] =
          noise_sweep_cell(config, sigma, l, t, salt);
    });
    bool all = true;
    for (const RunRecord& r : batch)
      if (!r.outcome.success) all = false;
    if (records)
      for (RunRecord& r : batch) records->push_back(std::move(r));
    if (!all) break;  // first failing length ends the ascending search
    best = l;
  }
  return best;
}

}  // namespace

NoiseSweepResult noise_sweep(const ExperimentConfig& config) {
  config.validate();
  NoiseSweepResult result;
  for (double sigma : config.sigma_grid) {
    NoiseSweepRow row;
    row.sigma = sigma;
    row.trials_per_length = config.sweep_trials;
    row.max_length = sweep_search(config, sigma, 0, &result.records);
    row.reran = false;
    result.rows.push_back(row);
  }

  // Monotonicity repair: max_L must be non-increasing in sigma. A violating
  // sigma is re-run once with fresh (salted) seeds to absorb sampling noise.
  std::vector<std::size_t> order(result.rows.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return result.rows[a].sigma < result.rows[b].sigma;
  });
  for (std::size_t k = 1; k < order.size(); ++k) {
    NoiseSweepRow& prev = result.rows[order[k - 1]];
    NoiseSweepRow& cur = result.rows[order[k]];
    if (cur.max_length > prev.max_length) {
      cur.max_length = sweep_search(config, cur.sigma, 1, &result.records);
      cur.reran = true;
    }
  }
  return result;
}

ReplayResult replay(const RunRecord& record) {
  if (!record.failure_reason.empty())
    throw std::invalid_argument(
        "replay: record describes a failed cell, nothing to replay");
  ReplayResult r;
  ExperimentConfig cfg = record.config;
  cfg.store_outputs = true;
  cfg.lambda_grid.clear();  // the record already carries the chosen lambda
  r.fresh = single_run(cfg, record.task, record.seeds);
  r.outputs_match =
      !record.stored_outputs ||
      (r.fresh.outputs.size() == record.outputs.size() &&
       r.fresh.outputs.cwiseEqual(record.outputs).all());
  return r;
}

// ---------------------------------------------------------------------------
// persistence

namespace {

json hw_to_json(const HardwareModel& hw) {
  return json{{"noise_sigma", hw.noise_sigma},
              {"noise_enabled", hw.noise_enabled},
              {"adc_bits", hw.adc_bits},
              {"adc_enabled", hw.adc_enabled},
              {"dac_bits", hw.dac_bits},
              {"dac_enabled", hw.dac_enabled},
              {"weight_bits", hw.weight_bits},
              {"weight_quant_enabled", hw.weight_quant_enabled},
              {"state_gain", hw.state_gain},
              {"gain_enabled", hw.gain_enabled},
              {"highpass_cutoff", hw.highpass_cutoff},
              {"highpass_enabled", hw.highpass_enabled}};
}

HardwareModel hw_from_json(const json& j) {
  HardwareModel hw;
  hw.noise_sigma = j.value("noise_sigma", hw.noise_sigma);
  hw.noise_enabled = j.value("noise_enabled", hw.noise_enabled);
  hw.adc_bits = j.value("adc_bits", hw.adc_bits);
  hw.adc_enabled = j.value("adc_enabled", hw.adc_enabled);
  hw.dac_bits = j.value("dac_bits", hw.dac_bits);
  hw.dac_enabled = j.value("dac_enabled", hw.dac_enabled);
  hw.weight_bits = j.value("weight_bits", hw.weight_bits);
  hw.weight_quant_enabled =
      j.value("weight_quant_enabled", hw.weight_quant_enabled);
  hw.state_gain = j.value("state_gain", hw.state_gain);
  hw.gain_enabled = j.value("gain_enabled", hw.gain_enabled);
  hw.highpass_cutoff = j.value("highpass_cutoff", hw.highpass_cutoff);
  hw.highpass_enabled = j.value("highpass_enabled", hw.highpass_enabled);
  return hw;
}

json refit_to_json(const FeedbackRefit& r) {
  return json{{"enabled", r.enabled},
              {"rounds", r.rounds},
              {"segments", r.segments},
              {"relock_factor", r.relock_factor},
              {"gate", r.gate},
              {"exploration_sigma", r.exploration_sigma}};
}

FeedbackRefit refit_from_json(const json& j) {
  FeedbackRefit r;
  r.enabled = j.value("enabled", r.enabled);
  r.rounds = j.value("rounds", r.rounds);
  r.segments = j.value("segments", r.segments);
  r.relock_factor = j.value("relock_factor", r.relock_factor);
  r.gate = j.value("gate", r.gate);
  r.exploration_sigma = j.value("exploration_sigma", r.exploration_sigma);
  return r;
}

// JSON has no NaN/inf literals; unset alpha/beta serialize as null.
json opt_num(double v) {
  if (std::isnan(v)) return nullptr;
  return v;
}
double num_or_nan(const json& j, const char* key, double fallback) {
  if (!j.contains(key)) return fallback;
  if (j[key].is_null()) return kNan;
  return j[key].get<double>();
}

json config_to_json_obj(const ExperimentConfig& c) {
  json j;
  j["n_neurons"] = c.n_neurons;
  j["alpha"] = opt_num(c.alpha);
  j["beta"] = opt_num(c.beta);
  j["latency_prefix"] = c.latency_prefix;
  j["roundtrip_time"] = c.roundtrip_time;
  j["hardware"] = hw_to_json(c.hardware);
  j["train_length"] = c.train_length;
  j["warmup_length"] = c.warmup_length;
  j["autonomous_length"] = c.autonomous_length;
  j["lambda"] = c.lambda;
  j["washout"] = c.washout;
  j["blowup_bound"] = c.blowup_bound;
  j["feedback_refit"] = refit_to_json(c.feedback_refit);
  j["lambda_grid"] = c.lambda_grid;
  j["master_seed"] = c.master_seed;
  j["threads"] = c.threads;
  j["store_outputs"] = c.store_outputs;
  j["nu_grid"] = c.nu_grid;
  j["masks_per_point"] = c.masks_per_point;
  j["pattern_lengths"] = c.pattern_lengths;
  j["scan_masks"] = c.scan_masks;
  j["scan_patterns"] = c.scan_patterns;
  j["sigma_grid"] = c.sigma_grid;
  j["sweep_trials"] = c.sweep_trials;
  j["sweep_min_length"] = c.sweep_min_length;
  j["sweep_max_length"] = c.sweep_max_length;
  return j;
}

ExperimentConfig config_from_json_obj(const json& j) {
  ExperimentConfig c;
  c.n_neurons = j.value("n_neurons", c.n_neurons);
  c.alpha = num_or_nan(j, "alpha", c.alpha);
  c.beta = num_or_nan(j, "beta", c.beta);
  c.latency_prefix = j.value("latency_prefix", c.latency_prefix);
  c.roundtrip_time = j.value("roundtrip_time", c.roundtrip_time);
  if (j.contains("hardware")) c.hardware = hw_from_json(j["hardware"]);
  c.train_length = j.value("train_length", c.train_length);
  c.warmup_length = j.value("warmup_length", c.warmup_length);
  c.autonomous_length = j.value("autonomous_length", c.autonomous_length);
  c.lambda = j.value("lambda", c.lambda);
  c.washout = j.value("washout", c.washout);
  c.blowup_bound = j.value("blowup_bound", c.blowup_bound);
  if (j.contains("feedback_refit"))
    c.feedback_refit = refit_from_json(j["feedback_refit"]);
  c.lambda_grid = j.value("lambda_grid", c.lambda_grid);
  c.master_seed = j.value("master_seed", c.master_seed);
  c.threads = j.value("threads", c.threads);
  c.store_outputs = j.value("store_outputs", c.store_outputs);
  c.nu_grid = j.value("nu_grid", c.nu_grid);
  c.masks_per_point = j.value("masks_per_point", c.masks_per_point);
  c.pattern_lengths = j.value("pattern_lengths", c.pattern_lengths);
  c.scan_masks = j.value("scan_masks", c.scan_masks);
  c.scan_patterns = j.value("scan_patterns", c.scan_patterns);
  c.sigma_grid = j.value("sigma_grid", c.sigma_grid);
  c.sweep_trials = j.value("sweep_trials", c.sweep_trials);
  c.sweep_min_length = j.value("sweep_min_length", c.sweep_min_length);
  c.sweep_max_length = j.value("sweep_max_length", c.sweep_max_length);
  return c;
}

json task_to_json(const TaskDescriptor& t) {
  return json{{"kind", t.kind == TaskKind::frequency ? "frequency" : "pattern"},
              {"nu", t.nu},
              {"pattern_length", t.pattern_length},
              {"threshold", t.threshold},
              {"amplitude_tol", t.amplitude_tol}};
}

TaskDescriptor task_from_json(const json& j) {
  TaskDescriptor t;
  const std::string kind = j.value("kind", "frequency");
  if (kind == "frequency") {
    t.kind = TaskKind::frequency;
  } else if (kind == "pattern") {
    t.kind = TaskKind::pattern;
  } else {
    throw std::invalid_argument("task: unknown kind '" + kind + "'");
  }
  t.nu = j.value("nu", t.nu);
  t.pattern_length = j.value("pattern_length", t.pattern_length);
  t.threshold = j.value("threshold", t.threshold);
  t.amplitude_tol = j.value("amplitude_tol", t.amplitude_tol);
  return t;
}

json finite_or_null(double v) {
  if (std::isfinite(v)) return v;
  return nullptr;
}
double metric_from_json(const json& j, const char* key, double fallback) {
  if (!j.contains(key)) return fallback;
  if (j[key].is_null()) return kInf;  // non-finite metrics mean failure
  return j[key].get<double>();
}

void write_text_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open for writing: " + path);
  out << text;
  if (!out) throw std::runtime_error("write failed: " + path);
}

std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open for reading: " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

std::string to_json_string(const RunRecord& r) {
  json j;
  j["config"] = config_to_json_obj(r.config);
  j["task"] = task_to_json(r.task);
  j["seeds"] = {{"mask_seed", r.seeds.mask_seed},
                {"pattern_seed", r.seeds.pattern_seed},
                {"noise_seed", r.seeds.noise_seed}};
  j["outcome"] = {{"success", r.outcome.success},
                  {"error_value", finite_or_null(r.outcome.error_value)},
                  {"diverged", r.outcome.diverged}};
  j["train_nmse"] = finite_or_null(r.train_nmse);
  j["whole_run_nmse"] = finite_or_null(r.whole_run_nmse);
  j["rank_deficient"] = r.rank_deficient;
  j["weights_clipped"] = r.weights_clipped;
  j["wall_seconds"] = r.wall_seconds;
  j["failure_reason"] = r.failure_reason;
  j["stored_outputs"] = r.stored_outputs;
  if (r.stored_outputs) {
    json arr = json::array();
    for (Eigen::Index i = 0; i < r.outputs.size(); ++i)
      arr.push_back(r.outputs(i));
    j["outputs"] = std::move(arr);
  }
  return j.dump(2);
}

RunRecord record_from_json_string(const std::string& text) {
  const json j = json::parse(text);
  RunRecord r;
  r.config = config_from_json_obj(j.at("config"));
  r.task = task_from_json(j.at("task"));
  const json& s = j.at("seeds");
  r.seeds.mask_seed = s.at("mask_seed").get<std::uint64_t>();
  r.seeds.pattern_seed = s.at("pattern_seed").get<std::uint64_t>();
  r.seeds.noise_seed = s.at("noise_seed").get<std::uint64_t>();
  const json& o = j.at("outcome");
  r.outcome.success = o.at("success").get<bool>();
  r.outcome.error_value = metric_from_json(o, "error_value", kInf);
  r.outcome.diverged = o.at("diverged").get<bool>();
  r.train_nmse = metric_from_json(j, "train_nmse", 0.0);
  r.whole_run_nmse = metric_from_json(j, "whole_run_nmse", 0.0);
  r.rank_deficient = j.value("rank_deficient", false);
  r.weights_clipped = j.value("weights_clipped", false);
  r.wall_seconds = j.value("wall_seconds", 0.0);
  r.failure_reason = j.value("failure_reason", std::string{});
  r.stored_outputs = j.value("stored_outputs", false);
  if (r.stored_outputs) {
    const json& arr = j.at("outputs");
    r.outputs.resize(static_cast<Eigen::Index>(arr.size()));
    for (std::size_t i = 0; i < arr.size(); ++i)
      r.outputs(static_cast<Eigen::Index>(i)) = arr[i].get<double>();
  }
  return r;
}

void write_run_record(const RunRecord& record, const std::string& path) {
  write_text_file(path, to_json_string(record) + "\n");
}

RunRecord load_run_record(const std::string& path) {
  return record_from_json_string(read_text_file(path));
}

std::vector<std::string> write_records(const std::vector<RunRecord>& records,
                                       const std::string& dir) {
  std::filesystem::create_directories(dir);
  std::vector<std::string> paths;
  paths.reserve(records.size());
  for (std::size_t i = 0; i < records.size(); ++i) {
    std::ostringstream name;
    name << "run_" << std::setw(6) << std::setfill('0') << i << ".json";
    const std::string path = (std::filesystem::path(dir) / name.str()).string();
    write_run_record(records[i], path);
    paths.push_back(path);
  }
  return paths;
}

std::string config_to_json(const ExperimentConfig& config) {
  return config_to_json_obj(config).dump(2);
}

ExperimentConfig config_from_json_string(const std::string& text) {
  return config_from_json_obj(json::parse(text));
}

ExperimentConfig load_config(const std::string& path) {
  return config_from_json_string(read_text_file(path));
}

void write_config(const ExperimentConfig& config, const std::string& path) {
  write_text_file(path, config_to_json(config) + "\n");
}

namespace {

std::string fmt_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  std::ostringstream ss;
  ss << std::setprecision(17) << v;
  return ss.str();
}

}  // namespace

void write_bandwidth_csv(const std::vector<BandwidthRow>& rows,
                         const std::string& path) {
  std::ostringstream out;
  out << "nu,mask_seed_base,successes,trials\n";
  for (const BandwidthRow& r : rows)
    out << fmt_double(r.nu) << ',' << r.mask_seed_base << ',' << r.successes
        << ',' << r.trials << '\n';
  write_text_file(path, out.str());
}

void write_pattern_curves_csv(const std::vector<PatternLengthResult>& rows,
                              const std::string& path) {
  std::ostringstream out;
  out << "length,step,mean_windowed_nmse\n";
  for (const PatternLengthResult& r : rows)
    for (Eigen::Index k = 0; k < r.mean_nmse.size(); ++k)
      out << r.length << ',' << k << ',' << fmt_double(r.mean_nmse(k)) << '\n';
  write_text_file(path, out.str());
}

void write_pattern_summary_csv(const std::vector<PatternLengthResult>& rows,
                               const std::string& path) {
  std::ostringstream out;
  out << "length,successes,trials\n";
  for (const PatternLengthResult& r : rows)
    out << r.length << ',' << r.successes << ',' << r.trials << '\n';
  write_text_file(path, out.str());
}

void write_noise_csv(const std::vector<NoiseSweepRow>& rows,
                     const std::string& path) {
  std::ostringstream out;
  out << "sigma,max_L,trials_per_L\n";
  for (const NoiseSweepRow& r : rows)
    out << fmt_double(r.sigma) << ',' << r.max_length << ','
        << r.trials_per_length << '\n';
  write_text_file(path, out.str());
}

}  // namespace ringrc

#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <limits>
#include <string>
#include <vector>

#include "ringrc/hardware.hpp"
#include "ringrc/reservoir.hpp"
#include "ringrc/tasks.hpp"
#include "ringrc/trainer.hpp"

namespace ringrc {

enum class TaskKind { frequency, pattern };

struct TaskDescriptor {
  TaskKind kind = TaskKind::frequency;
  double nu = 0.1;         // frequency task
  int pattern_length = 10; // pattern task
  double threshold = 1e-3;
  double amplitude_tol = 0.1;
};

// Tuned per-task operating point for (alpha, beta); applied when the config
// leaves them unset.
struct OperatingPoint {
  double alpha;
  double beta;
};
OperatingPoint default_operating_point(TaskKind kind);

struct ExperimentConfig {
  int n_neurons = 100;
  // NaN = resolve from the task's default operating point.
  double alpha = std::numeric_limits<double>::quiet_NaN();
  double beta = std::numeric_limits<double>::quiet_NaN();
  int latency_prefix = 23;
  double roundtrip_time = 7.93e-6;

  HardwareModel hardware;

  int train_length = 1000;
  int warmup_length = 128;
  int autonomous_length = 10000;
  double lambda = 1e-6;
  int washout = 100;
  double blowup_bound = 1e6;
  FeedbackRefit feedback_refit;  // pattern-task loop hardening
  // Optional ridge-parameter grid, scored by the autonomous metric on a
  // shortened validation run; empty = use `lambda` as is.
  std::vector<double> lambda_grid;

  std::uint64_t master_seed = 42;
  int threads = 0;  // 0 = hardware concurrency
  bool store_outputs = false;

  // scan protocol; defaults mirror the experimental protocol
  std::vector<double> nu_grid = {0.01, 0.02, 0.03, 0.04, 0.05,
                                 0.06, 0.07, 0.08, 0.09, 0.10};
  int masks_per_point = 10;
  std::vector<int> pattern_lengths = {10, 11, 12, 13, 14, 15, 16};
  int scan_masks = 5;
  int scan_patterns = 20;
  std::vector<double> sigma_grid = {1e-8, 1e-6, 1e-5, 1e-4, 1e-3, 1e-2};
  int sweep_trials = 10;
  int sweep_min_length = 2;
  int sweep_max_length = 0;  // 0 = n_neurons

  void validate() const;
};

struct RunSeeds {
  std::uint64_t mask_seed = 0;
  std::uint64_t pattern_seed = 0;
  std::uint64_t noise_seed = 0;
};

// One persisted experiment cell; config + seeds suffice for bitwise replay.
struct RunRecord {
  ExperimentConfig config;  // alpha/beta stored resolved
  TaskDescriptor task;
  RunSeeds seeds;
  TaskOutcome outcome;
  double train_nmse = 0.0;
  double whole_run_nmse = 0.0;  // pattern runs; 0 for frequency runs
  bool rank_deficient = false;
  bool weights_clipped = false;
  bool stored_outputs = false;
  Eigen::VectorXd outputs;
  double wall_seconds = 0.0;
  std::string failure_reason;  // non-empty if the cell raised instead of running
};

RunRecord single_run(const ExperimentConfig& config, const TaskDescriptor& task,
                     const RunSeeds& seeds);

// Seed policies. All keys are values (frequency bits, lengths, trial
// numbers), never grid positions, so removing one cell from a scan cannot
// shift any other cell's seeds. Bandwidth masks are shared across
// frequencies; noise-sweep seeds exclude sigma so every noise level sees the
// same masks, patterns and noise stream (common random numbers).
RunSeeds bandwidth_seeds(std::uint64_t master, double nu, int mask_index);
RunSeeds pattern_scan_seeds(std::uint64_t master, int length, int mask_index,
                            int pattern_index);
RunSeeds sweep_seeds(std::uint64_t master, int length, int trial,
                     int salt = 0);

struct BandwidthRow {
  double nu;
  std::uint64_t mask_seed_base;
  int successes;
  int trials;
};
struct BandwidthScanResult {
  std::vector<BandwidthRow> rows;
  std::vector<RunRecord> records;
};
BandwidthScanResult bandwidth_scan(const ExperimentConfig& config);

struct PatternLengthResult {
  int length;
  Eigen::VectorXd mean_nmse;  // mean windowed NMSE per autonomous step
  int successes;
  int trials;
};
struct PatternScanResult {
  std::vector<PatternLengthResult> rows;
  std::vector<RunRecord> records;
};
PatternScanResult pattern_length_scan(const ExperimentConfig& config);

struct NoiseSweepRow {
  double sigma;
  int max_length;  // largest L passing all trials; sweep_min_length-1 if none
  int trials_per_length;
  bool reran;  // monotonicity repair re-ran this sigma once
};
struct NoiseSweepResult {
  std::vector<NoiseSweepRow> rows;
  std::vector<RunRecord> records;
};
NoiseSweepResult noise_sweep(const ExperimentConfig& config);

// One sweep cell, exposed so the ascending early-stop search can be checked
// against exhaustive evaluation.
RunRecord noise_sweep_cell(const ExperimentConfig& config, double sigma,
                           int length, int trial, int salt = 0);

struct ReplayResult {
  RunRecord fresh;
  bool outputs_match;  // bitwise, when the original stored its outputs
};
ReplayResult replay(const RunRecord& record);

// Persistence: one JSON document per record, CSV tables for the scans.
std::string to_json_string(const RunRecord& record);
RunRecord record_from_json_string(const std::string& text);
void write_run_record(const RunRecord& record, const std::string& path);
RunRecord load_run_record(const std::string& path);
std::vector<std::string> write_records(const std::vector<RunRecord>& records,
                                       const std::string& dir);

std::string config_to_json(const ExperimentConfig& config);
ExperimentConfig config_from_json_string(const std::string& text);
ExperimentConfig load_config(const std::string& path);
void write_config(const ExperimentConfig& config, const std::string& path);

void write_bandwidth_csv(const std::vector<BandwidthRow>& rows,
                         const std::string& path);
void write_pattern_curves_csv(const std::vector<PatternLengthResult>& rows,
                              const std::string& path);
void write_pattern_summary_csv(const std::vector<PatternLengthResult>& rows,
                               const std::string& path);
void write_noise_csv(const std::vector<NoiseSweepRow>& rows,
                     const std::string& path);

}  // namespace ringrc

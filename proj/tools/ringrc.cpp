// Command-line experiment orchestrator for the ring reservoir simulator:
// single runs, the bandwidth scan, the pattern-length scan, the noise sweep,
// record replay and CSV export. Exit code is nonzero only on configuration
// or I/O errors; task failures are results, not errors.

#include <CLI11.hpp>

#include <algorithm>
#include <filesystem>
#include <iostream>
#include <map>
#include <string>
#include <vector>

#include "ringrc/experiment.hpp"

namespace fs = std::filesystem;
using namespace ringrc;

namespace {

// Every ExperimentConfig field is overridable by a flag of the same name.
// The bound fields are preloaded from --config (if any) before the parse,
// so flags that were actually given win over the document.
void add_config_flags(CLI::App* cmd, ExperimentConfig& cfg) {
  cmd->add_option("--n-neurons", cfg.n_neurons, "reservoir size N");
  cmd->add_option("--alpha", cfg.alpha, "feedback gain (default: per task)");
  cmd->add_option("--beta", cfg.beta, "input gain (default: per task)");
  cmd->add_option("--latency-prefix", cfg.latency_prefix,
                  "leading mask entries forced to zero");
  cmd->add_option("--roundtrip-time", cfg.roundtrip_time,
                  "loop roundtrip time in seconds");
  cmd->add_option("--train-length", cfg.train_length, "teacher steps");
  cmd->add_option("--warmup-length", cfg.warmup_length,
                  "teacher-forced steps before closing the loop");
  cmd->add_option("--autonomous-length", cfg.autonomous_length,
                  "autonomous steps");
  cmd->add_option("--lambda", cfg.lambda, "ridge regularization");
  cmd->add_option("--lambda-grid", cfg.lambda_grid,
                  "candidate lambdas, scored on a validation run");
  cmd->add_option("--washout", cfg.washout, "training rows discarded");
  cmd->add_option("--blowup-bound", cfg.blowup_bound,
                  "divergence guard on |y|");
  cmd->add_flag("--refit-on,!--refit-off", cfg.feedback_refit.enabled,
                "closed-loop refit rounds for pattern training");
  cmd->add_option("--refit-rounds", cfg.feedback_refit.rounds,
                  "closed-loop refit rounds");
  cmd->add_option("--refit-segments", cfg.feedback_refit.segments,
                  "relock/free segment pairs per refit round");
  cmd->add_option("--refit-relock", cfg.feedback_refit.relock_factor,
                  "teacher-forced periods between free segments");
  cmd->add_option("--refit-gate", cfg.feedback_refit.gate,
                  "collection stops when |y - target| exceeds this");
  cmd->add_option("--refit-exploration", cfg.feedback_refit.exploration_sigma,
                  "output dither while collecting refit data");
  cmd->add_option("--master-seed", cfg.master_seed, "master seed");
  cmd->add_option("--threads", cfg.threads, "worker threads (0 = all cores)");
  cmd->add_flag("--store-outputs", cfg.store_outputs,
                "keep output series in run records");

  cmd->add_option("--noise-sigma", cfg.hardware.noise_sigma,
                  "state noise standard deviation");
  cmd->add_flag("--noise-on,!--noise-off", cfg.hardware.noise_enabled,
                "state noise");
  cmd->add_option("--adc-bits", cfg.hardware.adc_bits, "ADC resolution");
  cmd->add_flag("--adc-on,!--adc-off", cfg.hardware.adc_enabled,
                "ADC quantization of acquired states");
  cmd->add_option("--dac-bits", cfg.hardware.dac_bits, "DAC resolution");
  cmd->add_flag("--dac-on,!--dac-off", cfg.hardware.dac_enabled,
                "DAC quantization of the injected input");
  cmd->add_option("--weight-bits", cfg.hardware.weight_bits,
                  "fixed-point weight width");
  cmd->add_flag("--weights-quantized,!--weights-real",
                cfg.hardware.weight_quant_enabled,
                "round readout weights to fixed point");
  cmd->add_option("--state-gain", cfg.hardware.state_gain,
                  "digital gain applied to acquired states");
  cmd->add_flag("--gain-on,!--gain-off", cfg.hardware.gain_enabled,
                "state gain");
  cmd->add_option("--highpass-cutoff", cfg.hardware.highpass_cutoff,
                  "AC-coupling cutoff, cycles per neuron sample");
  cmd->add_flag("--highpass-on,!--highpass-off", cfg.hardware.highpass_enabled,
                "feedback high-pass filter");
  cmd->add_flag_callback(
      "--hw-experiment",
      [&cfg] {
        const double sigma = cfg.hardware.noise_sigma;
        cfg.hardware = HardwareModel::experiment(sigma > 0 ? sigma : 1e-3);
      },
      "enable the full experimental emulation profile");

  cmd->add_option("--nu-grid", cfg.nu_grid, "bandwidth scan frequencies");
  cmd->add_option("--masks-per-point", cfg.masks_per_point,
                  "masks per bandwidth point");
  cmd->add_option("--pattern-lengths", cfg.pattern_lengths,
                  "pattern scan lengths");
  cmd->add_option("--scan-masks", cfg.scan_masks, "masks per pattern length");
  cmd->add_option("--scan-patterns", cfg.scan_patterns,
                  "patterns per (length, mask)");
  cmd->add_option("--sigma-grid", cfg.sigma_grid, "noise sweep sigma values");
  cmd->add_option("--sweep-trials", cfg.sweep_trials,
                  "patterns per length in the sweep");
  cmd->add_option("--sweep-min-length", cfg.sweep_min_length,
                  "sweep search start");
  cmd->add_option("--sweep-max-length", cfg.sweep_max_length,
                  "sweep search cap (0 = N)");
}

std::string find_config_arg(int argc, char** argv) {
  for (int i = 1; i < argc; ++i) {
    const std::string a = argv[i];
    if (a == "--config" && i + 1 < argc) return argv[i + 1];
    if (a.rfind("--config=", 0) == 0) return a.substr(9);
  }
  return {};
}

void persist(const std::string& out_dir, bool no_records,
             const std::vector<RunRecord>& records) {
  if (no_records || records.empty()) return;
  write_records(records, (fs::path(out_dir) / "records").string());
}

std::string mode_note(const ExperimentConfig& cfg) {
  return cfg.hardware.any_enabled() ? "hardware emulation" : "ideal model";
}

void print_run_summary(const RunRecord& rec) {
  if (!rec.failure_reason.empty()) {
    std::cout << "run failed to execute: " << rec.failure_reason << "\n";
    return;
  }
  if (rec.task.kind == TaskKind::frequency)
    std::cout << "frequency task nu=" << rec.task.nu;
  else
    std::cout << "pattern task L=" << rec.task.pattern_length;
  std::cout << (rec.outcome.success ? "  SUCCESS" : "  FAILURE")
            << "  error=" << rec.outcome.error_value
            << "  train_nmse=" << rec.train_nmse
            << (rec.outcome.diverged ? "  (diverged)" : "") << "\n";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{
      "ringrc - ring-topology reservoir computer with output feedback:\n"
      "training, autonomous generation and noise/precision studies"};
  app.require_subcommand(1);
  app.fallthrough();

  std::string config_path;
  std::string out_dir = "out";
  bool no_records = false;
  app.add_option("--config", config_path,
                 "JSON configuration document (flags override its fields)")
      ->check(CLI::ExistingFile);
  app.add_option("--out", out_dir, "output directory");
  app.add_flag("--no-records", no_records,
               "do not write per-run record files");

  ExperimentConfig cfg;
  const std::string preload = find_config_arg(argc, argv);
  if (!preload.empty()) {
    try {
      cfg = load_config(preload);
    } catch (const std::exception& e) {
      std::cerr << "error: " << e.what() << "\n";
      return 1;
    }
  }

  auto* run_cmd = app.add_subcommand("run", "execute one experiment cell");
  std::string task_name = "frequency";
  double nu = 0.1;
  int pattern_length = 10;
  double threshold = 1e-3;
  double amplitude_tol = 0.1;
  run_cmd->add_option("--task", task_name, "frequency | pattern")
      ->check(CLI::IsMember({"frequency", "pattern"}));
  run_cmd->add_option("--nu", nu, "relative frequency (radians/step)");
  run_cmd->add_option("--pattern-length", pattern_length, "pattern length L");
  run_cmd->add_option("--threshold", threshold, "success threshold");
  run_cmd->add_option("--amplitude-tol", amplitude_tol,
                      "allowed amplitude deviation (frequency task)");
  add_config_flags(run_cmd, cfg);

  auto* bw_cmd =
      app.add_subcommand("scan-bandwidth", "frequency grid x masks scan");
  add_config_flags(bw_cmd, cfg);

  auto* pat_cmd = app.add_subcommand(
      "scan-patterns", "pattern lengths x masks x patterns scan");
  add_config_flags(pat_cmd, cfg);

  auto* noise_cmd = app.add_subcommand(
      "sweep-noise", "max generable pattern length per noise level");
  add_config_flags(noise_cmd, cfg);

  auto* replay_cmd =
      app.add_subcommand("replay", "re-execute a stored run record");
  std::string record_path;
  replay_cmd->add_option("record", record_path, "record JSON file")
      ->required()
      ->check(CLI::ExistingFile);

  auto* export_cmd = app.add_subcommand(
      "export", "rebuild CSV tables from a directory of run records");
  std::string records_dir;
  export_cmd->add_option("records", records_dir, "records directory")
      ->required()
      ->check(CLI::ExistingDirectory);

  CLI11_PARSE(app, argc, argv);

  try {
    fs::create_directories(out_dir);

    if (*run_cmd) {
      TaskDescriptor task;
      task.kind =
          task_name == "frequency" ? TaskKind::frequency : TaskKind::pattern;
      task.nu = nu;
      task.pattern_length = pattern_length;
      task.threshold = threshold;
      task.amplitude_tol = amplitude_tol;

      RunSeeds seeds;
      seeds.mask_seed = derive_seed(cfg.master_seed, "run.mask", {0});
      seeds.pattern_seed = derive_seed(cfg.master_seed, "run.pattern", {0});
      seeds.noise_seed = derive_seed(cfg.master_seed, "run.noise", {0});

      std::cerr << "running single cell (" << mode_note(cfg) << ")\n";
      RunRecord rec = single_run(cfg, task, seeds);
      print_run_summary(rec);
      persist(out_dir, no_records, {rec});
      if (!no_records)
        std::cout << "record: "
                  << (fs::path(out_dir) / "records" / "run_000000.json")
                         .string()
                  << "\n";
      return 0;
    }

    if (*bw_cmd) {
      std::cerr << "bandwidth scan over " << cfg.nu_grid.size()
                << " frequencies x " << cfg.masks_per_point << " masks ("
                << mode_note(cfg) << ")\n";
      BandwidthScanResult res = bandwidth_scan(cfg);
      const std::string table = (fs::path(out_dir) / "bandwidth.csv").string();
      write_bandwidth_csv(res.rows, table);
      persist(out_dir, no_records, res.records);
      for (const BandwidthRow& r : res.rows)
        std::cout << "nu=" << r.nu << "  " << r.successes << "/" << r.trials
                  << "\n";
      std::cout << "table: " << table << "\n";
      return 0;
    }

    if (*pat_cmd) {
      std::cerr << "pattern scan over " << cfg.pattern_lengths.size()
                << " lengths x " << cfg.scan_masks << " masks x "
                << cfg.scan_patterns << " patterns (" << mode_note(cfg)
                << ")\n";
      PatternScanResult res = pattern_length_scan(cfg);
      const std::string curves =
          (fs::path(out_dir) / "pattern_curves.csv").string();
      const std::string summary =
          (fs::path(out_dir) / "pattern_summary.csv").string();
      write_pattern_curves_csv(res.rows, curves);
      write_pattern_summary_csv(res.rows, summary);
      persist(out_dir, no_records, res.records);
      for (const PatternLengthResult& r : res.rows)
        std::cout << "L=" << r.length << "  " << r.successes << "/" << r.trials
                  << " cells under threshold\n";
      std::cout << "tables: " << curves << ", " << summary << "\n";
      return 0;
    }

    if (*noise_cmd) {
      std::cerr << "noise sweep over " << cfg.sigma_grid.size()
                << " sigma values, " << cfg.sweep_trials
                << " patterns per length\n";
      NoiseSweepResult res = noise_sweep(cfg);
      const std::string table =
          (fs::path(out_dir) / "noise_sweep.csv").string();
      write_noise_csv(res.rows, table);
      persist(out_dir, no_records, res.records);
      for (const NoiseSweepRow& r : res.rows)
        std::cout << "sigma=" << r.sigma << "  max_L=" << r.max_length
                  << (r.reran ? "  (reran)" : "") << "\n";
      std::cout << "table: " << table << "\n";
      return 0;
    }

    if (*replay_cmd) {
      RunRecord original = load_run_record(record_path);
      ReplayResult res = replay(original);
      print_run_summary(res.fresh);
      if (original.stored_outputs)
        std::cout << (res.outputs_match ? "outputs match bitwise"
                                        : "OUTPUT MISMATCH")
                  << "\n";
      else
        std::cout << "original record stored no outputs; replay executed\n";
      return 0;
    }

    if (*export_cmd) {
      std::vector<fs::path> files;
      for (const auto& entry : fs::directory_iterator(records_dir))
        if (entry.path().extension() == ".json") files.push_back(entry.path());
      std::sort(files.begin(), files.end());
      std::vector<RunRecord> records;
      records.reserve(files.size());
      for (const auto& f : files)
        records.push_back(load_run_record(f.string()));
      std::cerr << "loaded " << records.size() << " records\n";

      std::map<double, std::pair<int, int>> by_nu;  // successes, trials
      std::map<int, std::pair<int, int>> by_len;
      for (const RunRecord& r : records) {
        if (r.task.kind == TaskKind::frequency) {
          auto& c = by_nu[r.task.nu];
          if (r.outcome.success) ++c.first;
          ++c.second;
        } else {
          auto& c = by_len[r.task.pattern_length];
          if (r.outcome.success) ++c.first;
          ++c.second;
        }
      }
      if (!by_nu.empty()) {
        std::vector<BandwidthRow> rows;
        for (const auto& [nu_value, c] : by_nu)
          rows.push_back(
              {nu_value, records.front().seeds.mask_seed, c.first, c.second});
        const std::string table =
            (fs::path(out_dir) / "bandwidth.csv").string();
        write_bandwidth_csv(rows, table);
        std::cout << "table: " << table << "\n";
      }
      if (!by_len.empty()) {
        std::vector<PatternLengthResult> rows;
        for (const auto& [len, c] : by_len) {
          PatternLengthResult r;
          r.length = len;
          r.successes = c.first;
          r.trials = c.second;
          rows.push_back(std::move(r));
        }
        const std::string table =
            (fs::path(out_dir) / "pattern_summary.csv").string();
        write_pattern_summary_csv(rows, table);
        std::cout << "table: " << table << "\n";
      }
      return 0;
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}

#pragma once
// Experiment orchestration: parse configs, execute seeded runs, sweep
// over labeled-count / batch-size axes, aggregate mean ± std, and emit
// CSV/Markdown artifacts. Every number in a report traces back to a
// persisted run record.

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "ganssl/config.hpp"

namespace ganssl::harness {

// ---- config ----

// Flat "key = value" file with dotted sections; '#' comments. Unknown
// keys are errors.
TrainConfig parse_config_file(const std::string& path);
TrainConfig parse_config_text(const std::string& text);
void apply_override(TrainConfig& cfg, const std::string& key,
                    const std::string& value);
// key -> default value, for --help
std::vector<std::pair<std::string, std::string>> config_keys();
std::string config_to_json(const TrainConfig& cfg);
TrainConfig config_from_json(const std::string& text);

// ---- runs ----

struct EpochRow {
  std::size_t epoch = 0;
  double loss_supervised = 0, loss_unsupervised = 0;
  double loss_g_fm = 0, loss_g_entropy = 0, loss_g_density = 0;
  double loss_d_pair = 0, loss_c_reinforce = 0, loss_c_pseudo = 0;
  double train_acc = 0, test_acc = 0;
  double seconds = 0;
};

struct RunRecord {
  TrainConfig config;
  std::string run_id;
  std::string dir;
  std::vector<EpochRow> rows;
  double final_test_accuracy = 0.0;
  std::string status;  // "completed" | "aborted"
  std::vector<std::string> artifacts;
};

std::string run_id_for(const TrainConfig& cfg);

// Executes (or, when the record already exists and !force, reloads) one
// training run. Artifacts land under cfg.output_dir/run_id/.
RunRecord run_experiment(const TrainConfig& cfg, bool force = false);

// Reload a persisted record (run.json + metrics.csv) from its directory.
std::optional<RunRecord> load_run(const std::string& dir);

// ---- sweeps & aggregation ----

struct SweepSpec {
  TrainConfig base;
  std::string axis;  // "labeled_count" | "batch_size"
  std::vector<std::uint64_t> values;
  std::vector<std::uint64_t> seeds;
};

struct Aggregate {
  double mean = 0.0;
  double stddev = 0.0;  // sample (n-1) std
  std::size_t count = 0;
};

Aggregate aggregate(const std::vector<RunRecord>& records);
// "mm.mm±s.ss%" over accuracies given as fractions
std::string format_aggregate(const Aggregate& a);

struct SweepResult {
  SweepSpec spec;
  // axis value -> completed records (one per seed)
  std::map<std::uint64_t, std::vector<RunRecord>> cells;
  std::vector<std::string> aborted;  // run ids excluded from aggregates
};

SweepResult run_sweep(const SweepSpec& spec, bool force = false);
void write_sweep_csv(const SweepResult& r, const std::string& path);
void write_sweep_markdown(const SweepResult& r, const std::string& path);

// ---- curves & reports ----

// One CSV per call: column "epoch" plus one series per record, named by
// the record's value on `axis` ("batch_size" etc.).
void emit_loss_curves(const std::vector<RunRecord>& records,
                      const std::string& axis, const std::string& path);
void emit_accuracy_curves(const std::vector<RunRecord>& records,
                          const std::string& axis, const std::string& path);

// Deterministic Markdown report over every run found under run_dir.
std::string report(const std::string& run_dir);

}  // namespace ganssl::harness

#pragma once

#include <map>
#include <string>
#include <vector>

#include "tg/config.hpp"
#include "tg/data.hpp"

namespace tg {

struct LoadedData {
  EventStream stream;
  SplitResult split;
  double realized_surprise = -1.0;  // bipartite generator only
  std::vector<int> stale_nodes;     // stale generator only
};

LoadedData load_or_generate(const RunConfig& cfg);

// Stream only, no split requirement: analysis commands run on streams
// that may be too short to split three ways.
EventStream build_stream(const RunConfig& cfg);

struct EpochRecord {
  int epoch = 0;
  std::string split;  // train | val | test
  double loss = 0.0;
  double mrr = 0.0;   // NaN when not measured
  double wallclock = 0.0;
};

struct ExperimentReport {
  std::map<std::string, std::string> config;
  std::vector<EpochRecord> history;
  int epochs_run = 0;
  int best_epoch = -1;
  double best_val_mrr = 0.0;
  double test_mrr = 0.0;
  double final_train_loss = 0.0;
  double realized_surprise = -1.0;
  double wallclock_sec = 0.0;

  // flat key=value view; wallclock keys are excluded when comparing runs
  // for identity
  std::map<std::string, std::string> kv(bool include_wallclock = true) const;
};

// Per epoch: reset runtime state, stream-train the train segment, then
// stream-evaluate the validation segment (memory advances, no gradients).
// Early stopping tracks validation MRR; patience counts epochs since the
// last improvement, evaluated after every epoch. The test pass restores
// the best parameters, resets, replays train+val in eval mode and scores
// the test segment. Writes metrics.jsonl, report.kv, checkpoint.tgc and
// optionally plot.csv when an output directory is configured.
ExperimentReport run_experiment(const RunConfig& cfg);

// Restores a checkpoint's parameters, replays train+val in eval mode and
// scores the test segment.
ExperimentReport evaluate_checkpoint(const RunConfig& cfg, const std::string& ckpt_path);

// Test-MRR improvement of a over b in percentage points.
double compare_arms(const ExperimentReport& a, const ExperimentReport& b);

void write_report_kv(const std::string& path, const ExperimentReport& r);
void write_metrics_jsonl(const std::string& path, const ExperimentReport& r);
void write_plot_csv(const std::string& path, const ExperimentReport& r);

}  // namespace tg

#pragma once

#include <cstdint>
#include <map>
#include <string>

#include "tg/tgn.hpp"
#include "tg/tgr.hpp"

namespace tg {

// Flat run configuration. Precedence: command line > config file >
// defaults; apply_kv layers one source over the current values.
struct RunConfig {
  std::uint64_t seed = 1;

  std::string data;        // events csv; empty when generating
  std::string node_feats;  // optional node feature csv
  std::string gen;         // "", "path", "erdos", "bipartite", "stale"
  int gen_nodes = 120;
  int gen_events = 4000;
  int gen_users = 800;
  int gen_items = 200;
  int gen_clusters = 8;
  double gen_surprise = 0.8;
  double gen_window = 600.0;

  bool rewire = true;
  std::string mixer_layer = "gat";      // gat | gcn | gin
  std::string mixer_scope = "batch";    // batch | batch1hop
  std::string mixer_assign = "induced"; // induced | relay
  bool mixer_regrow = true;
  int mixer_capacity = 0;  // 0: expander sized to the stream's node count
  std::string aggregator = "attention"; // attention | mean | sum | max

  int batch_size = 200;
  int epochs = 50;
  int patience = 5;
  double lr = 1e-4;
  double dropout = 0.1;
  int dim_memory = 100;
  int dim_embed = 100;
  int dim_time = 100;
  int dim_expander = 100;
  int heads = 2;
  int neighbors = 10;
  int train_negatives = 1;
  int eval_negatives = 20;
  double split_train = 0.70;
  double split_val = 0.15;

  std::string out;  // output directory; relative paths resolve under $TG_OUT_ROOT
  bool emit_plot = false;
};

// key=value lines, '#' comments, blank lines ignored. Throws on a line
// without '='.
std::map<std::string, std::string> parse_kv_file(const std::string& path);

// Applies one source of key=value pairs. Throws on unknown keys or
// unparseable values.
void apply_kv(RunConfig& cfg, const std::map<std::string, std::string>& kv);

// Cross-field checks; throws on conflicts (notably an expander width
// different from the memory width while rewiring is on).
void validate(const RunConfig& cfg);

// Every key with its resolved value, for report echoes.
std::map<std::string, std::string> to_kv(const RunConfig& cfg);

MixerLayer parse_mixer_layer(const std::string& s);
MixerScope parse_mixer_scope(const std::string& s);
AssignMode parse_assign_mode(const std::string& s);
Aggregator parse_aggregator(const std::string& s);

TgnDims dims_from(const RunConfig& cfg);
MixerConfig mixer_from(const RunConfig& cfg);

// cfg.out resolved against the TG_OUT_ROOT environment variable; empty
// stays empty (no files written).
std::string resolve_out_dir(const RunConfig& cfg);

}  // namespace tg

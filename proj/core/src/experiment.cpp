#include "tg/experiment.hpp"

#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <stdexcept>

#include <json.hpp>

#include "tg/checkpoint.hpp"
#include "tg/io.hpp"
#include "tg/metrics.hpp"

namespace tg {
namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::vector<TemporalBatch> slice_batches(size_t begin, size_t end, size_t bs, int& next_id) {
  std::vector<TemporalBatch> out;
  for (size_t b = begin; b < end; b += bs) {
    TemporalBatch tb;
    tb.id = next_id++;
    tb.begin = b;
    tb.end = std::min(end, b + bs);
    out.push_back(tb);
  }
  return out;
}

std::vector<std::vector<int>> batch_negatives(const EventStream& s,
                                              const NegativeSampler& sampler,
                                              const TemporalBatch& b, int k, size_t salt) {
  std::vector<std::vector<int>> out;
  out.reserve(b.end - b.begin);
  for (size_t i = b.begin; i < b.end; ++i)
    out.push_back(sampler.sample(salt + i, s.events()[i].dst, k));
  return out;
}

struct EvalOutcome {
  double loss = 0.0;
  double mrr_value = 0.0;
};

EvalOutcome eval_segment(TgrPipeline& pl, const EventStream& s,
                         const NegativeSampler& sampler,
                         const std::vector<TemporalBatch>& batches, int k) {
  std::vector<double> ranks;
  double loss_sum = 0.0;
  for (const TemporalBatch& b : batches) {
    BatchScores r = pl.eval_batch(b, batch_negatives(s, sampler, b, k, 0));
    loss_sum += r.loss;
    for (size_t i = 0; i < r.pos.size(); ++i)
      ranks.push_back(rank_of(r.pos[i], r.neg[i], TieRule::Average));
  }
  EvalOutcome out;
  out.loss = batches.empty() ? 0.0 : loss_sum / static_cast<double>(batches.size());
  out.mrr_value = mrr(ranks);
  return out;
}

}  // namespace

LoadedData load_or_generate(const RunConfig& cfg) {
  LoadedData ld;
  SplitSpec fractions{cfg.split_train, cfg.split_val};
  if (cfg.gen == "bipartite") {
    BipartiteSpec spec;
    spec.n_users = cfg.gen_users;
    spec.n_items = cfg.gen_items;
    spec.n_events = cfg.gen_events;
    spec.n_clusters = cfg.gen_clusters;
    spec.surprise = cfg.gen_surprise;
    spec.split = fractions;
    spec.seed = cfg.seed;
    BipartiteStream bs = gen_bipartite(spec);
    ld.stream = std::move(bs.stream);
    ld.split = bs.split;
    ld.realized_surprise = bs.realized_surprise;
    return ld;
  }
  if (cfg.gen == "stale") {
    StaleSpec spec;
    spec.n_nodes = cfg.gen_nodes;
    spec.n_events = cfg.gen_events;
    spec.n_clusters = cfg.gen_clusters;
    spec.window = cfg.gen_window;
    spec.split = fractions;
    spec.seed = cfg.seed;
    StaleStream ss = gen_stale(spec);
    ld.stream = std::move(ss.stream);
    ld.split = ss.split;
    ld.stale_nodes = std::move(ss.stale_nodes);
    return ld;
  }
  if (cfg.gen == "erdos") {
    ld.stream = gen_erdos_temporal(cfg.gen_nodes, cfg.gen_events, cfg.seed);
  } else if (cfg.gen == "path") {
    std::vector<double> times(static_cast<size_t>(cfg.gen_events));
    for (size_t i = 0; i < times.size(); ++i) times[i] = static_cast<double>(i + 1);
    ld.stream = gen_path_graph(times);
  } else if (!cfg.data.empty()) {
    CsvLoadResult res = read_events_csv(cfg.data);
    ld.stream = EventStream::ingest(std::move(res.records));
    if (!cfg.node_feats.empty())
      ld.stream.set_node_feats(read_node_feats_csv(cfg.node_feats, ld.stream.num_nodes()));
  } else {
    throw std::invalid_argument("no data source configured");
  }
  ld.split = chronological_split(ld.stream, fractions);
  return ld;
}

EventStream build_stream(const RunConfig& cfg) {
  if (cfg.gen == "bipartite" || cfg.gen == "stale")
    return load_or_generate(cfg).stream;
  if (cfg.gen == "erdos") return gen_erdos_temporal(cfg.gen_nodes, cfg.gen_events, cfg.seed);
  if (cfg.gen == "path") {
    std::vector<double> times(static_cast<size_t>(cfg.gen_events));
    for (size_t i = 0; i < times.size(); ++i) times[i] = static_cast<double>(i + 1);
    return gen_path_graph(times);
  }
  if (!cfg.data.empty()) {
    CsvLoadResult res = read_events_csv(cfg.data);
    EventStream s = EventStream::ingest(std::move(res.records));
    if (!cfg.node_feats.empty())
      s.set_node_feats(read_node_feats_csv(cfg.node_feats, s.num_nodes()));
    return s;
  }
  throw std::invalid_argument("no data source configured");
}

std::map<std::string, std::string> ExperimentReport::kv(bool include_wallclock) const {
  std::map<std::string, std::string> m = config;
  m["result.epochs_run"] = std::to_string(epochs_run);
  m["result.best_epoch"] = std::to_string(best_epoch);
  m["result.best_val_mrr"] = format_double(best_val_mrr);
  m["result.test_mrr"] = format_double(test_mrr);
  m["result.final_train_loss"] = format_double(final_train_loss);
  if (realized_surprise >= 0.0)
    m["result.surprise_index"] = format_double(realized_surprise);
  if (include_wallclock) m["result.wallclock_sec"] = format_double(wallclock_sec);
  return m;
}

ExperimentReport run_experiment(const RunConfig& cfg) {
  validate(cfg);
  auto t0 = Clock::now();
  LoadedData ld = load_or_generate(cfg);
  const EventStream& stream = ld.stream;

  ExperimentReport rep;
  rep.config = to_kv(cfg);
  rep.realized_surprise = surprise_index(stream, ld.split);

  TgrPipeline pl(stream, dims_from(cfg), parse_aggregator(cfg.aggregator), mixer_from(cfg),
                 cfg.rewire, cfg.seed, cfg.lr);
  NegativeSampler sampler(stream, cfg.seed);

  int next_id = 0;
  auto bs = static_cast<size_t>(cfg.batch_size);
  auto train_b = slice_batches(0, ld.split.train_end, bs, next_id);
  auto val_b = slice_batches(ld.split.train_end, ld.split.val_end, bs, next_id);
  auto test_b = slice_batches(ld.split.val_end, stream.num_events(), bs, next_id);

  std::vector<Tensor> best_params;
  int since_best = 0;
  double best_val = -1.0;

  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    pl.reset_runtime();
    pl.set_epoch(epoch);
    size_t train_salt = static_cast<size_t>(epoch + 1) * stream.num_events();
    double loss_sum = 0.0;
    for (const TemporalBatch& b : train_b)
      loss_sum += pl.train_batch(
                        b, batch_negatives(stream, sampler, b, cfg.train_negatives, train_salt))
                      .loss;
    double train_loss = loss_sum / static_cast<double>(train_b.size());
    EvalOutcome val = eval_segment(pl, stream, sampler, val_b, cfg.eval_negatives);

    rep.history.push_back({epoch, "train", train_loss, std::nan(""), seconds_since(t0)});
    rep.history.push_back({epoch, "val", val.loss, val.mrr_value, seconds_since(t0)});
    rep.epochs_run = epoch + 1;
    rep.final_train_loss = train_loss;

    if (val.mrr_value > best_val) {
      best_val = val.mrr_value;
      rep.best_epoch = epoch;
      rep.best_val_mrr = val.mrr_value;
      best_params.clear();
      for (Parameter* p : pl.trainable()) best_params.push_back(p->value);
      since_best = 0;
    } else {
      ++since_best;
    }
    if (since_best >= cfg.patience) break;
  }

  auto tr = pl.trainable();
  for (size_t i = 0; i < tr.size(); ++i) tr[i]->value = best_params[i];

  pl.reset_runtime();
  pl.set_epoch(cfg.epochs);
  for (const TemporalBatch& b : train_b) pl.replay_batch(b);
  for (const TemporalBatch& b : val_b) pl.replay_batch(b);
  EvalOutcome test = eval_segment(pl, stream, sampler, test_b, cfg.eval_negatives);
  rep.test_mrr = test.mrr_value;
  rep.history.push_back({rep.best_epoch, "test", test.loss, test.mrr_value, seconds_since(t0)});
  rep.wallclock_sec = seconds_since(t0);

  std::string out = resolve_out_dir(cfg);
  if (!out.empty()) {
    std::filesystem::create_directories(out);
    write_metrics_jsonl(out + "/metrics.jsonl", rep);
    write_report_kv(out + "/report.kv", rep);
    save_checkpoint(out + "/checkpoint.tgc", pl);
    if (cfg.emit_plot) write_plot_csv(out + "/plot.csv", rep);
  }
  return rep;
}

ExperimentReport evaluate_checkpoint(const RunConfig& cfg, const std::string& ckpt_path) {
  validate(cfg);
  auto t0 = Clock::now();
  LoadedData ld = load_or_generate(cfg);
  const EventStream& stream = ld.stream;

  ExperimentReport rep;
  rep.config = to_kv(cfg);
  rep.realized_surprise = surprise_index(stream, ld.split);

  TgrPipeline pl(stream, dims_from(cfg), parse_aggregator(cfg.aggregator), mixer_from(cfg),
                 cfg.rewire, cfg.seed, cfg.lr);
  load_checkpoint(ckpt_path, pl);
  pl.reset_runtime();
  NegativeSampler sampler(stream, cfg.seed);

  int next_id = 0;
  auto bs = static_cast<size_t>(cfg.batch_size);
  auto train_b = slice_batches(0, ld.split.train_end, bs, next_id);
  auto val_b = slice_batches(ld.split.train_end, ld.split.val_end, bs, next_id);
  auto test_b = slice_batches(ld.split.val_end, stream.num_events(), bs, next_id);

  for (const TemporalBatch& b : train_b) pl.replay_batch(b);
  for (const TemporalBatch& b : val_b) pl.replay_batch(b);
  EvalOutcome test = eval_segment(pl, stream, sampler, test_b, cfg.eval_negatives);
  rep.test_mrr = test.mrr_value;
  rep.history.push_back({0, "test", test.loss, test.mrr_value, seconds_since(t0)});
  rep.wallclock_sec = seconds_since(t0);

  std::string out = resolve_out_dir(cfg);
  if (!out.empty()) {
    std::filesystem::create_directories(out);
    write_metrics_jsonl(out + "/metrics.jsonl", rep);
    write_report_kv(out + "/report.kv", rep);
  }
  return rep;
}

double compare_arms(const ExperimentReport& a, const ExperimentReport& b) {
  return (a.test_mrr - b.test_mrr) * 100.0;
}

void write_report_kv(const std::string& path, const ExperimentReport& r) {
  std::ofstream f(path, std::ios::trunc);
  if (!f) throw std::runtime_error("cannot open " + path + " for writing");
  for (const auto& [k, v] : r.kv(true)) f << k << "=" << v << "\n";
}

void write_metrics_jsonl(const std::string& path, const ExperimentReport& r) {
  std::ofstream f(path, std::ios::trunc);
  if (!f) throw std::runtime_error("cannot open " + path + " for writing");
  for (const EpochRecord& e : r.history) {
    nlohmann::json j;
    j["epoch"] = e.epoch;
    j["split"] = e.split;
    j["loss"] = e.loss;
    if (std::isnan(e.mrr))
      j["mrr"] = nullptr;
    else
      j["mrr"] = e.mrr;
    j["wallclock"] = e.wallclock;
    f << j.dump() << "\n";
  }
}

void write_plot_csv(const std::string& path, const ExperimentReport& r) {
  std::ofstream f(path, std::ios::trunc);
  if (!f) throw std::runtime_error("cannot open " + path + " for writing");
  f << "epoch,split,loss,mrr,wallclock\n";
  for (const EpochRecord& e : r.history) {
    f << e.epoch << "," << e.split << "," << format_double(e.loss) << ","
      << (std::isnan(e.mrr) ? std::string() : format_double(e.mrr)) << ","
      << format_double(e.wallclock) << "\n";
  }
}

}  // namespace tg

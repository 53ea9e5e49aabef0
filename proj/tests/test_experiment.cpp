#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <string>

#include <json.hpp>

#include "tg/checkpoint.hpp"
#include "tg/experiment.hpp"
#include "tg/io.hpp"

using namespace tg;

namespace {

// small enough that a full run takes a fraction of a second
RunConfig tiny_run() {
  RunConfig c;
  c.gen = "erdos";
  c.gen_nodes = 12;
  c.gen_events = 120;
  c.seed = 5;
  c.batch_size = 20;
  c.epochs = 2;
  c.patience = 5;
  c.lr = 1e-3;
  c.dim_memory = 8;
  c.dim_embed = 8;
  c.dim_time = 8;
  c.dim_expander = 8;
  c.heads = 2;
  c.neighbors = 5;
  c.train_negatives = 1;
  c.eval_negatives = 5;
  return c;
}

std::string fresh_dir(const std::string& name) {
  auto p = std::filesystem::temp_directory_path() / name;
  std::filesystem::remove_all(p);
  return p.string();
}

}  // namespace

TEST_CASE("identical configurations give identical reports") {
  RunConfig c = tiny_run();
  ExperimentReport a = run_experiment(c);
  ExperimentReport b = run_experiment(c);
  CHECK(a.kv(false) == b.kv(false));
  CHECK(a.test_mrr == b.test_mrr);
  CHECK(a.best_epoch == b.best_epoch);
}

TEST_CASE("zero patience stops after the first epoch") {
  RunConfig c = tiny_run();
  c.epochs = 5;
  c.patience = 0;
  ExperimentReport r = run_experiment(c);
  CHECK(r.epochs_run == 1);
  CHECK(r.best_epoch == 0);
}

TEST_CASE("reports land in the output directory and parse back") {
  RunConfig c = tiny_run();
  c.emit_plot = true;
  std::string dir = fresh_dir("tg_exp_out");
  c.out = dir;
  ExperimentReport rep = run_experiment(c);

  auto kv = parse_kv_file(dir + "/report.kv");
  CHECK(kv.at("result.test_mrr") == format_double(rep.test_mrr));
  CHECK(kv.at("result.epochs_run") == std::to_string(rep.epochs_run));
  CHECK(kv.at("seed") == "5");

  std::ifstream jl(dir + "/metrics.jsonl");
  REQUIRE(jl.good());
  std::string line;
  size_t lines = 0;
  while (std::getline(jl, line)) {
    nlohmann::json j = nlohmann::json::parse(line);
    CHECK(j.contains("epoch"));
    CHECK(j.contains("split"));
    CHECK(j.contains("loss"));
    CHECK(j.contains("mrr"));
    ++lines;
  }
  CHECK(lines == rep.history.size());

  TensorMap ckpt = load_tensor_map(dir + "/checkpoint.tgc");
  CHECK(ckpt.count("meta/rewire") == 1);

  std::ifstream plot(dir + "/plot.csv");
  REQUIRE(plot.good());
  std::getline(plot, line);
  CHECK(line == "epoch,split,loss,mrr,wallclock");

  std::filesystem::remove_all(dir);
}

TEST_CASE("a saved checkpoint reproduces the reported test score") {
  RunConfig c = tiny_run();
  std::string dir = fresh_dir("tg_exp_ckpt");
  c.out = dir;
  ExperimentReport rep = run_experiment(c);

  RunConfig ec = c;
  ec.out = "";
  ExperimentReport again = evaluate_checkpoint(ec, dir + "/checkpoint.tgc");
  CHECK(again.test_mrr == rep.test_mrr);

  std::filesystem::remove_all(dir);
}

TEST_CASE("generated streams split by the configured fractions") {
  RunConfig c = tiny_run();
  LoadedData ld = load_or_generate(c);
  CHECK(ld.stream.num_events() == 120);
  CHECK(ld.split.train_end == 84);   // floor(120 * 0.70)
  CHECK(ld.split.val_end == 102);    // floor(120 * 0.85)

  RunConfig bc;
  bc.gen = "bipartite";
  bc.gen_users = 40;
  bc.gen_items = 10;
  bc.gen_events = 400;
  bc.gen_clusters = 4;
  bc.gen_surprise = 0.5;
  bc.seed = 7;
  LoadedData bd = load_or_generate(bc);
  CHECK(bd.stream.num_events() == 400);
  CHECK(bd.realized_surprise >= 0.0);
  CHECK(bd.split.train_end < bd.split.val_end);
  CHECK(bd.split.val_end < bd.stream.num_events());
}

TEST_CASE("csv sources feed the loader") {
  EventStream s = gen_erdos_temporal(10, 60, 3);
  Tensor feats(10, 2);
  Rng rng(9);
  for (double& v : feats.data) v = rng.uniform(-1.0, 1.0);
  s.set_node_feats(feats);

  auto dir = std::filesystem::temp_directory_path();
  std::string epath = (dir / "tg_exp_events.csv").string();
  std::string fpath = (dir / "tg_exp_feats.csv").string();
  write_events_csv(epath, s);
  write_node_feats_csv(fpath, s.node_feats());

  RunConfig c;
  c.data = epath;
  c.node_feats = fpath;
  EventStream back = build_stream(c);
  REQUIRE(back.num_events() == s.num_events());
  CHECK(back.num_nodes() == s.num_nodes());
  for (size_t i = 0; i < s.num_events(); ++i) {
    CHECK(back.events()[i].src == s.events()[i].src);
    CHECK(back.events()[i].dst == s.events()[i].dst);
    CHECK(back.events()[i].t == s.events()[i].t);
  }
  CHECK(bit_equal(back.node_feats(), s.node_feats()));

  std::remove(epath.c_str());
  std::remove(fpath.c_str());
}

TEST_CASE("a run without any data source is refused") {
  RunConfig none;
  CHECK_THROWS_AS(build_stream(none), std::invalid_argument);
  CHECK_THROWS_AS(run_experiment(none), std::invalid_argument);
  RunConfig both = tiny_run();
  both.data = "x.csv";
  CHECK_THROWS_AS(run_experiment(both), std::invalid_argument);
}

TEST_CASE("arm comparison reports percentage points") {
  ExperimentReport a, b;
  a.test_mrr = 0.525;
  b.test_mrr = 0.5;
  CHECK(compare_arms(a, b) == doctest::Approx(2.5));
  CHECK(compare_arms(b, a) == doctest::Approx(-2.5));
}

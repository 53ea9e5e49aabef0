#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <sys/wait.h>

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

namespace {

struct CliResult {
  int code = -1;
  std::string out;
  std::string err;
};

std::string slurp(const std::string& path) {
  std::ifstream f(path);
  std::ostringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

CliResult run_cli(const std::string& args) {
  static int counter = 0;
  auto dir = std::filesystem::temp_directory_path();
  std::string out = (dir / ("tg_cli_out_" + std::to_string(counter) + ".txt")).string();
  std::string err = (dir / ("tg_cli_err_" + std::to_string(counter) + ".txt")).string();
  ++counter;
  std::string cmd = std::string(TG_CLI_PATH) + " " + args + " > " + out + " 2> " + err;
  int rc = std::system(cmd.c_str());
  CliResult r;
  if (rc != -1 && WIFEXITED(rc)) r.code = WEXITSTATUS(rc);
  r.out = slurp(out);
  r.err = slurp(err);
  std::remove(out.c_str());
  std::remove(err.c_str());
  return r;
}

bool contains(const std::string& hay, const std::string& needle) {
  return hay.find(needle) != std::string::npos;
}

std::string fresh_dir(const std::string& name) {
  auto p = std::filesystem::temp_directory_path() / name;
  std::filesystem::remove_all(p);
  return p.string();
}

}  // namespace

TEST_CASE("a subcommand is required") {
  CHECK(run_cli("").code != 0);
  CHECK(run_cli("frobnicate").code != 0);
  CliResult help = run_cli("--help");
  CHECK(help.code == 0);
  CHECK(contains(help.out, "train"));
  CHECK(contains(help.out, "analyze"));
}

TEST_CASE("cayley inspection") {
  CHECK(run_cli("cayley --n 0").code != 0);

  CliResult r = run_cli("cayley --n 3 --stats");
  CHECK(r.code == 0);
  CHECK(contains(r.out, "n=3 vertices=24 edges=48"));
  CHECK(contains(r.out, "degree=4 count=24"));
  CHECK(contains(r.out, "connected=yes"));
  CHECK(contains(r.out, "spectral_gap="));

  std::string edges = fresh_dir("tg_cli_edges") + ".csv";
  CliResult e = run_cli("cayley --n 3 --export " + edges);
  CHECK(e.code == 0);
  std::ifstream f(edges);
  REQUIRE(f.good());
  std::string line;
  std::getline(f, line);
  CHECK(line == "u,v");
  size_t rows = 0;
  while (std::getline(f, line)) ++rows;
  CHECK(rows == 48);
  std::remove(edges.c_str());
}

TEST_CASE("gen writes a dataset that analyze can read back") {
  std::string dir = fresh_dir("tg_cli_gen");
  CliResult g = run_cli("gen --type erdos --dir " + dir +
                        " --set gen.nodes=10 --set gen.events=40 --seed 3");
  CHECK(g.code == 0);
  CHECK(std::filesystem::exists(dir + "/events.csv"));
  CHECK(std::filesystem::exists(dir + "/manifest.kv"));
  CHECK_FALSE(std::filesystem::exists(dir + "/node_feats.csv"));  // implicit features
  std::string manifest = slurp(dir + "/manifest.kv");
  CHECK(contains(manifest, "num_events=40"));
  CHECK(contains(manifest, "train_end=28"));
  CHECK(contains(manifest, "surprise_index="));

  CliResult a = run_cli("analyze --data " + dir +
                        "/events.csv reach --source 0 --tau 100 --mode strict");
  CHECK(a.code == 0);
  CHECK(contains(a.out, "front_size="));
  std::filesystem::remove_all(dir);
}

TEST_CASE("reach analysis on a forward path") {
  std::string base = "analyze --gen path --set gen.events=4 ";
  CliResult r = run_cli(base + "reach --source 0 --tau 10 --target 4 --static-k 4");
  CHECK(r.code == 0);
  CHECK(contains(r.out, "front_size=5"));
  CHECK(contains(r.out, "under_reaches=no"));
  CHECK(contains(r.out, "-> 4"));
  CHECK(contains(r.out, "static_distance_gt_4=no"));

  CliResult b = run_cli(base + "reach --source 0 --tau 10 --mode batched:2");
  CHECK(b.code == 0);
  CHECK(contains(b.out, "mode=batched:2"));

  CHECK(run_cli(base + "reach --source 0 --tau 10 --mode bogus").code != 0);
}

TEST_CASE("asymmetry and staleness analysis") {
  std::string base = "analyze --gen path --set gen.events=4 ";
  CliResult a = run_cli(base + "asymmetry --tau 10");
  CHECK(a.code == 0);
  CHECK(contains(a.out, "asymmetric_ordered_pairs="));

  CliResult s = run_cli(base + "staleness --tau 10 --top 3");
  CHECK(s.code == 0);
  CHECK(contains(s.out, "bank_size=5"));
}

TEST_CASE("training prints the report and eval validates its input") {
  std::string common =
      " --gen erdos --set gen.nodes=12 --set gen.events=120 --set dim.memory=8"
      " --set dim.embed=8 --set dim.time=8 --set dim.expander=8 --set heads=2"
      " --set neighbors=5 --set negatives.eval=5 --epochs 2 --batch-size 20"
      " --lr 0.001 --seed 5";
  CliResult t = run_cli("train" + common);
  CHECK(t.code == 0);
  CHECK(contains(t.out, "result.test_mrr="));
  CHECK(contains(t.out, "result.epochs_run=2"));

  CliResult missing = run_cli("eval --checkpoint /no/such.tgc" + common);
  CHECK(missing.code == 1);
  CHECK(contains(missing.err, "error:"));

  CHECK(run_cli("eval" + common).code != 0);  // --checkpoint is required
}

TEST_CASE("analyze requires a data source") {
  CliResult r = run_cli("analyze reach --source 0 --tau 1");
  CHECK(r.code == 1);
  CHECK(contains(r.err, "error:"));
}

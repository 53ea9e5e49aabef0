#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <string>

#include "tg/config.hpp"

using namespace tg;

namespace {

std::string tmp_file(const std::string& name, const std::string& body) {
  std::string path = (std::filesystem::temp_directory_path() / name).string();
  std::ofstream f(path, std::ios::trunc);
  f << body;
  return path;
}

RunConfig generated() {
  RunConfig c;
  c.gen = "erdos";
  return c;
}

}  // namespace

TEST_CASE("the key=value view round trips every field") {
  RunConfig c;
  c.seed = 42;
  c.gen = "bipartite";
  c.gen_surprise = 0.65;
  c.rewire = false;
  c.mixer_layer = "gin";
  c.lr = 3e-4;
  c.out = "runs/x";
  c.emit_plot = true;

  RunConfig back;  // defaults, then overlay the full echo
  apply_kv(back, to_kv(c));
  CHECK(to_kv(back) == to_kv(c));
}

TEST_CASE("later sources override earlier ones") {
  RunConfig c;
  apply_kv(c, {{"lr", "0.5"}, {"rewire", "off"}});
  CHECK(c.lr == 0.5);
  CHECK_FALSE(c.rewire);
  apply_kv(c, {{"lr", "0.25"}});
  CHECK(c.lr == 0.25);
  CHECK_FALSE(c.rewire);  // untouched keys persist
}

TEST_CASE("boolean spellings") {
  RunConfig c;
  for (const char* v : {"on", "true", "1"}) {
    apply_kv(c, {{"rewire", v}});
    CHECK(c.rewire);
  }
  for (const char* v : {"off", "false", "0"}) {
    apply_kv(c, {{"rewire", v}});
    CHECK_FALSE(c.rewire);
  }
  CHECK_THROWS_AS(apply_kv(c, {{"rewire", "yes"}}), std::invalid_argument);
}

TEST_CASE("malformed values are rejected with the offending key") {
  RunConfig c;
  CHECK_THROWS_AS(apply_kv(c, {{"batch_size", "12x"}}), std::invalid_argument);
  CHECK_THROWS_AS(apply_kv(c, {{"lr", "fast"}}), std::invalid_argument);
  CHECK_THROWS_AS(apply_kv(c, {{"epochs", "99999999999999999999"}}), std::invalid_argument);
  CHECK_THROWS_AS(apply_kv(c, {{"no_such_key", "1"}}), std::invalid_argument);
  try {
    apply_kv(c, {{"batch_size", "12x"}});
  } catch (const std::invalid_argument& e) {
    CHECK(std::string(e.what()).find("batch_size") != std::string::npos);
  }
}

TEST_CASE("config files allow comments, blanks and padding") {
  std::string path = tmp_file("tg_cfg_ok.cfg",
                              "# run setup\n"
                              "\n"
                              "  lr = 0.5  \n"
                              "batch_size=7\n"
                              "gen = erdos\n");
  auto kv = parse_kv_file(path);
  CHECK(kv.size() == 3);
  CHECK(kv.at("lr") == "0.5");
  CHECK(kv.at("batch_size") == "7");
  CHECK(kv.at("gen") == "erdos");
  std::remove(path.c_str());
}

TEST_CASE("config lines without '=' are an error") {
  std::string path = tmp_file("tg_cfg_bad.cfg", "lr 0.5\n");
  CHECK_THROWS_AS(parse_kv_file(path), std::runtime_error);
  std::remove(path.c_str());
  CHECK_THROWS_AS(parse_kv_file("/no/such/file.cfg"), std::runtime_error);
}

TEST_CASE("validation needs exactly one data source") {
  RunConfig neither;
  CHECK_THROWS_AS(validate(neither), std::invalid_argument);
  RunConfig both = generated();
  both.data = "events.csv";
  CHECK_THROWS_AS(validate(both), std::invalid_argument);
  CHECK_NOTHROW(validate(generated()));
  RunConfig file;
  file.data = "events.csv";
  CHECK_NOTHROW(validate(file));
}

TEST_CASE("the expander mixes raw memory rows, so widths must agree") {
  RunConfig c = generated();
  c.dim_expander = 64;
  CHECK_THROWS_AS(validate(c), std::invalid_argument);
  c.rewire = false;  // without rewiring the expander width is unused
  CHECK_NOTHROW(validate(c));
}

TEST_CASE("enum fields reject unknown spellings") {
  for (const char* key :
       {"gen", "mixer.layer", "mixer.scope", "mixer.assign", "aggregator"}) {
    RunConfig c = generated();
    apply_kv(c, {{key, "bogus"}});
    CHECK_THROWS_AS(validate(c), std::invalid_argument);
  }
  CHECK(parse_mixer_layer("gcn") == MixerLayer::Gcn);
  CHECK(parse_mixer_scope("batch1hop") == MixerScope::BatchOneHop);
  CHECK(parse_assign_mode("relay") == AssignMode::Relay);
  CHECK(parse_aggregator("max") == Aggregator::Max);
  CHECK_THROWS_AS(parse_aggregator("lstm"), std::invalid_argument);
}

TEST_CASE("range checks on the numeric knobs") {
  auto broken = [](auto&& tweak) {
    RunConfig c = generated();
    tweak(c);
    return c;
  };
  CHECK_THROWS_AS(validate(broken([](RunConfig& c) { c.batch_size = 0; })), std::invalid_argument);
  CHECK_THROWS_AS(validate(broken([](RunConfig& c) { c.epochs = 0; })), std::invalid_argument);
  CHECK_THROWS_AS(validate(broken([](RunConfig& c) { c.patience = -1; })), std::invalid_argument);
  CHECK_THROWS_AS(validate(broken([](RunConfig& c) { c.lr = 0.0; })), std::invalid_argument);
  CHECK_THROWS_AS(validate(broken([](RunConfig& c) { c.dropout = 1.0; })), std::invalid_argument);
  CHECK_THROWS_AS(validate(broken([](RunConfig& c) { c.dim_time = 0; })), std::invalid_argument);
  CHECK_THROWS_AS(validate(broken([](RunConfig& c) { c.heads = 3; })), std::invalid_argument);
  CHECK_THROWS_AS(validate(broken([](RunConfig& c) { c.neighbors = 0; })), std::invalid_argument);
  CHECK_THROWS_AS(validate(broken([](RunConfig& c) { c.eval_negatives = 0; })), std::invalid_argument);
  CHECK_NOTHROW(validate(broken([](RunConfig& c) { c.patience = 0; })));
}

TEST_CASE("the gat mixer needs heads to divide the memory width") {
  RunConfig c = generated();
  c.heads = 4;
  c.dim_embed = 100;  // fine for the embedder
  c.dim_memory = 102;
  c.dim_expander = 102;
  CHECK_THROWS_AS(validate(c), std::invalid_argument);
  c.mixer_layer = "gcn";  // headless mixers do not care
  CHECK_NOTHROW(validate(c));
}

TEST_CASE("model dimensions map through") {
  RunConfig c = generated();
  c.dim_memory = 16;
  c.dim_embed = 24;
  c.dim_time = 8;
  c.heads = 3;
  c.neighbors = 7;
  TgnDims d = dims_from(c);
  CHECK(d.memory == 16);
  CHECK(d.embed == 24);
  CHECK(d.time == 8);
  CHECK(d.heads == 3);
  CHECK(d.neighbor_cap == 7);
  CHECK(d.psi_hidden == 24);
  CHECK(d.kappa_hidden == 24);

  c.mixer_layer = "gin";
  c.mixer_scope = "batch1hop";
  c.mixer_assign = "relay";
  c.mixer_regrow = false;
  c.mixer_capacity = 9;
  c.dropout = 0.25;
  MixerConfig m = mixer_from(c);
  CHECK(m.layer == MixerLayer::Gin);
  CHECK(m.scope == MixerScope::BatchOneHop);
  CHECK(m.assign == AssignMode::Relay);
  CHECK_FALSE(m.regrow);
  CHECK(m.initial_capacity == 9);
  CHECK(m.heads == 3);
  CHECK(m.dropout == 0.25);
}

TEST_CASE("output directories resolve against the environment root") {
  RunConfig c;
  CHECK(resolve_out_dir(c).empty());
  c.out = "/abs/path";
  CHECK(resolve_out_dir(c) == "/abs/path");
  c.out = "runs/a";
  unsetenv("TG_OUT_ROOT");
  CHECK(resolve_out_dir(c) == "runs/a");
  setenv("TG_OUT_ROOT", "/data/out", 1);
  CHECK(resolve_out_dir(c) == "/data/out/runs/a");
  unsetenv("TG_OUT_ROOT");
}

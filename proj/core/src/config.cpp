#include "tg/config.hpp"

#include <cstdlib>
#include <fstream>
#include <stdexcept>

#include "tg/io.hpp"

namespace tg {
namespace {

bool parse_bool(const std::string& key, const std::string& v) {
  if (v == "on" || v == "true" || v == "1") return true;
  if (v == "off" || v == "false" || v == "0") return false;
  throw std::invalid_argument("bad boolean for " + key + ": " + v);
}

int parse_int(const std::string& key, const std::string& v) {
  try {
    size_t used = 0;
    int x = std::stoi(v, &used);
    if (used != v.size()) throw std::invalid_argument(v);
    return x;
  } catch (const std::exception&) {
    throw std::invalid_argument("bad integer for " + key + ": " + v);
  }
}

std::uint64_t parse_u64(const std::string& key, const std::string& v) {
  try {
    size_t used = 0;
    unsigned long long x = std::stoull(v, &used);
    if (used != v.size()) throw std::invalid_argument(v);
    return static_cast<std::uint64_t>(x);
  } catch (const std::exception&) {
    throw std::invalid_argument("bad integer for " + key + ": " + v);
  }
}

double parse_real(const std::string& key, const std::string& v) {
  try {
    size_t used = 0;
    double x = std::stod(v, &used);
    if (used != v.size()) throw std::invalid_argument(v);
    return x;
  } catch (const std::exception&) {
    throw std::invalid_argument("bad number for " + key + ": " + v);
  }
}

std::string trim(const std::string& s) {
  size_t a = s.find_first_not_of(" \t\r");
  if (a == std::string::npos) return "";
  size_t b = s.find_last_not_of(" \t\r");
  return s.substr(a, b - a + 1);
}

}  // namespace

std::map<std::string, std::string> parse_kv_file(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw std::runtime_error("cannot open config file " + path);
  std::map<std::string, std::string> kv;
  std::string line;
  int lineno = 0;
  while (std::getline(f, line)) {
    ++lineno;
    std::string s = trim(line);
    if (s.empty() || s[0] == '#') continue;
    size_t eq = s.find('=');
    if (eq == std::string::npos)
      throw std::runtime_error("config line " + std::to_string(lineno) + " has no '='");
    kv[trim(s.substr(0, eq))] = trim(s.substr(eq + 1));
  }
  return kv;
}

void apply_kv(RunConfig& c, const std::map<std::string, std::string>& kv) {
  for (const auto& [k, v] : kv) {
    if (k == "seed") c.seed = parse_u64(k, v);
    else if (k == "data") c.data = v;
    else if (k == "node_feats") c.node_feats = v;
    else if (k == "gen") c.gen = v;
    else if (k == "gen.nodes") c.gen_nodes = parse_int(k, v);
    else if (k == "gen.events") c.gen_events = parse_int(k, v);
    else if (k == "gen.users") c.gen_users = parse_int(k, v);
    else if (k == "gen.items") c.gen_items = parse_int(k, v);
    else if (k == "gen.clusters") c.gen_clusters = parse_int(k, v);
    else if (k == "gen.surprise") c.gen_surprise = parse_real(k, v);
    else if (k == "gen.window") c.gen_window = parse_real(k, v);
    else if (k == "rewire") c.rewire = parse_bool(k, v);
    else if (k == "mixer.layer") c.mixer_layer = v;
    else if (k == "mixer.scope") c.mixer_scope = v;
    else if (k == "mixer.assign") c.mixer_assign = v;
    else if (k == "mixer.regrow") c.mixer_regrow = parse_bool(k, v);
    else if (k == "mixer.capacity") c.mixer_capacity = parse_int(k, v);
    else if (k == "aggregator") c.aggregator = v;
    else if (k == "batch_size") c.batch_size = parse_int(k, v);
    else if (k == "epochs") c.epochs = parse_int(k, v);
    else if (k == "patience") c.patience = parse_int(k, v);
    else if (k == "lr") c.lr = parse_real(k, v);
    else if (k == "dropout") c.dropout = parse_real(k, v);
    else if (k == "dim.memory") c.dim_memory = parse_int(k, v);
    else if (k == "dim.embed") c.dim_embed = parse_int(k, v);
    else if (k == "dim.time") c.dim_time = parse_int(k, v);
    else if (k == "dim.expander") c.dim_expander = parse_int(k, v);
    else if (k == "heads") c.heads = parse_int(k, v);
    else if (k == "neighbors") c.neighbors = parse_int(k, v);
    else if (k == "negatives.train") c.train_negatives = parse_int(k, v);
    else if (k == "negatives.eval") c.eval_negatives = parse_int(k, v);
    else if (k == "split.train") c.split_train = parse_real(k, v);
    else if (k == "split.val") c.split_val = parse_real(k, v);
    else if (k == "out") c.out = v;
    else if (k == "emit_plot") c.emit_plot = parse_bool(k, v);
    else throw std::invalid_argument("unknown config key: " + k);
  }
}

void validate(const RunConfig& c) {
  if (c.rewire && c.dim_expander != c.dim_memory)
    throw std::invalid_argument(
        "config conflict: dim.expander must equal dim.memory while rewiring is on (the "
        "expander mixes raw memory rows)");
  if (c.data.empty() == c.gen.empty())
    throw std::invalid_argument("exactly one of data= or gen= is required");
  if (!c.gen.empty() && c.gen != "path" && c.gen != "erdos" && c.gen != "bipartite" &&
      c.gen != "stale")
    throw std::invalid_argument("unknown generator: " + c.gen);
  parse_mixer_layer(c.mixer_layer);
  parse_mixer_scope(c.mixer_scope);
  parse_assign_mode(c.mixer_assign);
  parse_aggregator(c.aggregator);
  if (c.batch_size < 1) throw std::invalid_argument("batch_size must be positive");
  if (c.epochs < 1) throw std::invalid_argument("epochs must be positive");
  if (c.patience < 0) throw std::invalid_argument("patience must be >= 0");
  if (!(c.lr > 0.0)) throw std::invalid_argument("lr must be positive");
  if (c.dropout < 0.0 || c.dropout >= 1.0) throw std::invalid_argument("dropout must be in [0,1)");
  for (int d : {c.dim_memory, c.dim_embed, c.dim_time, c.dim_expander})
    if (d < 1) throw std::invalid_argument("model dims must be positive");
  if (c.heads < 1 || c.dim_embed % c.heads != 0)
    throw std::invalid_argument("heads must divide dim.embed");
  if (c.rewire && c.dim_memory % c.heads != 0 && c.mixer_layer == "gat")
    throw std::invalid_argument("heads must divide dim.memory for the gat mixer");
  if (c.neighbors < 1) throw std::invalid_argument("neighbors must be positive");
  if (c.train_negatives < 1 || c.eval_negatives < 1)
    throw std::invalid_argument("negative counts must be positive");
}

std::map<std::string, std::string> to_kv(const RunConfig& c) {
  std::map<std::string, std::string> kv;
  kv["seed"] = std::to_string(c.seed);
  kv["data"] = c.data;
  kv["node_feats"] = c.node_feats;
  kv["gen"] = c.gen;
  kv["gen.nodes"] = std::to_string(c.gen_nodes);
  kv["gen.events"] = std::to_string(c.gen_events);
  kv["gen.users"] = std::to_string(c.gen_users);
  kv["gen.items"] = std::to_string(c.gen_items);
  kv["gen.clusters"] = std::to_string(c.gen_clusters);
  kv["gen.surprise"] = format_double(c.gen_surprise);
  kv["gen.window"] = format_double(c.gen_window);
  kv["rewire"] = c.rewire ? "on" : "off";
  kv["mixer.layer"] = c.mixer_layer;
  kv["mixer.scope"] = c.mixer_scope;
  kv["mixer.assign"] = c.mixer_assign;
  kv["mixer.regrow"] = c.mixer_regrow ? "on" : "off";
  kv["mixer.capacity"] = std::to_string(c.mixer_capacity);
  kv["aggregator"] = c.aggregator;
  kv["batch_size"] = std::to_string(c.batch_size);
  kv["epochs"] = std::to_string(c.epochs);
  kv["patience"] = std::to_string(c.patience);
  kv["lr"] = format_double(c.lr);
  kv["dropout"] = format_double(c.dropout);
  kv["dim.memory"] = std::to_string(c.dim_memory);
  kv["dim.embed"] = std::to_string(c.dim_embed);
  kv["dim.time"] = std::to_string(c.dim_time);
  kv["dim.expander"] = std::to_string(c.dim_expander);
  kv["heads"] = std::to_string(c.heads);
  kv["neighbors"] = std::to_string(c.neighbors);
  kv["negatives.train"] = std::to_string(c.train_negatives);
  kv["negatives.eval"] = std::to_string(c.eval_negatives);
  kv["split.train"] = format_double(c.split_train);
  kv["split.val"] = format_double(c.split_val);
  kv["out"] = c.out;
  kv["emit_plot"] = c.emit_plot ? "on" : "off";
  return kv;
}

MixerLayer parse_mixer_layer(const std::string& s) {
  if (s == "gat") return MixerLayer::Gat;
  if (s == "gcn") return MixerLayer::Gcn;
  if (s == "gin") return MixerLayer::Gin;
  throw std::invalid_argument("unknown mixer layer: " + s);
}

MixerScope parse_mixer_scope(const std::string& s) {
  if (s == "batch") return MixerScope::Batch;
  if (s == "batch1hop") return MixerScope::BatchOneHop;
  throw std::invalid_argument("unknown mixer scope: " + s);
}

AssignMode parse_assign_mode(const std::string& s) {
  if (s == "induced") return AssignMode::Induced;
  if (s == "relay") return AssignMode::Relay;
  throw std::invalid_argument("unknown assignment mode: " + s);
}

Aggregator parse_aggregator(const std::string& s) {
  if (s == "attention") return Aggregator::Attention;
  if (s == "mean") return Aggregator::Mean;
  if (s == "sum") return Aggregator::Sum;
  if (s == "max") return Aggregator::Max;
  throw std::invalid_argument("unknown aggregator: " + s);
}

TgnDims dims_from(const RunConfig& c) {
  TgnDims d;
  d.memory = c.dim_memory;
  d.embed = c.dim_embed;
  d.time = c.dim_time;
  d.heads = c.heads;
  d.neighbor_cap = c.neighbors;
  d.psi_hidden = c.dim_embed;
  d.kappa_hidden = c.dim_embed;
  return d;
}

MixerConfig mixer_from(const RunConfig& c) {
  MixerConfig m;
  m.layer = parse_mixer_layer(c.mixer_layer);
  m.scope = parse_mixer_scope(c.mixer_scope);
  m.assign = parse_assign_mode(c.mixer_assign);
  m.heads = c.heads;
  m.dropout = c.dropout;
  m.regrow = c.mixer_regrow;
  m.initial_capacity = c.mixer_capacity;
  return m;
}

std::string resolve_out_dir(const RunConfig& c) {
  if (c.out.empty()) return "";
  if (c.out.front() == '/') return c.out;
  const char* root = std::getenv("TG_OUT_ROOT");
  if (root != nullptr && root[0] != '\0') return std::string(root) + "/" + c.out;
  return c.out;
}

}  // namespace tg

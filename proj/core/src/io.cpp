#include "tg/io.hpp"

#include <cinttypes>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <unordered_map>

namespace tg {

std::string format_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : line) {
    if (c == ',') {
      out.push_back(cur);
      cur.clear();
    } else if (c != '\r') {
      cur += c;
    }
  }
  out.push_back(cur);
  return out;
}

bool parse_int(const std::string& s, long long& out) {
  if (s.empty()) return false;
  char* end = nullptr;
  errno = 0;
  long long v = std::strtoll(s.c_str(), &end, 10);
  if (errno != 0 || end != s.c_str() + s.size()) return false;
  out = v;
  return true;
}

double parse_double_strict(const std::string& s, const char* what) {
  char* end = nullptr;
  errno = 0;
  double v = std::strtod(s.c_str(), &end);
  if (s.empty() || errno != 0 || end != s.c_str() + s.size())
    throw std::runtime_error(std::string("csv: bad ") + what + " value '" + s + "'");
  return v;
}

}  // namespace

CsvLoadResult read_events_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  std::string line;
  if (!std::getline(in, line)) throw std::runtime_error("csv: empty file " + path);
  auto header = split_csv_line(line);
  if (header.size() < 3 || header[0] != "src" || header[1] != "dst" || header[2] != "t")
    throw std::runtime_error("csv: expected header src,dst,t[,f0,...] in " + path);
  size_t feat_width = header.size() - 3;

  CsvLoadResult res;
  std::unordered_map<std::string, int> dict;
  // First pass decides representation: all-integer ids map to
  // themselves, anything else switches every id through a dictionary.
  std::vector<std::vector<std::string>> rows;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    auto f = split_csv_line(line);
    if (f.size() != header.size())
      throw std::runtime_error("csv: row width mismatch in " + path);
    long long tmp;
    if (!res.used_dictionary && (!parse_int(f[0], tmp) || tmp < 0)) res.used_dictionary = true;
    if (!res.used_dictionary && (!parse_int(f[1], tmp) || tmp < 0)) res.used_dictionary = true;
    rows.push_back(std::move(f));
  }
  auto resolve = [&](const std::string& tok) -> int {
    if (!res.used_dictionary) {
      long long v;
      parse_int(tok, v);
      return static_cast<int>(v);
    }
    auto it = dict.find(tok);
    if (it != dict.end()) return it->second;
    int id = static_cast<int>(res.id_names.size());
    dict.emplace(tok, id);
    res.id_names.push_back(tok);
    return id;
  };
  for (const auto& f : rows) {
    Event e;
    e.src = resolve(f[0]);
    e.dst = resolve(f[1]);
    e.t = parse_double_strict(f[2], "timestamp");
    for (size_t i = 0; i < feat_width; ++i)
      e.feat.push_back(parse_double_strict(f[3 + i], "feature"));
    res.records.push_back(std::move(e));
  }
  return res;
}

void write_events_csv(const std::string& path, const EventStream& s) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << "src,dst,t";
  for (int i = 0; i < s.edge_feat_width(); ++i) out << ",f" << i;
  out << "\n";
  for (const Event& e : s.events()) {
    out << e.src << "," << e.dst << "," << format_double(e.t);
    for (double f : e.feat) out << "," << format_double(f);
    out << "\n";
  }
  if (!out) throw std::runtime_error("write failed: " + path);
}

Tensor read_node_feats_csv(const std::string& path, int num_nodes) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  std::string line;
  if (!std::getline(in, line)) throw std::runtime_error("csv: empty file " + path);
  auto header = split_csv_line(line);
  if (header.size() < 2 || header[0] != "node")
    throw std::runtime_error("csv: expected header node,f0[,...] in " + path);
  int width = static_cast<int>(header.size()) - 1;
  Tensor feats(num_nodes, width);
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    auto f = split_csv_line(line);
    if (f.size() != header.size()) throw std::runtime_error("csv: row width mismatch in " + path);
    long long node;
    if (!parse_int(f[0], node) || node < 0 || node >= num_nodes)
      throw std::runtime_error("csv: node id out of range in " + path);
    for (int j = 0; j < width; ++j)
      feats.at(static_cast<int>(node), j) = parse_double_strict(f[1 + j], "feature");
  }
  return feats;
}

void write_node_feats_csv(const std::string& path, const Tensor& feats) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << "node";
  for (int j = 0; j < feats.cols; ++j) out << ",f" << j;
  out << "\n";
  for (int i = 0; i < feats.rows; ++i) {
    out << i;
    for (int j = 0; j < feats.cols; ++j) out << "," << format_double(feats.at(i, j));
    out << "\n";
  }
  if (!out) throw std::runtime_error("write failed: " + path);
}

namespace {

constexpr char kCacheMagic[8] = {'T', 'G', 'E', 'V', 'C', 'A', 'C', 'H'};
constexpr uint32_t kCacheVersion = 1;

template <typename T>
void put(std::ofstream& out, const T& v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T get(std::ifstream& in) {
  T v;
  in.read(reinterpret_cast<char*>(&v), sizeof(T));
  if (!in) throw std::runtime_error("cache: truncated file");
  return v;
}

}  // namespace

void save_stream_cache(const std::string& path, const EventStream& s) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path);
  out.write(kCacheMagic, sizeof(kCacheMagic));
  put(out, kCacheVersion);
  put(out, static_cast<uint32_t>(s.num_nodes()));
  put(out, static_cast<uint32_t>(s.edge_feat_width()));
  put(out, static_cast<uint32_t>(s.has_explicit_node_feats() ? s.node_feat_width() : 0));
  put(out, static_cast<uint64_t>(s.num_events()));
  for (const Event& e : s.events()) {
    put(out, static_cast<int32_t>(e.src));
    put(out, static_cast<int32_t>(e.dst));
    put(out, e.t);
    for (double f : e.feat) put(out, f);
  }
  if (s.has_explicit_node_feats())
    out.write(reinterpret_cast<const char*>(s.node_feats().data.data()),
              static_cast<std::streamsize>(s.node_feats().size() * sizeof(double)));
  if (!out) throw std::runtime_error("write failed: " + path);
}

EventStream load_stream_cache(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path);
  char magic[8];
  in.read(magic, sizeof(magic));
  if (!in || std::memcmp(magic, kCacheMagic, sizeof(magic)) != 0)
    throw std::runtime_error("cache: bad magic in " + path);
  uint32_t version = get<uint32_t>(in);
  if (version != kCacheVersion) throw std::runtime_error("cache: unsupported version");
  uint32_t num_nodes = get<uint32_t>(in);
  uint32_t efw = get<uint32_t>(in);
  uint32_t nfw = get<uint32_t>(in);
  uint64_t count = get<uint64_t>(in);
  std::vector<Event> records;
  records.reserve(count);
  for (uint64_t i = 0; i < count; ++i) {
    Event e;
    e.src = get<int32_t>(in);
    e.dst = get<int32_t>(in);
    e.t = get<double>(in);
    e.feat.resize(efw);
    for (auto& f : e.feat) f = get<double>(in);
    records.push_back(std::move(e));
  }
  EventStream s = EventStream::ingest(std::move(records), static_cast<int>(num_nodes));
  if (static_cast<uint32_t>(s.num_nodes()) != num_nodes)
    throw std::runtime_error("cache: node count mismatch");
  if (nfw > 0) {
    Tensor feats(static_cast<int>(num_nodes), static_cast<int>(nfw));
    in.read(reinterpret_cast<char*>(feats.data.data()),
            static_cast<std::streamsize>(feats.size() * sizeof(double)));
    if (!in) throw std::runtime_error("cache: truncated node features");
    s.set_node_feats(std::move(feats));
  }
  return s;
}

}  // namespace tg

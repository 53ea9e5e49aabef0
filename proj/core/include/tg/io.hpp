#pragma once

#include <string>
#include <vector>

#include "tg/ctdg.hpp"

namespace tg {

struct CsvLoadResult {
  std::vector<Event> records;
  // present when ids were strings rather than nonnegative integers;
  // index in this vector is the assigned dense id
  std::vector<std::string> id_names;
  bool used_dictionary = false;
};

// Event CSV: header "src,dst,t[,f0,...,fk]", rows in any order.
CsvLoadResult read_events_csv(const std::string& path);
void write_events_csv(const std::string& path, const EventStream& s);

// Node feature CSV: header "node,f0[,f1,...]", one row per node.
Tensor read_node_feats_csv(const std::string& path, int num_nodes);
void write_node_feats_csv(const std::string& path, const Tensor& feats);

// Self-describing binary cache of an ingested stream.
void save_stream_cache(const std::string& path, const EventStream& s);
EventStream load_stream_cache(const std::string& path);

// Doubles are printed with max_digits10 so text round trips are exact.
std::string format_double(double v);

}  // namespace tg

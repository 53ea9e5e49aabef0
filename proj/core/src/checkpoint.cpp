#include "tg/checkpoint.hpp"

#include <cstdint>
#include <cstring>
#include <fstream>
#include <stdexcept>

namespace tg {
namespace {

constexpr char kMagic[8] = {'T', 'G', 'C', 'K', 'P', 'T', '0', '0'};
constexpr std::uint32_t kVersion = 1;

template <typename T>
void put(std::ofstream& f, const T& v) {
  f.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T get(std::ifstream& f) {
  T v{};
  f.read(reinterpret_cast<char*>(&v), sizeof(T));
  if (!f) throw std::runtime_error("checkpoint truncated");
  return v;
}

Tensor row_of(const std::vector<double>& v) {
  Tensor t(1, static_cast<int>(v.size()));
  t.data = v;
  return t;
}

Tensor row_of_chars(const std::vector<char>& v) {
  Tensor t(1, static_cast<int>(v.size()));
  for (size_t i = 0; i < v.size(); ++i) t.data[i] = v[i] ? 1.0 : 0.0;
  return t;
}

Tensor row_of_ints(const std::vector<int>& v) {
  Tensor t(1, static_cast<int>(v.size()));
  for (size_t i = 0; i < v.size(); ++i) t.data[i] = static_cast<double>(v[i]);
  return t;
}

const Tensor& need(const TensorMap& m, const std::string& key) {
  auto it = m.find(key);
  if (it == m.end()) throw std::runtime_error("checkpoint is missing entry " + key);
  return it->second;
}

}  // namespace

void save_tensor_map(const std::string& path, const TensorMap& m) {
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw std::runtime_error("cannot open " + path + " for writing");
  f.write(kMagic, sizeof(kMagic));
  put(f, kVersion);
  put(f, static_cast<std::uint64_t>(m.size()));
  for (const auto& [name, t] : m) {
    put(f, static_cast<std::uint32_t>(name.size()));
    f.write(name.data(), static_cast<std::streamsize>(name.size()));
    put(f, static_cast<std::int32_t>(t.rows));
    put(f, static_cast<std::int32_t>(t.cols));
    f.write(reinterpret_cast<const char*>(t.data.data()),
            static_cast<std::streamsize>(t.data.size() * sizeof(double)));
  }
  if (!f) throw std::runtime_error("write failed for " + path);
}

TensorMap load_tensor_map(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot open " + path);
  char magic[8];
  f.read(magic, sizeof(magic));
  if (!f || std::memcmp(magic, kMagic, sizeof(magic)) != 0)
    throw std::runtime_error("not a checkpoint file: " + path);
  auto version = get<std::uint32_t>(f);
  if (version != kVersion) throw std::runtime_error("unsupported checkpoint version");
  auto count = get<std::uint64_t>(f);
  TensorMap m;
  for (std::uint64_t i = 0; i < count; ++i) {
    auto len = get<std::uint32_t>(f);
    std::string name(len, '\0');
    f.read(name.data(), len);
    auto rows = get<std::int32_t>(f);
    auto cols = get<std::int32_t>(f);
    if (!f || rows < 0 || cols < 0) throw std::runtime_error("checkpoint truncated");
    Tensor t(rows, cols);
    f.read(reinterpret_cast<char*>(t.data.data()),
           static_cast<std::streamsize>(t.data.size() * sizeof(double)));
    if (!f) throw std::runtime_error("checkpoint truncated");
    m.emplace(std::move(name), std::move(t));
  }
  return m;
}

TensorMap checkpoint_state(TgrPipeline& pl) {
  TensorMap m;
  for (Parameter* p : pl.trainable()) m.emplace("param/" + p->name, p->value);
  const TemporalMemory& mem = pl.engine().memory();
  m.emplace("state/memory", mem.states);
  m.emplace("state/last_update", row_of(mem.last_update));
  m.emplace("state/touched", row_of_chars(mem.touched));
  m.emplace("state/bank_members", row_of_ints(pl.bank().members()));
  std::vector<double> act;
  for (int u : pl.bank().members()) act.push_back(pl.bank().last_activation(u));
  m.emplace("state/bank_last_activation", row_of(act));
  m.emplace("meta/rewire", Tensor::scalar(pl.rewire() ? 1.0 : 0.0));
  m.emplace("meta/num_nodes", Tensor::scalar(static_cast<double>(mem.states.rows)));
  if (pl.rewire()) {
    const ExpanderMemory& xm = pl.expander_memory();
    m.emplace("state/expander_H", xm.H);
    m.emplace("state/expander_valid", row_of_chars(xm.valid));
    m.emplace("meta/cayley_n", Tensor::scalar(static_cast<double>(pl.cayley().n)));
  }
  return m;
}

void restore_state(TgrPipeline& pl, const TensorMap& m) {
  bool rewire = need(m, "meta/rewire").at(0, 0) != 0.0;
  if (rewire != pl.rewire())
    throw std::runtime_error("checkpoint rewiring mode does not match the run");
  int n = static_cast<int>(need(m, "meta/num_nodes").at(0, 0));
  if (n != pl.engine().stream().num_nodes())
    throw std::runtime_error("checkpoint node count does not match the stream");

  for (Parameter* p : pl.trainable()) {
    const Tensor& v = need(m, "param/" + p->name);
    if (!v.same_shape(p->value))
      throw std::runtime_error("checkpoint shape mismatch for " + p->name);
    p->value = v;
    p->zero_grad();
  }

  pl.reset_runtime();
  TemporalMemory& mem = pl.engine().memory_mut();
  const Tensor& states = need(m, "state/memory");
  if (!states.same_shape(mem.states)) throw std::runtime_error("checkpoint memory shape mismatch");
  mem.states = states;
  const Tensor& lu = need(m, "state/last_update");
  const Tensor& tc = need(m, "state/touched");
  if (lu.cols != n || tc.cols != n) throw std::runtime_error("checkpoint memory shape mismatch");
  for (int i = 0; i < n; ++i) {
    mem.last_update[static_cast<size_t>(i)] = lu.at(0, i);
    mem.touched[static_cast<size_t>(i)] = tc.at(0, i) != 0.0 ? 1 : 0;
  }

  const Tensor& members = need(m, "state/bank_members");
  const Tensor& act = need(m, "state/bank_last_activation");
  if (members.cols != act.cols) throw std::runtime_error("checkpoint bank shape mismatch");
  for (int i = 0; i < members.cols; ++i) {
    int u = static_cast<int>(members.at(0, i));
    if (u < 0 || u >= n) throw std::runtime_error("checkpoint bank member out of range");
    pl.bank().observe(u, act.at(0, i));
  }

  if (pl.rewire()) {
    pl.set_expander_modulus(static_cast<std::uint32_t>(need(m, "meta/cayley_n").at(0, 0)));
    ExpanderMemory& xm = pl.expander_memory();
    xm.H = need(m, "state/expander_H");
    const Tensor& valid = need(m, "state/expander_valid");
    if (valid.cols != xm.H.rows) throw std::runtime_error("checkpoint expander shape mismatch");
    xm.valid.assign(static_cast<size_t>(valid.cols), 0);
    for (int i = 0; i < valid.cols; ++i)
      xm.valid[static_cast<size_t>(i)] = valid.at(0, i) != 0.0 ? 1 : 0;
    // restored passes only serve evaluation reads; training would need the
    // producing dropout stream, which is not stored
    xm.producing_key = 0;
    xm.produced_training = false;
    xm.produced_assign = xm.H.rows > 0
                             ? std::make_shared<const ExpanderAssignment>(pl.assignment())
                             : nullptr;
  }
}

void save_checkpoint(const std::string& path, TgrPipeline& pl) {
  save_tensor_map(path, checkpoint_state(pl));
}

void load_checkpoint(const std::string& path, TgrPipeline& pl) {
  restore_state(pl, load_tensor_map(path));
}

}  // namespace tg

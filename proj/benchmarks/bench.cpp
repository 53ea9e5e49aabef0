// Microbenchmarks for the hot paths: expander construction, the spectral
// certificate, reach sweeps, the memory mixer, and a full scoring pass.

#include <benchmark/benchmark.h>

#include "tg/cayley.hpp"
#include "tg/data.hpp"
#include "tg/reach.hpp"
#include "tg/rng.hpp"
#include "tg/tgn.hpp"
#include "tg/tgr.hpp"

using namespace tg;

namespace {

void BM_CayleyBuild(benchmark::State& state) {
  uint32_t n = (uint32_t)state.range(0);
  for (auto _ : state) {
    CayleyGraph g = build_cayley(n);
    benchmark::DoNotOptimize(g.adj.data());
  }
  state.counters["vertices"] = (double)sl2_order(n);
}
BENCHMARK(BM_CayleyBuild)->DenseRange(3, 8);

void BM_SpectralGap(benchmark::State& state) {
  CayleyGraph g = build_cayley((uint32_t)state.range(0));
  for (auto _ : state) {
    double gap = spectral_gap(g);
    benchmark::DoNotOptimize(gap);
  }
  state.counters["vertices"] = (double)g.num_vertices();
}
BENCHMARK(BM_SpectralGap)->DenseRange(3, 6);

void BM_MixingSweep(benchmark::State& state) {
  EventStream s = gen_erdos_temporal(100, (int)state.range(0), 7);
  double inf = std::numeric_limits<double>::infinity();
  for (auto _ : state) {
    MixingFront f = temporal_mixing_set(s, 0, inf, ReachMode::strict());
    benchmark::DoNotOptimize(f.earliest.size());
  }
}
BENCHMARK(BM_MixingSweep)->Arg(1000)->Arg(10000)->Arg(100000);

void BM_ExpanderMix(benchmark::State& state) {
  int bank = (int)state.range(0);
  int dim = 32;
  CayleyGraph g = build_cayley(smallest_n_for((uint64_t)bank));
  ExpanderAssignment as = assign_vertices(g, bank, AssignMode::Induced);
  Rng rng(5);
  MixerParams p = make_mixer_params(rng, MixerLayer::Gcn, dim, 2, 0.0);
  Tensor S(bank, dim);
  for (auto& v : S.data) v = rng.uniform(-1.0, 1.0);
  for (auto _ : state) {
    Tensor h = mix_memory(S, as, p);
    benchmark::DoNotOptimize(h.data.data());
  }
  state.counters["working"] = (double)as.num_working;
}
BENCHMARK(BM_ExpanderMix)->Arg(64)->Arg(256)->Arg(1024);

void BM_ScoreBatch(benchmark::State& state) {
  EventStream s = gen_erdos_temporal(200, 2000, 11);
  TgnDims d;
  d.memory = 32;
  d.embed = 32;
  d.time = 16;
  d.heads = 2;
  d.psi_hidden = 32;
  d.kappa_hidden = 32;
  d.neighbor_cap = 10;
  d.node_feat = s.node_feat_width();
  d.edge_feat = s.edge_feat_width();
  d.x_width = d.node_feat;
  TgnEngine eng(s, d, Aggregator::Attention, 3);
  auto batches = batchify(s, (size_t)state.range(0));
  eng.advance(batches[0]);
  NegativeSampler sampler(s, 9);
  std::vector<std::vector<int>> negs;
  for (size_t i = batches[1].begin; i < batches[1].end; ++i)
    negs.push_back(sampler.sample(i, s.events()[i].dst, 1));
  for (auto _ : state) {
    BatchScores sc = eng.score_batch(batches[1], negs);
    benchmark::DoNotOptimize(sc.pos.data());
  }
}
BENCHMARK(BM_ScoreBatch)->Arg(100)->Arg(400);

void BM_StoredMixReplay(benchmark::State& state) {
  EventStream s = gen_erdos_temporal(150, 1200, 13);
  TgnDims d;
  d.memory = 32;
  d.embed = 32;
  d.time = 16;
  d.heads = 2;
  d.psi_hidden = 32;
  d.kappa_hidden = 32;
  d.neighbor_cap = 10;
  MixerConfig mix;
  mix.layer = MixerLayer::Gat;
  mix.dropout = 0.0;
  TgrPipeline pl(s, d, Aggregator::Attention, mix, true, 17, 1e-3);
  for (const TemporalBatch& b : batchify(s, 200)) pl.replay_batch(b);
  for (auto _ : state) {
    Tensor h = pl.replay_stored_mix();
    benchmark::DoNotOptimize(h.data.data());
  }
  state.counters["bank"] = (double)pl.bank().size();
}
BENCHMARK(BM_StoredMixReplay);

}  // namespace

BENCHMARK_MAIN();

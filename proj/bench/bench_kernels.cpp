// Serial vs OpenMP kernels: corpus simulation and threshold averaging.

#include <benchmark/benchmark.h>
#include <omp.h>

#include "piia/service.hpp"

using namespace piia;

namespace {

const Runtime& runtime() {
  static const Runtime rt{Config{}};
  return rt;
}

const std::vector<Example>& examples() {
  static const auto ex = load_examples(runtime().config().examples, runtime().schemas());
  return ex;
}

const TripleSet& triples() {
  static const TripleSet set = [] {
    TrainConfig cfg;
    const auto& rt = runtime();
    return TripleSet(make_triples(examples(), rt.schemas(), cfg), rt.embeddings(), rt.artifacts().filter);
  }();
  return set;
}

void BM_simulate_serial(benchmark::State& state) {
  const auto& rt = runtime();
  for (auto _ : state) benchmark::DoNotOptimize(simulate_serial(examples(), rt.gateway(), rt.artifacts()));
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(examples().size()));
}

void BM_simulate_parallel(benchmark::State& state) {
  const auto& rt = runtime();
  for (auto _ : state) benchmark::DoNotOptimize(simulate_parallel(examples(), rt.gateway(), rt.artifacts()));
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(examples().size()));
  state.counters["threads"] = omp_get_max_threads();
}

void BM_threshold_serial(benchmark::State& state) {
  const auto& p = runtime().model().projection;
  for (auto _ : state) benchmark::DoNotOptimize(threshold_serial(triples(), p));
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(triples().size()));
}

void BM_threshold_parallel(benchmark::State& state) {
  const auto& p = runtime().model().projection;
  for (auto _ : state) benchmark::DoNotOptimize(threshold_parallel(triples(), p));
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(triples().size()));
  state.counters["threads"] = omp_get_max_threads();
}

}  // namespace

BENCHMARK(BM_simulate_serial)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_simulate_parallel)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_threshold_serial)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_threshold_parallel)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();

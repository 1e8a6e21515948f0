#include <random>
#include <string>
#include <vector>

#include <benchmark/benchmark.h>

#include "gold/matcher.hpp"
#include "gold/metrics.hpp"

namespace {

gold::SourceIndex make_index(std::size_t n, std::size_t dim) {
  std::mt19937_64 rng(7);
  std::normal_distribution<double> normal;
  std::vector<gold::IndexItem> items;
  std::vector<gold::EmbeddingVector> vecs;
  for (std::size_t i = 0; i < n; ++i) {
    items.push_back({"s" + std::to_string(i), ""});
    gold::EmbeddingVector v;
    for (std::size_t j = 0; j < dim; ++j) v.values.push_back(normal(rng));
    vecs.push_back(std::move(v));
  }
  return gold::SourceIndex::from_vectors(std::move(items), std::move(vecs));
}

void BM_Nearest(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const gold::SourceIndex index = make_index(n, 300);
  gold::EmbeddingVector q;
  q.values.assign(300, 0.1);
  for (auto _ : state) benchmark::DoNotOptimize(gold::nearest("q", q, index, 240));
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(n));
}
BENCHMARK(BM_Nearest)->Arg(1000)->Arg(10000);

void BM_Auroc(benchmark::State& state) {
  std::mt19937_64 rng(3);
  std::vector<gold::ScoredExample> xs;
  for (std::int64_t i = 0; i < state.range(0); ++i) {
    xs.push_back({std::to_string(i), static_cast<double>(rng() % 1000), rng() % 10 == 0});
  }
  xs[0].is_oos = true;
  xs[1].is_oos = false;
  for (auto _ : state) {
    benchmark::DoNotOptimize(gold::auroc(xs));
    benchmark::DoNotOptimize(gold::aupr(xs));
  }
}
BENCHMARK(BM_Auroc)->Arg(1000)->Arg(100000);

}  // namespace

BENCHMARK_MAIN();

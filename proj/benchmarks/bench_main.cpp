#include <benchmark/benchmark.h>

#include <random>

#include "tsal/classifier.hpp"
#include "tsal/label_stream.hpp"
#include "tsal/selection.hpp"
#include "tsal/synthetic.hpp"

using namespace tsal;

namespace {

const Dataset& bench_data() {
  static const Dataset d = generate_synthetic(lusms_synth_v1(42));
  return d;
}

StateMatrix random_state(std::size_t n, std::size_t m) {
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  StateMatrix s;
  for (std::size_t i = 0; i < n; ++i) {
    std::vector<double> p(m);
    for (auto& v : p) v = u(rng);
    s.ids.push_back("s" + std::to_string(i));
    s.rows.emplace_back(p);
  }
  return s;
}

void BM_Select(benchmark::State& state) {
  const auto kind = static_cast<Strategy>(state.range(1));
  const auto s = random_state(static_cast<std::size_t>(state.range(0)), 4);
  const LabelSchema schema({"A-line", "B-line", "P-lesion", "P-effusion"}, 0);
  for (auto _ : state) benchmark::DoNotOptimize(select(s, schema, {kind}, 25, 7));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_Select)->ArgsProduct({{1000, 10000}, {0, 1, 2, 3}});

void BM_ScoreAll(benchmark::State& state) {
  const auto s = random_state(static_cast<std::size_t>(state.range(0)), 4);
  const LabelSchema schema({"A-line", "B-line", "P-lesion", "P-effusion"}, 0);
  for (auto _ : state) benchmark::DoNotOptimize(score_all(s, schema));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_ScoreAll)->Arg(2000);

void BM_Nearest(benchmark::State& state) {
  const std::size_t m = static_cast<std::size_t>(state.range(0));
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  CorrelationTable t(m);
  for (std::size_t c = 0; c < (std::size_t{1} << m); ++c) {
    auto combo = LabelCombination::zeros(m);
    for (std::size_t j = 0; j < m; ++j) combo.set(j, (c >> j) & 1);
    std::vector<double> rv(m);
    for (auto& v : rv) v = u(rng) + 1e-3;
    t.put(combo, normalize_rv(rv));
  }
  std::vector<double> q(m);
  for (auto& v : q) v = u(rng) + 1e-3;
  q = normalize_rv(q);
  for (auto _ : state) benchmark::DoNotOptimize(nearest_combination(q, t));
}
BENCHMARK(BM_Nearest)->Arg(4)->Arg(6);

void BM_TrainEpoch(benchmark::State& state) {
  const auto& d = bench_data();
  TrainConfig tc;
  tc.epochs = 1;
  HeadConfig head;
  head.hidden_units = static_cast<std::size_t>(state.range(0));
  const auto model = init_model(d.schema(), d.feature_dim(), tc, head);
  std::vector<TrainingExample> ex;
  for (const auto& s : d.subset(Split::pool)) ex.push_back({s.features, *s.truth});
  for (auto _ : state) benchmark::DoNotOptimize(train(model, ex, tc));
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(ex.size()));
}
BENCHMARK(BM_TrainEpoch)->Arg(0)->Arg(32)->Unit(benchmark::kMillisecond);

void BM_PredictPool(benchmark::State& state) {
  const auto& d = bench_data();
  const auto model = init_model(d.schema(), d.feature_dim(), TrainConfig{});
  const auto pool = d.subset(Split::pool);
  for (auto _ : state) benchmark::DoNotOptimize(predict_proba(model, pool));
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(pool.size()));
}
BENCHMARK(BM_PredictPool)->Unit(benchmark::kMicrosecond);

}  // namespace

BENCHMARK_MAIN();

#include <benchmark/benchmark.h>

#include <random>

#include "dualre/kernels.hpp"
#include "dualre/synthetic.hpp"
#include "dualre/train.hpp"
#include "dualre/vocab.hpp"

using namespace dualre;

namespace {

std::vector<double> random_vec(std::size_t n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> d;
  std::vector<double> v(n);
  for (auto& x : v) x = d(rng);
  return v;
}

void BM_GemmReference(benchmark::State& state) {
  const std::size_t n = static_cast<std::size_t>(state.range(0));
  auto a = random_vec(n * n, 1), b = random_vec(n * n, 2);
  std::vector<double> c(n * n);
  for (auto _ : state) {
    kernels::reference::gemm(kernels::Trans::No, kernels::Trans::No, n, n, n, a, b, c);
    benchmark::DoNotOptimize(c.data());
  }
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(2 * n * n * n));
}

void BM_GemmParallel(benchmark::State& state) {
  const std::size_t n = static_cast<std::size_t>(state.range(0));
  auto a = random_vec(n * n, 1), b = random_vec(n * n, 2);
  std::vector<double> c(n * n);
  for (auto _ : state) {
    kernels::gemm(kernels::Trans::No, kernels::Trans::No, n, n, n, a, b, c);
    benchmark::DoNotOptimize(c.data());
  }
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(2 * n * n * n));
}

BENCHMARK(BM_GemmReference)->Arg(32)->Arg(64)->Arg(128)->Arg(256);
BENCHMARK(BM_GemmParallel)->Arg(32)->Arg(64)->Arg(128)->Arg(256);

// Pair-parallel evaluation over the synthetic dev split; range(0) is the
// OpenMP thread count.
void BM_Evaluate(benchmark::State& state) {
  const auto schema = synthetic_schema();
  const auto train = make_synthetic(50, 1, "train");
  const auto dev = make_synthetic(20, 2, "dev");
  const Vocab vocab = build_vocab(train, schema, 1);
  const Model model = make_model(schema, vocab, EncoderConfig{}, ModelConfig{}, 1);
  const int before = kernels::num_threads();
  kernels::set_num_threads(static_cast<int>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(evaluate(model, dev).micro_f1);
  kernels::set_num_threads(before);
}

BENCHMARK(BM_Evaluate)->Arg(1)->Arg(2)->Arg(4)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();

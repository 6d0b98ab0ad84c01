#include "esci/filters.hpp"
#include "esci/fusers.hpp"
#include "esci/fusion.hpp"
#include "esci/scenarios.hpp"

#include <benchmark/benchmark.h>

#include <random>

namespace {

using namespace esci;
using namespace esci::fusion;

std::vector<EstimatePair> make_pairs(std::size_t n, Eigen::Index d) {
  Rng rng(n * 100 + static_cast<std::size_t>(d));
  std::normal_distribution<double> g(0.0, 1.0);
  std::vector<EstimatePair> out;
  for (std::size_t i = 0; i < n; ++i) {
    Matrix a(d, d);
    for (Eigen::Index r = 0; r < d; ++r) {
      for (Eigen::Index c = 0; c < d; ++c) a(r, c) = g(rng);
    }
    Vector x(d);
    for (Eigen::Index r = 0; r < d; ++r) x(r) = g(rng);
    out.push_back({x, a * a.transpose() + 0.1 * Matrix::Identity(d, d)});
  }
  return out;
}

void BM_EsciClosedForm(benchmark::State& state) {
  const auto pairs = make_pairs(static_cast<std::size_t>(state.range(0)), state.range(1));
  for (auto _ : state) benchmark::DoNotOptimize(esci_closed_form(pairs, ImportanceKind::InvTrace));
}
BENCHMARK(BM_EsciClosedForm)->Args({4, 2})->Args({10, 4})->Args({50, 4});

void BM_EsciRecursive(benchmark::State& state) {
  const std::size_t n = static_cast<std::size_t>(state.range(0));
  const auto pairs = make_pairs(n, state.range(1));
  const FusionStructure s = random_structure(n, 3);
  for (auto _ : state) benchmark::DoNotOptimize(esci_recursive(pairs, s, ImportanceKind::InvTrace));
}
BENCHMARK(BM_EsciRecursive)->Args({4, 2})->Args({10, 4})->Args({50, 4});

void BM_IncrementalFuserPeriod(benchmark::State& state) {
  const auto pairs = make_pairs(10, 4);
  for (auto _ : state) {
    IncrementalFuser fuser(ImportanceKind::InvTrace);
    for (std::size_t i = 0; i < pairs.size(); ++i) {
      fuser.receive(pairs[i]);
      if (i % 3 == 2) fuser.trigger();
    }
    fuser.trigger();
    benchmark::DoNotOptimize(fuser.fused());
  }
}
BENCHMARK(BM_IncrementalFuserPeriod);

void BM_CbciOptimalWeights(benchmark::State& state) {
  const auto pairs = make_pairs(static_cast<std::size_t>(state.range(0)), state.range(1));
  for (auto _ : state) benchmark::DoNotOptimize(cbci_optimal_weights(pairs));
}
BENCHMARK(BM_CbciOptimalWeights)->Args({4, 2})->Args({10, 4});

void BM_CsciFuse(benchmark::State& state) {
  const auto pairs = make_pairs(10, 4);
  const FusionStructure s = random_structure(10, 5);
  for (auto _ : state) benchmark::DoNotOptimize(csci_fuse(pairs, s));
}
BENCHMARK(BM_CsciFuse);

void BM_KfStep(benchmark::State& state) {
  const auto sc = scenarios::TrackingScenario::defaults();
  const auto m = sc.model(0);
  const EstimatePair prior = scenarios::initial_estimate(sc, 0, 1);
  const Vector z = (Vector(2) << 100.0, 100.0).finished();
  for (auto _ : state) benchmark::DoNotOptimize(filters::kf_step(prior, m, z));
}
BENCHMARK(BM_KfStep);

void BM_CkfStep(benchmark::State& state) {
  const auto sc = scenarios::RobotScenario::defaults();
  const auto m = sc.model(0);
  const EstimatePair prior = scenarios::initial_estimate(sc, 0, 1);
  const Vector z = sc.measurement(0, sc.transition(sc.x0, sc.control(0)));
  for (auto _ : state) benchmark::DoNotOptimize(filters::ckf_step(prior, m, sc.control(0), z));
}
BENCHMARK(BM_CkfStep);

}  // namespace

BENCHMARK_MAIN();

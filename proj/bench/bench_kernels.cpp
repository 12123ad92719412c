// Throughput comparison of the OpenMP kernels against their serial
// references.  Input sizes bracket the shipped defaults (a few hundred
// locations, a 100x100 prediction lattice).
#include <benchmark/benchmark.h>

#include <random>

#include "fadegp/kernel.hpp"
#include "fadegp/model.hpp"
#include "fadegp/predict.hpp"

using namespace fadegp;

namespace {

Matrix random_inputs(Index n, unsigned seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  Matrix x(n, n_inputs);
  for (Index i = 0; i < n; ++i)
    for (int j = 0; j < n_inputs; ++j) x(i, j) = gauss(rng);
  return x;
}

Vector bench_rho() {
  Vector rho(n_length_scales);
  rho << 1.2, 1.8, 0.9, 1.5;
  return rho;
}

Dataset bench_dataset(Index n) {
  std::mt19937_64 rng(7);
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::uniform_real_distribution<double> unif(1.0, 4.0);
  Dataset d;
  d.times.resize(11);
  for (Index t = 0; t < 11; ++t) d.times[t] = t + 1.0;
  d.y.resize(11, n);
  d.x_raw.resize(n, n_inputs);
  for (Index i = 0; i < n; ++i) {
    const double scale = 3.0 * unif(rng);
    for (Index t = 0; t < 11; ++t) {
      const double mean = scale * (1.0 - std::exp(-(d.times[t] - 1.0) / 2.0));
      d.y(t, i) = t == 0 ? 0.0 : mean + 0.05 * gauss(rng);
    }
    for (int j = 0; j < n_inputs; ++j) d.x_raw(i, j) = 5.0 + 0.8 * gauss(rng);
    d.ids.push_back("p" + std::to_string(i + 1));
  }
  return d;
}

// Synthetic retained draws: prior-scale coefficients with fixed hypers.  The
// map kernel cost is dominated by the per-draw conditional solves, which do
// not care whether the draws came from a real posterior.
DrawSet fake_draws(const PosteriorModel& model, Index n_draws) {
  std::mt19937_64 rng(11);
  std::normal_distribution<double> gauss(0.0, 1.0);
  DrawSet ds;
  ds.states.reserve(static_cast<std::size_t>(n_draws));
  for (Index s = 0; s < n_draws; ++s) {
    Vector q = model.initial_point(rng);
    for (Index j = 0; j < q.size(); ++j) q[j] += 0.01 * gauss(rng);
    ds.states.push_back(model.state_from_natural(model.to_natural(q)));
    ds.chain_of.push_back(0);
  }
  ds.total_draws = n_draws;
  return ds;
}

void bm_se_ard_corr_serial(benchmark::State& state) {
  const Matrix x = random_inputs(state.range(0), 42);
  const Vector rho = bench_rho();
  for (auto _ : state) benchmark::DoNotOptimize(detail::se_ard_corr_serial(x, rho));
}

void bm_se_ard_corr_omp(benchmark::State& state) {
  const Matrix x = random_inputs(state.range(0), 42);
  const Vector rho = bench_rho();
  for (auto _ : state) benchmark::DoNotOptimize(detail::se_ard_corr_omp(x, rho));
}

void bm_cross_corr_serial(benchmark::State& state) {
  const Matrix xa = random_inputs(state.range(0), 1);
  const Matrix xb = random_inputs(128, 2);
  const Vector rho = bench_rho();
  for (auto _ : state) benchmark::DoNotOptimize(detail::cross_corr_serial(xa, xb, rho));
}

void bm_cross_corr_omp(benchmark::State& state) {
  const Matrix xa = random_inputs(state.range(0), 1);
  const Matrix xb = random_inputs(128, 2);
  const Vector rho = bench_rho();
  for (auto _ : state) benchmark::DoNotOptimize(detail::cross_corr_omp(xa, xb, rho));
}

struct MapFixture {
  Dataset data;
  PosteriorModel model;
  DrawSet draws;

  explicit MapFixture(Index n_draws) : data(bench_dataset(64)), model(data, map_cfg()), draws(fake_draws(model, n_draws)) {}

  static ModelConfig map_cfg() {
    ModelConfig cfg;
    Hyperparams h;
    h.alpha = Vector::Constant(1, 1.0);
    h.rho = bench_rho();
    h.sigma = 0.2;
    cfg.fixed_hypers = h;
    return cfg;
  }
};

void bm_map_mean_coeffs_serial(benchmark::State& state) {
  static const MapFixture fx(200);
  const Matrix xs = random_inputs(state.range(0), 5);
  for (auto _ : state)
    benchmark::DoNotOptimize(detail::map_mean_coeffs_serial(fx.model, fx.draws, xs));
}

void bm_map_mean_coeffs_omp(benchmark::State& state) {
  static const MapFixture fx(200);
  const Matrix xs = random_inputs(state.range(0), 5);
  for (auto _ : state)
    benchmark::DoNotOptimize(detail::map_mean_coeffs_omp(fx.model, fx.draws, xs));
}

void bm_gradient(benchmark::State& state) {
  const Dataset d = bench_dataset(state.range(0));
  const PosteriorModel model(d, ModelConfig{});
  std::mt19937_64 rng(3);
  const Vector q = model.initial_point(rng);
  Vector grad(model.dim());
  for (auto _ : state) {
    const double v = model.value_grad(q, grad);
    benchmark::DoNotOptimize(v);
    benchmark::DoNotOptimize(grad.data());
  }
}

}  // namespace

BENCHMARK(bm_se_ard_corr_serial)->Arg(64)->Arg(256)->Arg(1024);
BENCHMARK(bm_se_ard_corr_omp)->Arg(64)->Arg(256)->Arg(1024);
BENCHMARK(bm_cross_corr_serial)->Arg(1024)->Arg(10000);
BENCHMARK(bm_cross_corr_omp)->Arg(1024)->Arg(10000);
BENCHMARK(bm_map_mean_coeffs_serial)->Arg(1024)->Arg(10000)->Unit(benchmark::kMillisecond);
BENCHMARK(bm_map_mean_coeffs_omp)->Arg(1024)->Arg(10000)->Unit(benchmark::kMillisecond);
BENCHMARK(bm_gradient)->Arg(13)->Arg(64)->Arg(200)->Unit(benchmark::kMicrosecond);

BENCHMARK_MAIN();

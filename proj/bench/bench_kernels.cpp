// Serial reference vs OpenMP kernels.

#include <benchmark/benchmark.h>

#include <random>

#include "evrec/kernels.hpp"
#include "evrec/sparse_operator.hpp"

using namespace evrec;
namespace ks = evrec::kernels::serial;
namespace ko = evrec::kernels::omp;

namespace {

const SensorSize kGrid{640, 480};

std::vector<double> noise(std::size_t n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> d;
  std::vector<double> v(n);
  for (double& x : v) x = d(rng);
  return v;
}

std::vector<kernels::Vote> votes(std::size_t n) {
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> x(0, kGrid.width), y(0, kGrid.height);
  std::vector<kernels::Vote> v(n);
  for (auto& e : v) e = {x(rng), y(rng), 1.0};
  return v;
}

const SparseOperator& sobel() {
  static const SparseOperator op = [] {
    std::vector<Vec2> g(kGrid.pixels());
    const auto a = noise(2 * g.size(), 2);
    for (std::size_t i = 0; i < g.size(); ++i) g[i] = {20 * a[2 * i], 20 * a[2 * i + 1]};
    return build_directional_operator(FlowField::dense(kGrid, g), kGrid, StencilKind::Sobel9);
  }();
  return op;
}

template <bool Omp>
void BM_vote(benchmark::State& state) {
  const auto v = votes(static_cast<std::size_t>(state.range(0)));
  std::vector<double> out(kGrid.pixels());
  for (auto _ : state) {
    std::fill(out.begin(), out.end(), 0.0);
    if constexpr (Omp) ko::vote_bilinear(v, kGrid, out);
    else ks::vote_bilinear(v, kGrid, out);
    benchmark::DoNotOptimize(out.data());
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}

template <bool Omp>
void BM_convolve(benchmark::State& state) {
  const auto in = noise(kGrid.pixels(), 3);
  const auto k = kernels::gaussian_kernel_1d(static_cast<double>(state.range(0)));
  std::vector<double> out(kGrid.pixels());
  for (auto _ : state) {
    if constexpr (Omp) ko::convolve_separable(in, kGrid, k, kernels::Border::Replicate, out);
    else ks::convolve_separable(in, kGrid, k, kernels::Border::Replicate, out);
    benchmark::DoNotOptimize(out.data());
  }
}

template <bool Omp>
void BM_spmv(benchmark::State& state) {
  const auto& op = sobel();
  const auto x = noise(op.cols(), 4);
  std::vector<double> y(op.rows());
  for (auto _ : state) {
    if constexpr (Omp) ko::spmv(op.view(), x, y);
    else ks::spmv(op.view(), x, y);
    benchmark::DoNotOptimize(y.data());
  }
}

template <bool Omp>
void BM_spmv_transpose(benchmark::State& state) {
  const auto& op = sobel();
  const auto x = noise(op.rows(), 5);
  std::vector<double> y(op.cols());
  for (auto _ : state) {
    if constexpr (Omp) ko::spmv_transpose(op.view(), x, y);
    else ks::spmv_transpose(op.view(), x, y);
    benchmark::DoNotOptimize(y.data());
  }
}

template <bool Omp>
void BM_dot(benchmark::State& state) {
  const auto a = noise(kGrid.pixels(), 6), b = noise(kGrid.pixels(), 7);
  for (auto _ : state) {
    double d = Omp ? ko::dot(a, b) : ks::dot(a, b);
    benchmark::DoNotOptimize(d);
  }
}

}  // namespace

BENCHMARK(BM_vote<false>)->Name("vote_bilinear/serial")->Arg(30000)->Arg(300000);
BENCHMARK(BM_vote<true>)->Name("vote_bilinear/omp")->Arg(30000)->Arg(300000);
BENCHMARK(BM_convolve<false>)->Name("convolve_separable/serial")->Arg(1)->Arg(3);
BENCHMARK(BM_convolve<true>)->Name("convolve_separable/omp")->Arg(1)->Arg(3);
BENCHMARK(BM_spmv<false>)->Name("spmv/serial");
BENCHMARK(BM_spmv<true>)->Name("spmv/omp");
BENCHMARK(BM_spmv_transpose<false>)->Name("spmv_transpose/serial");
BENCHMARK(BM_spmv_transpose<true>)->Name("spmv_transpose/omp");
BENCHMARK(BM_dot<false>)->Name("dot/serial");
BENCHMARK(BM_dot<true>)->Name("dot/omp");

BENCHMARK_MAIN();

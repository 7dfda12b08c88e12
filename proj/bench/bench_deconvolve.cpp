#include <benchmark/benchmark.h>

#include <random>

#include "vcd/pipeline.hpp"
#include "vcd/precorrect.hpp"
#include "vcd/psf.hpp"
#include "vcd/reference.hpp"

namespace {

using namespace vcd;

Plane noise(int w, int h) {
  std::mt19937 rng(7);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  Plane p(w, h);
  for (double& v : p.values()) v = u(rng);
  return p;
}

const Deconvolver& disk8() {
  static const Deconvolver d(disk_psf(8.0, disk_kernel_size(8.0)), 0.01, 1e-3);
  return d;
}

void BM_Whole(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  const Plane img = noise(n, n);
  for (auto _ : state) benchmark::DoNotOptimize(disk8().apply(img));
  state.SetItemsProcessed(state.iterations() * n * n);
}

void BM_TiledParallel(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  const Plane img = noise(n, n);
  const TileGrid grid{256, disk8().pad()};
  for (auto _ : state) benchmark::DoNotOptimize(disk8().apply_tiled(img, grid));
  state.SetItemsProcessed(state.iterations() * n * n);
}

void BM_TiledSerial(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  const Plane img = noise(n, n);
  const TileGrid grid{256, disk8().pad()};
  for (auto _ : state) benchmark::DoNotOptimize(reference::tiled_deconvolve_serial(img, disk8(), grid));
  state.SetItemsProcessed(state.iterations() * n * n);
}

void BM_ConvolveFft(benchmark::State& state) {
  const Kernel k = disk_psf(static_cast<double>(state.range(0)), disk_kernel_size(static_cast<double>(state.range(0))));
  const Plane img = noise(256, 256);
  for (auto _ : state) benchmark::DoNotOptimize(convolve_plane(img, k));
}

void BM_ConvolveDirect(benchmark::State& state) {
  const Kernel k = disk_psf(static_cast<double>(state.range(0)), disk_kernel_size(static_cast<double>(state.range(0))));
  const Plane img = noise(256, 256);
  for (auto _ : state) benchmark::DoNotOptimize(reference::convolve_direct(img, k));
}

void BM_Frame720p(benchmark::State& state) {
  const Frame f = synthetic_frame(1280, 720, 0);
  const PrecorrectOptions options{RangePolicy::Clamp, TileGrid{256, 0}};
  for (auto _ : state) benchmark::DoNotOptimize(precorrect_frame(f, disk8(), options));
  state.SetItemsProcessed(state.iterations());
}

}  // namespace

BENCHMARK(BM_Whole)->Arg(512)->Arg(2048)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_TiledParallel)->Arg(512)->Arg(2048)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_TiledSerial)->Arg(512)->Arg(2048)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_ConvolveFft)->Arg(2)->Arg(8)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_ConvolveDirect)->Arg(2)->Arg(8)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_Frame720p)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();

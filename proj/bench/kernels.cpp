// OpenMP kernels against their serial reference versions. Each pair runs on
// the same inputs; the "threads" counter records the parallel width used.

#include <benchmark/benchmark.h>

#include <algorithm>
#include <map>
#include <random>

#include "fixtures.hpp"
#include "relumo/camera.hpp"
#include "relumo/losses.hpp"
#include "relumo/metrics.hpp"
#include "relumo/parallel.hpp"
#include "relumo/reference.hpp"
#include "relumo/resample.hpp"
#include "relumo/rotation.hpp"

using namespace relumo;

namespace {

const fixtures::Scene& scene(int n) {
  static std::map<int, fixtures::Scene> cache;
  auto it = cache.find(n);
  if (it == cache.end()) it = cache.emplace(n, fixtures::make_scene(n, n, 3)).first;
  return it->second;
}

Image noisy(const Image& img, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> z(0.0, 0.05);
  Image out = img;
  for (double& v : out.data()) v = std::clamp(v + z(rng), 0.0, 1.0);
  return out;
}

void label(benchmark::State& state, int n) {
  state.counters["threads"] = thread_count();
  state.SetItemsProcessed(state.iterations() * static_cast<int64_t>(n) * n);
}

void BM_Shade(benchmark::State& state) {
  const auto& s = scene(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(shade(s.normals, s.lighting));
  label(state, state.range(0));
}
void BM_ShadeReference(benchmark::State& state) {
  const auto& s = scene(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(reference::shade(s.normals, s.lighting));
  label(state, state.range(0));
}

void BM_Downscale(benchmark::State& state) {
  const auto& s = scene(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(downscale(s.image, s.mask, 2));
  label(state, state.range(0));
}
void BM_DownscaleReference(benchmark::State& state) {
  const auto& s = scene(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(reference::downscale(s.image, s.mask, 2));
  label(state, state.range(0));
}

void BM_AppearanceLoss(benchmark::State& state) {
  const auto& s = scene(state.range(0));
  const Decomposition d = s.decomposition();
  for (auto _ : state) benchmark::DoNotOptimize(appearance_loss(s.image, d, false).value);
  label(state, state.range(0));
}
void BM_AppearanceLossReference(benchmark::State& state) {
  const auto& s = scene(state.range(0));
  const Decomposition d = s.decomposition();
  for (auto _ : state) benchmark::DoNotOptimize(reference::appearance_loss(s.image, d));
  label(state, state.range(0));
}

void BM_Ssim(benchmark::State& state) {
  const auto& s = scene(state.range(0));
  const Image b = noisy(s.image, 5);
  for (auto _ : state) benchmark::DoNotOptimize(ssim(s.image, b, s.mask));
  label(state, state.range(0));
}
void BM_SsimReference(benchmark::State& state) {
  const auto& s = scene(state.range(0));
  const Image b = noisy(s.image, 5);
  for (auto _ : state) benchmark::DoNotOptimize(reference::ssim(s.image, b, s.mask));
  label(state, state.range(0));
}

fixtures::TwoView two_view(int n) {
  std::mt19937_64 rng(11);
  return fixtures::make_two_view(n, n, axis_angle_rotation(Eigen::Vector3d(0, 1, 0.2).normalized(), 0.1),
                                 {0.3, 0.1, 0}, fixtures::random_lighting(rng), {0.4, 0.3, 0.2});
}

void BM_CrossProject(benchmark::State& state) {
  const auto tv = two_view(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(cross_project(tv.image_b, tv.cam_b, tv.cam_a));
  label(state, state.range(0));
}
void BM_CrossProjectReference(benchmark::State& state) {
  const auto tv = two_view(state.range(0));
  for (auto _ : state)
    benchmark::DoNotOptimize(reference::cross_project(tv.image_b, tv.cam_b, tv.cam_a));
  label(state, state.range(0));
}

}  // namespace

BENCHMARK(BM_Shade)->Arg(128)->Arg(512);
BENCHMARK(BM_ShadeReference)->Arg(128)->Arg(512);
BENCHMARK(BM_Downscale)->Arg(128)->Arg(512);
BENCHMARK(BM_DownscaleReference)->Arg(128)->Arg(512);
BENCHMARK(BM_AppearanceLoss)->Arg(128)->Arg(512);
BENCHMARK(BM_AppearanceLossReference)->Arg(128)->Arg(512);
// The reference SSIM is a direct 11x11 window per pixel, so the sizes stay small.
BENCHMARK(BM_Ssim)->Arg(128)->Arg(256);
BENCHMARK(BM_SsimReference)->Arg(128)->Arg(256);
BENCHMARK(BM_CrossProject)->Arg(128)->Arg(512);
BENCHMARK(BM_CrossProjectReference)->Arg(128)->Arg(512);

int main(int argc, char** argv) {
  configure_threads_from_env();
  benchmark::Initialize(&argc, argv);
  if (benchmark::ReportUnrecognizedArguments(argc, argv)) return 1;
  benchmark::RunSpecifiedBenchmarks();
  benchmark::Shutdown();
  return 0;
}

#include <benchmark/benchmark.h>

#include "sats/augment.hpp"
#include "sats/network.hpp"
#include "sats/polygon.hpp"
#include "sats/pseudolabel.hpp"
#include "sats/random.hpp"

namespace {

sats::RgbImage noise_image(int size, std::uint64_t seed) {
  sats::Rng rng(seed);
  sats::RgbImage img(size, size);
  for (auto& b : img.bytes()) b = static_cast<std::uint8_t>(sats::uniform_int(rng, 0, 255));
  return img;
}

void BM_Forward(benchmark::State& state) {
  const int size = static_cast<int>(state.range(0));
  const auto params = sats::expand_head(sats::NetworkParams::initialize({}, 3, 1), 2);
  const auto img = noise_image(size, 3);
  for (auto _ : state) benchmark::DoNotOptimize(sats::forward(params, img));
  state.SetItemsProcessed(state.iterations() * size * size);
}
BENCHMARK(BM_Forward)->Arg(32)->Arg(64);

void BM_LossAndGrad(benchmark::State& state) {
  const int size = static_cast<int>(state.range(0));
  const auto params = sats::expand_head(sats::NetworkParams::initialize({}, 3, 1), 2);
  const auto img = noise_image(size, 4);
  sats::LabelMap label(size, size);
  sats::Rng rng(5);
  for (auto& v : label.values()) v = static_cast<std::uint8_t>(sats::uniform_int(rng, 0, 3));
  for (auto _ : state) benchmark::DoNotOptimize(sats::supervised_loss_and_grad(params, img, label));
  state.SetItemsProcessed(state.iterations() * size * size);
}
BENCHMARK(BM_LossAndGrad)->Arg(32)->Arg(64);

void BM_RasterizePolygon(benchmark::State& state) {
  const int size = static_cast<int>(state.range(0));
  sats::Rng rng(6);
  sats::VirtualUnknownConfig cfg;
  cfg.max_vertices = 12;
  const auto poly = sats::sample_polygon(rng, size, size, cfg);
  for (auto _ : state) benchmark::DoNotOptimize(sats::rasterize_polygon(poly, size, size));
}
BENCHMARK(BM_RasterizePolygon)->Arg(32)->Arg(64)->Arg(512);

void BM_SamplePolygon(benchmark::State& state) {
  sats::Rng rng(7);
  const sats::VirtualUnknownConfig cfg;
  for (auto _ : state) benchmark::DoNotOptimize(sats::sample_polygon(rng, 32, 32, cfg));
}
BENCHMARK(BM_SamplePolygon);

void BM_PseudoLabels(benchmark::State& state) {
  const auto params = sats::expand_head(sats::NetworkParams::initialize({}, 3, 1), 2);
  const auto probs = sats::forward(params, noise_image(64, 8));
  sats::ClassSpace cs;
  cs.num_known = 3;
  cs.num_private = 2;
  for (auto _ : state) {
    benchmark::DoNotOptimize(sats::open_set_pseudo_label(probs, cs, 0.5));
    benchmark::DoNotOptimize(sats::confidence_weight(probs, 0.968));
  }
}
BENCHMARK(BM_PseudoLabels);

}  // namespace

BENCHMARK_MAIN();

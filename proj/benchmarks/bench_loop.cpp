#include <benchmark/benchmark.h>

#include "mvs/moments.hpp"
#include "mvs/simworld.hpp"

namespace {

using namespace mvs;

void BM_RunTrial(benchmark::State& state) {
  Scenario sc;
  sc.controller = static_cast<ControllerKind>(state.range(0));
  sc.noise_std = Vec4(0.02, 0.02, 0.02, 0.05);
  sc.kf_enabled = true;
  sc.duration = 5.0;
  for (auto _ : state) benchmark::DoNotOptimize(run_trial(sc, {}, {}));
  state.SetLabel(std::string(to_string(sc.controller)));
}
BENCHMARK(BM_RunTrial)->DenseRange(0, 3)->Unit(benchmark::kMillisecond);

void BM_PolygonFeatures(benchmark::State& state) {
  const ConvexPolygon poly = ConvexPolygon::rectangle(0.3, 0.2, {0.05, -0.02}, 0.4);
  const double a_star = spread_area(polygon_moments(poly));
  for (auto _ : state) benchmark::DoNotOptimize(feature_vector(polygon_moments(poly), 1.0, a_star));
}
BENCHMARK(BM_PolygonFeatures);

void BM_RasterMoments(benchmark::State& state) {
  const auto n = static_cast<int>(state.range(0));
  const PixelGrid grid{{-0.5, -0.5}, 1.0 / n, n, n};
  const GrayImage img = rasterize(ConvexPolygon::rectangle(0.3, 0.2, {0.05, -0.02}, 0.4), grid);
  for (auto _ : state) benchmark::DoNotOptimize(central_moments(img));
}
BENCHMARK(BM_RasterMoments)->Arg(128)->Arg(512)->Unit(benchmark::kMicrosecond);

}  // namespace

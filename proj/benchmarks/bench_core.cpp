#include <benchmark/benchmark.h>

#include <memory>

#include "elcap/capacity.hpp"
#include "elcap/deformation.hpp"
#include "elcap/energy.hpp"

using namespace elcap;

namespace {

SetMask disk(const EulerianGrid& g, double r, SetKind kind) {
  return SetMask::from_predicate(g, kind, [r](const Vec& x) { return x.squaredNorm() < r * r; });
}

Deformation bumped(const std::string& name, int level) {
  const auto domain = std::make_shared<const ReferenceDomain>(demo::by_name(name, level));
  const int d = domain->dim();
  Bump b;
  b.center = Vec::Constant(d, 0.1);
  b.radius = 0.6;
  b.amplitude = 0.05;
  b.mode = Bump::Mode::Radial;
  return perturbed(Deformation(domain), b);
}

// annulus 0.25 < |x| < 1 at h = 1 / n
void BM_RelativeCapacity2D(benchmark::State& state) {
  const double h = 1.0 / static_cast<double>(state.range(0));
  const EulerianGrid g = EulerianGrid::covering(Vec::Constant(2, -1.0), Vec::Constant(2, 1.0), h);
  const SetMask E = disk(g, 0.25, SetKind::Compact);
  const SetMask D = disk(g, 1.0, SetKind::Open);
  for (auto _ : state) benchmark::DoNotOptimize(relative_capacity(E, D).value);
  state.SetItemsProcessed(state.iterations() * static_cast<long>(g.cell_count()));
}
BENCHMARK(BM_RelativeCapacity2D)->Arg(128)->Arg(256)->Arg(512)->Unit(benchmark::kMillisecond);

void BM_RelativeCapacity3D(benchmark::State& state) {
  const double h = 1.0 / static_cast<double>(state.range(0));
  const EulerianGrid g = EulerianGrid::covering(Vec::Constant(3, -1.0), Vec::Constant(3, 1.0), h);
  const SetMask E = disk(g, 0.5, SetKind::Compact);
  const SetMask D = disk(g, 1.0, SetKind::Open);
  for (auto _ : state) benchmark::DoNotOptimize(relative_capacity(E, D).value);
  state.SetItemsProcessed(state.iterations() * static_cast<long>(g.cell_count()));
}
BENCHMARK(BM_RelativeCapacity3D)->Arg(32)->Arg(64)->Unit(benchmark::kMillisecond);

void BM_ElasticGradient(benchmark::State& state) {
  const Deformation def = bumped("disk_in_disk", static_cast<int>(state.range(0)));
  const MaterialModel model = MaterialModel::standard(2);
  for (auto _ : state) benchmark::DoNotOptimize(elastic_gradient(def, model));
  state.SetItemsProcessed(state.iterations() * static_cast<long>(def.domain().element_count()));
}
BENCHMARK(BM_ElasticGradient)->Arg(1)->Arg(2)->Arg(3);

void BM_RasterizeImage(benchmark::State& state) {
  const Deformation def = bumped("disk_in_disk", 2);
  const double h = 1.0 / static_cast<double>(state.range(0));
  const EulerianGrid g = EulerianGrid::covering(Vec::Constant(2, -1.2), Vec::Constant(2, 1.2), h);
  for (auto _ : state) benchmark::DoNotOptimize(rasterize_image(def, ImageRegion::WholeDomain, g));
}
BENCHMARK(BM_RasterizeImage)->Arg(128)->Arg(256);

void BM_EvaluateEnergyF2(benchmark::State& state) {
  const Deformation def = bumped("disk_in_disk", 1);
  const MaterialModel model = MaterialModel::standard(2);
  const EulerianGrid g = EulerianGrid::covering(Vec::Constant(2, -1.2), Vec::Constant(2, 1.2), 1.0 / 64.0);
  for (auto _ : state) benchmark::DoNotOptimize(total_energy(def, model, 1.0, FunctionalKind::F2, g).total);
}
BENCHMARK(BM_EvaluateEnergyF2)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();

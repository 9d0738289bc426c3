#include <benchmark/benchmark.h>

#include "rldp/control_stop.hpp"
#include "rldp/hjbvi.hpp"
#include "rldp/rate.hpp"
#include "rldp/testfn.hpp"

using namespace rldp;

namespace {

Domain unit_disk() { return Domain::disk(vec2(0, 0), 1.0); }

void BM_ReflectStepOblique(benchmark::State& state) {
  Domain D = unit_disk();
  auto field = ObliqueField::normal_plus_tangent(D, 0.5);
  Vec p = vec2(1.05, 0.3);
  for (auto _ : state) benchmark::DoNotOptimize(reflect_step(D, field, p));
}
BENCHMARK(BM_ReflectStepOblique);

void BM_SimulatePathDisk(benchmark::State& state) {
  Domain D = unit_disk();
  auto field = ObliqueField::normal_plus_tangent(D, 0.5);
  auto coeffs = CoefficientField::constant(vec2(1, 0.5), Mat::Identity(2, 2));
  TimeGrid g = TimeGrid::uniform(0, 1, static_cast<int>(state.range(0)));
  std::uint64_t j = 0;
  for (auto _ : state) benchmark::DoNotOptimize(simulate_reflected_sde(D, field, coeffs, NoiseScale(0.5), 0, vec2(0, 0), g, 1, j++));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_SimulatePathDisk)->Arg(500)->Arg(2000);

void BM_EstimateTube1d(benchmark::State& state) {
  Domain I = Domain::interval(-1, 1);
  auto f = ObliqueField::normal(I);
  auto c = CoefficientField::constant(vec1(0), Mat::Identity(1, 1));
  TimeGrid g = TimeGrid::uniform(0, 1, 1000);
  auto ev = EventSpec::ball(ReferencePath::constant(vec1(0), 0, 1), 0.5);
  for (auto _ : state)
    benchmark::DoNotOptimize(estimate_event_probability(I, f, c, NoiseScale(0.25), 0, vec1(0), g, ev, 4000, 3, 1));
  state.SetItemsProcessed(state.iterations() * 4000);
}
BENCHMARK(BM_EstimateTube1d)->Unit(benchmark::kMillisecond);

void BM_PicardDisk(benchmark::State& state) {
  Domain D = unit_disk();
  auto field = ObliqueField::normal(D);
  auto coeffs = CoefficientField::constant(vec2(2, 0), Mat::Zero(2, 2));
  TimeGrid g = TimeGrid::uniform(0, 1, 512);
  for (auto _ : state)
    benchmark::DoNotOptimize(solve_skorokhod_picard(D, field, coeffs, Control::zero(g, 2), 0, vec2(0, 0), g, 1e-9));
}
BENCHMARK(BM_PicardDisk)->Unit(benchmark::kMillisecond);

void BM_RateOfExit(benchmark::State& state) {
  Domain I = Domain::interval(-1, 1);
  auto f = ObliqueField::normal(I);
  auto c = CoefficientField::constant(vec1(0), Mat::Identity(1, 1));
  auto ev = EventSpec::complements({ReferencePath::constant(vec1(0), 0, 1)}, {0.5});
  RateOptions o;
  o.segments = 32;
  o.refine = false;
  for (auto _ : state) benchmark::DoNotOptimize(rate_of_event(I, f, c, 0, vec1(0), ev, 1, 1e-4, o));
}
BENCHMARK(BM_RateOfExit)->Unit(benchmark::kMillisecond);

void BM_ReducedValue(benchmark::State& state) {
  DiscreteProblem p;
  p.grid = TimeGrid::uniform(0, 1, static_cast<int>(state.range(0)));
  p.control_set = default_control_set(1, {0.5, 1.0});
  double h = p.grid.dt(0);
  p.state_rule = [h](int, const Vec& x, const Vec& a) { return vec1(x(0) + a(0) * h); };
  for (int i = 0; i < 3; ++i) p.obstacles.push_back([i](double t, const Vec& x) { return (i + 1) * std::abs(x(0)) - t; });
  for (auto _ : state) benchmark::DoNotOptimize(reduced_value(p, 0, vec1(0)));
}
BENCHMARK(BM_ReducedValue)->Arg(4)->Arg(6)->Unit(benchmark::kMillisecond);

void BM_EpsVi1d(benchmark::State& state) {
  Domain I = Domain::interval(-1, 1);
  auto f = ObliqueField::normal(I);
  auto c = CoefficientField::constant(vec1(0), Mat::Identity(1, 1));
  auto tube = EventSpec::ball(ReferencePath::constant(vec1(0), 0, 1), 0.5);
  GridParams gp;
  gp.cells = static_cast<int>(state.range(0));
  Obstacle ob = tube_obstacle(tube, 0, 1.0, false, grid_cell_size(I, gp));
  auto term = [&](const Vec& x) { return ob(1.0, x); };
  for (auto _ : state)
    benchmark::DoNotOptimize(solve_eps_vi(I, f, c, ob, NoiseScale(0.25), ViType::max_type, term, gp));
}
BENCHMARK(BM_EpsVi1d)->Arg(100)->Arg(200)->Unit(benchmark::kMillisecond);

void BM_EpsVi2dDisk(benchmark::State& state) {
  Domain D = unit_disk();
  auto f = ObliqueField::normal_plus_tangent(D, 0.5);
  auto c = CoefficientField::constant(vec2(1, 0), Mat::Identity(2, 2));
  auto tube = EventSpec::ball(ReferencePath::constant(vec2(0, 0), 0, 1), 0.5);
  GridParams gp;
  gp.cells = static_cast<int>(state.range(0));
  Obstacle ob = tube_obstacle(tube, 0, 1.0, true, grid_cell_size(D, gp));
  auto term = [&](const Vec& x) { return ob(1.0, x); };
  for (auto _ : state)
    benchmark::DoNotOptimize(solve_eps_vi(D, f, c, ob, NoiseScale(0.35), ViType::min_type, term, gp));
}
BENCHMARK(BM_EpsVi2dDisk)->Arg(30)->Unit(benchmark::kMillisecond);

void BM_TestFnCheck(benchmark::State& state) {
  Domain D = unit_disk();
  auto tf = build_testfn(D, ObliqueField::normal_plus_tangent(D, 0.5), 0.5, 0.5);
  for (auto _ : state) benchmark::DoNotOptimize(check_testfn_properties(tf, 256));
}
BENCHMARK(BM_TestFnCheck)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();

#include <benchmark/benchmark.h>

#include "layoutkit/example/event.hpp"
#include "layoutkit/example/kernels.hpp"
#include "layoutkit/example/reconstruct.hpp"

namespace lx = layoutkit::example;

namespace {

lx::Event event_for(std::int64_t side) {
  return lx::generate_event({static_cast<std::uint32_t>(side), static_cast<std::uint32_t>(side), 7, lx::kHighDensity});
}

layoutkit::Collection sensors_in(const layoutkit::LayoutSpec& spec, const lx::Event& ev) {
  layoutkit::Collection c(lx::sensor_schema(), spec);
  layoutkit::import_external(c, ev.sensors, lx::sensor_binding());
  return c;
}

template <bool Parallel>
void calibrate_soa(benchmark::State& state) {
  const auto ev = event_for(state.range(0));
  lx::SensorSoA soa;
  soa.assign(ev.sensors);
  for (auto _ : state) {
    if constexpr (Parallel) {
      lx::calibrate_parallel(soa.size(), soa.counts, soa.parameter_A, soa.parameter_B, soa.energy);
    } else {
      lx::calibrate_serial(soa.size(), soa.counts, soa.parameter_A, soa.parameter_B, soa.energy);
    }
    benchmark::DoNotOptimize(soa.energy.data());
  }
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(soa.size()));
}

void calibrate_collection(benchmark::State& state, layoutkit::LayoutSpec spec, bool parallel) {
  const auto ev = event_for(state.range(0));
  auto c = sensors_in(spec, ev);
  const auto counts = c.get_collection<std::uint64_t>("counts");
  const auto a = c.get_collection<float>("calibration_data.parameter_A");
  const auto b = c.get_collection<float>("calibration_data.parameter_B");
  auto energy = c.get_collection<float>("energy");
  for (auto _ : state) {
    if (parallel) {
      lx::calibrate_parallel(c.size(), counts, a, b, energy);
    } else {
      lx::calibrate_serial(c.size(), counts, a, b, energy);
    }
    benchmark::DoNotOptimize(energy.base());
  }
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(c.size()));
}

template <bool Parallel>
void ratio_soa(benchmark::State& state) {
  auto ev = event_for(state.range(0));
  lx::SensorSoA soa;
  soa.assign(ev.sensors);
  soa.calibrate();
  std::vector<float> ratio(soa.size());
  for (auto _ : state) {
    if constexpr (Parallel) {
      lx::ratio_parallel(soa.size(), soa.energy, soa.noise_A, soa.noise_B, soa.noisy, ratio);
    } else {
      lx::ratio_serial(soa.size(), soa.energy, soa.noise_A, soa.noise_B, soa.noisy, ratio);
    }
    benchmark::DoNotOptimize(ratio.data());
  }
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(soa.size()));
}

void reconstruct_handwritten_soa(benchmark::State& state) {
  const auto ev = event_for(state.range(0));
  lx::SensorSoA soa;
  soa.assign(ev.sensors);
  soa.calibrate();
  lx::ParticleSoA out;
  const auto side = static_cast<std::uint32_t>(state.range(0));
  for (auto _ : state) {
    lx::reconstruct_soa(soa, side, side, out);
    benchmark::DoNotOptimize(out.energy.data());
  }
}

void reconstruct_collection(benchmark::State& state, layoutkit::LayoutSpec spec) {
  const auto ev = event_for(state.range(0));
  auto c = sensors_in(spec, ev);
  layoutkit::call_behavior(lx::kSensorFuncs, "calibrate_energy", c);
  layoutkit::Collection out(lx::particle_schema(), spec.kind == layoutkit::LayoutKind::Arena
                                                       ? layoutkit::LayoutSpec::per_field()
                                                       : spec);
  const auto side = static_cast<std::uint32_t>(state.range(0));
  for (auto _ : state) {
    lx::reconstruct(c, side, side, out);
    benchmark::DoNotOptimize(out.size());
  }
}

}  // namespace

BENCHMARK(calibrate_soa<false>)->Arg(128)->Arg(512);
BENCHMARK(calibrate_soa<true>)->Arg(128)->Arg(512);
BENCHMARK_CAPTURE(calibrate_collection, per_field_serial, layoutkit::LayoutSpec::per_field(), false)->Arg(128)->Arg(512);
BENCHMARK_CAPTURE(calibrate_collection, per_field_parallel, layoutkit::LayoutSpec::per_field(), true)->Arg(128)->Arg(512);
BENCHMARK_CAPTURE(calibrate_collection, aos_serial, layoutkit::LayoutSpec::aos(), false)->Arg(128)->Arg(512);
BENCHMARK_CAPTURE(calibrate_collection, aos_parallel, layoutkit::LayoutSpec::aos(), true)->Arg(128)->Arg(512);
BENCHMARK(ratio_soa<false>)->Arg(512);
BENCHMARK(ratio_soa<true>)->Arg(512);
BENCHMARK(reconstruct_handwritten_soa)->Arg(128)->Arg(512);
BENCHMARK_CAPTURE(reconstruct_collection, per_field, layoutkit::LayoutSpec::per_field())->Arg(128)->Arg(512);
BENCHMARK_CAPTURE(reconstruct_collection, aos, layoutkit::LayoutSpec::aos())->Arg(128)->Arg(512);

BENCHMARK_MAIN();

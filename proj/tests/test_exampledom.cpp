#include <gtest/gtest.h>

#include <filesystem>
#include <set>

#include "layoutkit/behavior.hpp"
#include "layoutkit/example/event.hpp"
#include "layoutkit/example/kernels.hpp"
#include "layoutkit/example/reconstruct.hpp"

using namespace layoutkit;
using namespace layoutkit::example;

namespace {

std::vector<Sensor> calibrated(std::vector<Sensor> sensors) {
  for (auto& s : sensors) s.calibrate_energy();
  return sensors;
}

std::vector<LayoutSpec> specs(std::uint64_t sensors, std::uint64_t particles, std::uint64_t members) {
  ArenaSpec s;
  s.capacities["main"] = sensors;
  ArenaSpec p;
  p.capacities["main"] = particles;
  p.capacities["sensors"] = members;
  return {LayoutSpec::per_field(), LayoutSpec::single_block(s), LayoutSpec::single_block(p), LayoutSpec::aos()};
}

/// Grid with unit noise and energy equal to counts.
std::vector<Sensor> quiet_grid(std::uint32_t w, std::uint32_t h) {
  std::vector<Sensor> g(std::size_t{w} * h);
  for (auto& s : g) s.calibration_data = CalibrationData{false, 1.0f, 0.0f, 0.0f, 1.0f};
  return g;
}

}  // namespace

TEST(ExampleDomain, CalibrationFormula) {
  Sensor s;
  s.counts = 100;
  s.calibration_data.parameter_A = 0.5f;
  s.calibration_data.parameter_B = 2.0f;
  s.calibrate_energy();
  EXPECT_EQ(s.energy, 52.0f);
  s.counts = 0;
  s.calibration_data.parameter_B = 0.0f;
  s.calibrate_energy();
  EXPECT_EQ(s.energy, 0.0f);
}

TEST(ExampleDomain, NoiseLevel) {
  Sensor s;
  s.energy = 0.0f;
  s.calibration_data.noise_B = 0.1f;
  EXPECT_EQ(s.get_noise(), 0.1f);
  s.calibration_data.noisy = true;
  EXPECT_EQ(s.get_noise(), 0.2f);
  s.energy = 4.0f;
  s.calibration_data = CalibrationData{false, 0.0f, 0.0f, 0.5f, 1.0f};
  EXPECT_EQ(s.get_noise(), 2.0f);
  s.energy = -9.0f;
  EXPECT_EQ(s.get_noise(), 1.0f);
}

TEST(ExampleDomain, DensityParsing) {
  EXPECT_EQ(parse_density("low"), kLowDensity);
  EXPECT_EQ(parse_density("high"), kHighDensity);
  EXPECT_EQ(parse_density("0.5"), 0.5f);
  EXPECT_THROW(parse_density("-1"), Error);
  EXPECT_THROW(parse_density("lots"), Error);
  EXPECT_THROW(parse_density("1x"), Error);
}

TEST(ExampleDomain, GeneratorIsDeterministic) {
  const EventSpec spec{32, 16, 99, kHighDensity};
  EXPECT_EQ(generate_event(spec), generate_event(spec));
  EXPECT_NE(generate_event(spec).sensors, generate_event(EventSpec{32, 16, 100, kHighDensity}).sensors);
  EXPECT_EQ(generate_event(spec).sensors.size(), 32u * 16u);
  EXPECT_THROW(generate_event(EventSpec{0, 4, 1, 0.0f}), Error);
}

TEST(ExampleDomain, TinyAndEmptyEvents) {
  const Event one = generate_event(EventSpec{1, 1, 5, kHighDensity});
  ASSERT_EQ(one.sensors.size(), 1u);
  EXPECT_NO_THROW(reconstruct_aos(calibrated(one.sensors), 1, 1));

  const Event empty = generate_event(EventSpec{64, 64, 5, 0.0f});
  EXPECT_TRUE(reconstruct_aos(calibrated(empty.sensors), 64, 64).empty());
  EXPECT_THROW(reconstruct_aos(calibrated(empty.sensors), 64, 32), Error);
}

TEST(ExampleDomain, SingleDepositConservesEnergy) {
  auto grid = quiet_grid(9, 9);
  const std::uint64_t blob[3][3] = {{3, 4, 3}, {4, 12, 4}, {3, 4, 3}};
  std::set<std::uint64_t> expected;
  float total = 0.0f;
  for (std::uint32_t dy = 0; dy < 3; ++dy) {
    for (std::uint32_t dx = 0; dx < 3; ++dx) {
      const std::uint64_t idx = (3 + dy) * 9 + (3 + dx);
      grid[idx].counts = blob[dy][dx];
      expected.insert(idx);
      total += static_cast<float>(blob[dy][dx]);
    }
  }
  grid[0].counts = 2;
  const auto particles = reconstruct_aos(calibrated(grid), 9, 9);
  ASSERT_EQ(particles.size(), 1u);
  const Particle& p = particles[0];
  EXPECT_EQ(p.origin, 4u * 9 + 4);
  EXPECT_EQ(std::set<std::uint64_t>(p.sensors.begin(), p.sensors.end()), expected);
  EXPECT_EQ(p.energy, total);
  EXPECT_EQ(p.E_contribution[0], total);
  EXPECT_FLOAT_EQ(p.x, 4.0f);
  EXPECT_FLOAT_EQ(p.y, 4.0f);
  EXPECT_FLOAT_EQ(p.x_variance, (2.0f * 10.0f) / total);
  EXPECT_EQ(p.noisy_count[0], 0u);
}

TEST(ExampleDomain, ParticlesPartitionSensors) {
  const Event ev = generate_event(EventSpec{64, 64, 7, kHighDensity});
  const auto sensors = calibrated(ev.sensors);
  const auto particles = reconstruct_aos(sensors, 64, 64);
  ASSERT_FALSE(particles.empty());
  std::set<std::uint64_t> seen;
  for (const auto& p : particles) {
    EXPECT_GT(sensors[p.origin].energy / sensors[p.origin].get_noise(), kSeedRatio);
    for (std::uint64_t idx : p.sensors) {
      EXPECT_TRUE(seen.insert(idx).second) << "sensor " << idx << " claimed twice";
      EXPECT_GT(sensors[idx].energy / sensors[idx].get_noise(), kContributorRatio);
      const auto dx = static_cast<std::int64_t>(idx % 64) - static_cast<std::int64_t>(p.origin % 64);
      const auto dy = static_cast<std::int64_t>(idx / 64) - static_cast<std::int64_t>(p.origin / 64);
      EXPECT_LE(std::abs(dx), kWindowRadius);
      EXPECT_LE(std::abs(dy), kWindowRadius);
    }
  }
}

TEST(ExampleDomain, SerialAndParallelKernelsAgree) {
  const Event ev = generate_event(EventSpec{128, 64, 3, kHighDensity});
  SensorSoA soa;
  soa.assign(ev.sensors);
  const std::size_t n = soa.size();
  std::vector<float> e1(n), e2(n), r1(n), r2(n);
  calibrate_serial(n, soa.counts, soa.parameter_A, soa.parameter_B, e1);
  calibrate_parallel(n, soa.counts, soa.parameter_A, soa.parameter_B, e2);
  EXPECT_EQ(e1, e2);
  ratio_serial(n, e1, soa.noise_A, soa.noise_B, soa.noisy, r1);
  ratio_parallel(n, e1, soa.noise_A, soa.noise_B, soa.noisy, r2);
  EXPECT_EQ(0, std::memcmp(r1.data(), r2.data(), n * sizeof(float)));

  soa.calibrate();
  EXPECT_EQ(soa.energy, e1);
  const auto records = calibrated(ev.sensors);
  for (std::size_t i = 0; i < n; ++i) ASSERT_EQ(records[i].energy, e1[i]);

  for (const auto& spec : specs(n, 1, 1)) {
    if (spec.kind == LayoutKind::Arena && spec.arena.capacities.count("sensors") != 0) continue;
    Collection a(sensor_schema(), spec);
    Collection b(sensor_schema(), spec);
    import_external(a, ev.sensors, sensor_binding());
    import_external(b, ev.sensors, sensor_binding());
    call_behavior(kSensorFuncs, "calibrate_energy", a);
    call_behavior(kSensorFuncs, "calibrate_energy_parallel", b);
    EXPECT_EQ(export_external(a, sensor_binding()), records);
    EXPECT_EQ(export_external(b, sensor_binding()), records);
  }
}

TEST(ExampleDomain, EventEncoding) {
  const Event ev = generate_event(EventSpec{20, 10, 8, 0.5f});
  const auto bytes = encode_event(ev);
  EXPECT_EQ(decode_event(bytes), ev);
  auto bad = bytes;
  bad[0] = 'X';
  EXPECT_THROW(decode_event(bad), Error);
  auto truncated = bytes;
  truncated.resize(truncated.size() - 3);
  EXPECT_THROW(decode_event(truncated), Error);

  const auto path = std::filesystem::temp_directory_path() / "layoutkit_event_test.lkev";
  save_event(ev, path.string());
  EXPECT_EQ(load_event(path.string()), ev);
  std::filesystem::remove(path);
}

TEST(ExampleDomain, ReconstructionAgreesAcrossStorage) {
  for (std::uint64_t seed : {1u, 2u, 3u}) {
    const Event ev = generate_event(EventSpec{48, 40, seed, kHighDensity});
    const auto sensors = calibrated(ev.sensors);
    const auto reference = reconstruct_aos(sensors, 48, 40);

    SensorSoA soa;
    soa.assign(sensors);
    ParticleSoA psoa;
    reconstruct_soa(soa, 48, 40, psoa);
    std::vector<Particle> from_soa;
    psoa.to_records(from_soa);
    EXPECT_EQ(from_soa, reference);

    const auto all = specs(sensors.size(), 4096, 65536);
    for (const LayoutSpec& sspec : {all[0], all[1], all[3]}) {
      for (const LayoutSpec& pspec : {all[0], all[2], all[3]}) {
        Collection s(sensor_schema(), sspec);
        import_external(s, sensors, sensor_record_binding());
        Collection p(particle_schema(), pspec);
        reconstruct(s, 48, 40, p);
        p.check_invariants();
        EXPECT_EQ(export_external(p, particle_binding()), reference)
            << to_string(sspec.kind) << "/" << to_string(pspec.kind);
      }
    }
  }
}

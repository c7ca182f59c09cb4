#include "layoutkit/example/domain.hpp"

#include "layoutkit/example/kernels.hpp"

namespace layoutkit::example {

namespace {

struct SensorColumns {
  Column<const std::uint64_t> counts;
  Column<const float> a;
  Column<const float> b;
  Column<float> energy;

  explicit SensorColumns(Collection& c)
      : counts(c.get_collection<std::uint64_t>("counts")),
        a(c.get_collection<float>("calibration_data.parameter_A")),
        b(c.get_collection<float>("calibration_data.parameter_B")),
        energy(c.get_collection<float>("energy")) {}

  bool dense() const {
    return counts.row_stride() == 1 && a.row_stride() == 1 && b.row_stride() == 1 && energy.row_stride() == 1;
  }

  template <class Kernel>
  void run(Kernel&& kernel) const {
    if (dense()) {
      kernel(counts.base(), a.base(), b.base(), energy.base());
    } else {
      kernel(counts, a, b, energy);
    }
  }
};

BehaviorBundle sensor_functions() {
  BehaviorBundle b;
  b.id = kSensorFuncs;
  b.object_functions["calibrate_energy"] = [](ObjectView& s, std::span<const BehaviorValue>) -> BehaviorValue {
    s.get<float>("energy") = calibrated_energy(s.get<std::uint64_t>("counts"),
                                               s.get<float>("calibration_data.parameter_A"),
                                               s.get<float>("calibration_data.parameter_B"));
    return {};
  };
  b.object_functions["get_noise"] = [](ObjectView& s, std::span<const BehaviorValue>) -> BehaviorValue {
    const ConstObjectView v = s;
    return noise_level(v.get<float>("energy"), v.get<float>("calibration_data.noise_A"),
                       v.get<float>("calibration_data.noise_B"), v.get<bool>("calibration_data.noisy"));
  };
  b.collection_functions["calibrate_energy"] = [](Collection& c, std::span<const BehaviorValue>) -> BehaviorValue {
    const std::size_t n = c.size();
    SensorColumns(c).run([n](const auto& counts, const auto& a, const auto& b, const auto& energy) {
      calibrate_serial(n, counts, a, b, energy);
    });
    return {};
  };
  b.collection_functions["calibrate_energy_parallel"] = [](Collection& c,
                                                           std::span<const BehaviorValue>) -> BehaviorValue {
    const std::size_t n = c.size();
    SensorColumns(c).run([n](const auto& counts, const auto& a, const auto& b, const auto& energy) {
      calibrate_parallel(n, counts, a, b, energy);
    });
    return {};
  };
  return b;
}

}  // namespace

void register_sensor_functions() { BehaviorRegistry::global().ensure_registered(sensor_functions()); }

Schema sensor_schema() {
  register_sensor_functions();
  return Schema("Sensor", {
                              declare_per_item("type", ScalarType::enumeration("SensorType", kSensorTypes)),
                              declare_per_item("counts", ScalarKind::U64),
                              declare_per_item("energy", ScalarKind::F32),
                              declare_subgroup("calibration_data",
                                               {
                                                   declare_per_item("noisy", ScalarKind::Bool),
                                                   declare_per_item("parameter_A", ScalarKind::F32),
                                                   declare_per_item("parameter_B", ScalarKind::F32),
                                                   declare_per_item("noise_A", ScalarKind::F32),
                                                   declare_per_item("noise_B", ScalarKind::F32),
                                               }),
                              declare_behavior("sensor_funcs", kSensorFuncs),
                          });
}

Schema particle_schema() {
  return Schema("Particle", {
                                declare_per_item("energy", ScalarKind::F32),
                                declare_per_item("x", ScalarKind::F32),
                                declare_per_item("y", ScalarKind::F32),
                                declare_per_item("origin", ScalarKind::U64),
                                declare_simple_jagged("sensors", ScalarKind::I32, ScalarKind::U64),
                                declare_per_item("x_variance", ScalarKind::F32),
                                declare_per_item("y_variance", ScalarKind::F32),
                                declare_simple_array("significance", kSensorTypes, ScalarKind::F32),
                                declare_simple_array("E_contribution", kSensorTypes, ScalarKind::F32),
                                declare_simple_array("noisy_count", kSensorTypes, ScalarKind::U8),
                            });
}

const ExternalBinding<Sensor>& sensor_binding() { return sensor_record_binding().dynamic(); }

const ExternalBinding<Particle>& particle_binding() {
  static const ExternalBinding<Particle> binding = [] {
    ExternalBinding<Particle> b;
    b.bind("energy", &Particle::energy);
    b.bind("x", &Particle::x);
    b.bind("y", &Particle::y);
    b.bind("origin", &Particle::origin);
    b.bind_jagged("sensors", &Particle::sensors);
    b.bind("x_variance", &Particle::x_variance);
    b.bind("y_variance", &Particle::y_variance);
    b.bind_array("significance.value", &Particle::significance);
    b.bind_array("E_contribution.value", &Particle::E_contribution);
    b.bind_array("noisy_count.value", &Particle::noisy_count);
    return b;
  }();
  return binding;
}

void SensorSoA::assign(const std::vector<Sensor>& sensors) {
  const std::size_t n = sensors.size();
  type.resize(n);
  counts.resize(n);
  energy.resize(n);
  noisy.resize(n);
  parameter_A.resize(n);
  parameter_B.resize(n);
  noise_A.resize(n);
  noise_B.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    const Sensor& s = sensors[i];
    type[i] = s.type;
    counts[i] = s.counts;
    energy[i] = s.energy;
    noisy[i] = s.calibration_data.noisy ? 1 : 0;
    parameter_A[i] = s.calibration_data.parameter_A;
    parameter_B[i] = s.calibration_data.parameter_B;
    noise_A[i] = s.calibration_data.noise_A;
    noise_B[i] = s.calibration_data.noise_B;
  }
}

void SensorSoA::calibrate() {
  for (std::size_t i = 0; i < size(); ++i) energy[i] = calibrated_energy(counts[i], parameter_A[i], parameter_B[i]);
}

void ParticleSoA::clear() {
  energy.clear();
  x.clear();
  y.clear();
  origin.clear();
  sensor_offsets.assign(1, 0);
  sensors.clear();
  x_variance.clear();
  y_variance.clear();
  for (std::size_t t = 0; t < kSensorTypes; ++t) {
    significance[t].clear();
    E_contribution[t].clear();
    noisy_count[t].clear();
  }
}

void ParticleSoA::to_records(std::vector<Particle>& out) const {
  out.resize(size());
  for (std::size_t i = 0; i < size(); ++i) {
    Particle& p = out[i];
    p.energy = energy[i];
    p.x = x[i];
    p.y = y[i];
    p.origin = origin[i];
    p.sensors.assign(sensors.begin() + sensor_offsets[i], sensors.begin() + sensor_offsets[i + 1]);
    p.x_variance = x_variance[i];
    p.y_variance = y_variance[i];
    for (std::size_t t = 0; t < kSensorTypes; ++t) {
      p.significance[t] = significance[t][i];
      p.E_contribution[t] = E_contribution[t][i];
      p.noisy_count[t] = noisy_count[t][i];
    }
  }
}

}  // namespace layoutkit::example

#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <vector>

#include "layoutkit/collection.hpp"
#include "layoutkit/external.hpp"
#include "layoutkit/schema.hpp"

namespace layoutkit::example {

enum class SensorType : std::uint8_t { A, B, C, D };
inline constexpr std::size_t kSensorTypes = 4;

struct CalibrationData {
  bool noisy = false;
  float parameter_A = 0.0f;
  float parameter_B = 0.0f;
  float noise_A = 0.0f;
  float noise_B = 0.0f;

  friend bool operator==(const CalibrationData&, const CalibrationData&) = default;
};

/// Calibrated energy from raw counts, evaluated in single precision.
inline float calibrated_energy(std::uint64_t counts, float parameter_A, float parameter_B) {
  return parameter_A * static_cast<float>(counts) + parameter_B;
}

inline float noise_level(float energy, float noise_A, float noise_B, bool noisy) {
  const float n = noise_A * std::sqrt(std::max(energy, 0.0f)) + noise_B;
  return noisy ? n * 2.0f : n;
}

/// The handwritten record; its memory layout matches the interleaved
/// layout's record for sensor_schema().
struct Sensor {
  SensorType type = SensorType::A;
  std::uint64_t counts = 0;
  float energy = 0.0f;
  CalibrationData calibration_data;

  void calibrate_energy() {
    energy = calibrated_energy(counts, calibration_data.parameter_A, calibration_data.parameter_B);
  }
  float get_noise() const {
    return noise_level(energy, calibration_data.noise_A, calibration_data.noise_B, calibration_data.noisy);
  }

  friend bool operator==(const Sensor&, const Sensor&) = default;
};

struct Particle {
  float energy = 0.0f;
  float x = 0.0f;
  float y = 0.0f;
  std::uint64_t origin = 0;
  std::vector<std::uint64_t> sensors;
  float x_variance = 0.0f;
  float y_variance = 0.0f;
  std::array<float, kSensorTypes> significance{};
  std::array<float, kSensorTypes> E_contribution{};
  std::array<std::uint8_t, kSensorTypes> noisy_count{};

  friend bool operator==(const Particle&, const Particle&) = default;
};

inline constexpr const char* kSensorFuncs = "SensorFuncs";

/// Registers the SensorFuncs bundle (idempotent):
///   object:     calibrate_energy(), get_noise() -> f32
///   collection: calibrate_energy(), calibrate_energy_parallel()
void register_sensor_functions();

Schema sensor_schema();
Schema particle_schema();

/// Sensor binding as a RecordBinding; import and export make one pass over the records.
inline const auto& sensor_record_binding() {
  static const auto binding = make_record_binding<Sensor>(
      member("type", &Sensor::type), member("counts", &Sensor::counts), member("energy", &Sensor::energy),
      member("calibration_data.noisy", &Sensor::calibration_data, &CalibrationData::noisy),
      member("calibration_data.parameter_A", &Sensor::calibration_data, &CalibrationData::parameter_A),
      member("calibration_data.parameter_B", &Sensor::calibration_data, &CalibrationData::parameter_B),
      member("calibration_data.noise_A", &Sensor::calibration_data, &CalibrationData::noise_A),
      member("calibration_data.noise_B", &Sensor::calibration_data, &CalibrationData::noise_B));
  return binding;
}

const ExternalBinding<Sensor>& sensor_binding();
const ExternalBinding<Particle>& particle_binding();

/// Handwritten structure-of-arrays forms.
struct SensorSoA {
  std::vector<SensorType> type;
  std::vector<std::uint64_t> counts;
  std::vector<float> energy;
  std::vector<std::uint8_t> noisy;
  std::vector<float> parameter_A;
  std::vector<float> parameter_B;
  std::vector<float> noise_A;
  std::vector<float> noise_B;

  std::size_t size() const { return type.size(); }
  void assign(const std::vector<Sensor>& sensors);
  void calibrate();
};

struct ParticleSoA {
  std::vector<float> energy;
  std::vector<float> x;
  std::vector<float> y;
  std::vector<std::uint64_t> origin;
  std::vector<std::int32_t> sensor_offsets{0};
  std::vector<std::uint64_t> sensors;
  std::vector<float> x_variance;
  std::vector<float> y_variance;
  std::array<std::vector<float>, kSensorTypes> significance;
  std::array<std::vector<float>, kSensorTypes> E_contribution;
  std::array<std::vector<std::uint8_t>, kSensorTypes> noisy_count;

  std::size_t size() const { return energy.size(); }
  void clear();
  void to_records(std::vector<Particle>& out) const;
};

}  // namespace layoutkit::example

#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "layoutkit/example/domain.hpp"

namespace layoutkit::example {

inline constexpr float kLowDensity = 0.05f;
inline constexpr float kHighDensity = 1.0f;

/// Deposits per 100 sensors is `density`.
struct EventSpec {
  std::uint32_t grid_width = 1;
  std::uint32_t grid_height = 1;
  std::uint64_t seed = 0;
  float density = 0.0f;

  friend bool operator==(const EventSpec&, const EventSpec&) = default;
};

struct Event {
  EventSpec spec;
  std::vector<Sensor> sensors;  // row-major, energy not yet calibrated

  friend bool operator==(const Event&, const Event&) = default;
};

class SplitMix64 {
 public:
  explicit SplitMix64(std::uint64_t seed) : state_(seed) {}
  std::uint64_t next() {
    std::uint64_t z = (state_ += 0x9E3779B97F4A7C15ull);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
  }
  /// Uniform in [0, 1) with 24 bits of precision.
  float uniform() { return static_cast<float>(next() >> 40) * 0x1.0p-24f; }
  std::uint64_t below(std::uint64_t n) { return next() % n; }

 private:
  std::uint64_t state_;
};

/// Parses "low", "high" or a number.
float parse_density(const std::string& text);

Event generate_event(const EventSpec& spec);

/// Little-endian binary form: "LKEV", version, dims, seed, density, then
/// one array per sensor field.
void save_event(const Event& event, const std::string& path);
Event load_event(const std::string& path);
std::vector<std::uint8_t> encode_event(const Event& event);
Event decode_event(const std::vector<std::uint8_t>& bytes);

}  // namespace layoutkit::example

#pragma once

#include <cstdint>
#include <vector>

#include "layoutkit/collection.hpp"
#include "layoutkit/example/domain.hpp"

namespace layoutkit::example {

inline constexpr float kSeedRatio = 5.0f;
inline constexpr float kContributorRatio = 2.0f;
inline constexpr std::int64_t kWindowRadius = 2;

/// Reference implementation over handwritten records. Energies must be
/// calibrated.
std::vector<Particle> reconstruct_aos(const std::vector<Sensor>& sensors, std::uint32_t width, std::uint32_t height);

/// Same algorithm over handwritten structure-of-arrays storage.
void reconstruct_soa(const SensorSoA& sensors, std::uint32_t width, std::uint32_t height, ParticleSoA& out);

/// Same algorithm written once against the generic collection interface.
/// `particles` must use particle_schema(); its previous contents are replaced.
void reconstruct(const Collection& sensors, std::uint32_t width, std::uint32_t height, Collection& particles);

}  // namespace layoutkit::example

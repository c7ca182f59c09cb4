#pragma once

#include <cstddef>
#include <cstdint>

#include "layoutkit/example/domain.hpp"

namespace layoutkit::example {

// Element-wise kernels over anything indexable with operator[]: std::vector,
// Column, raw pointers. Each has a serial reference and an OpenMP variant
// that must produce bit-identical results.

template <class Counts, class ParamA, class ParamB, class Energy>
void calibrate_serial(std::size_t n, const Counts& counts, const ParamA& a, const ParamB& b, Energy&& energy) {
  for (std::size_t i = 0; i < n; ++i) energy[i] = calibrated_energy(counts[i], a[i], b[i]);
}

template <class Counts, class ParamA, class ParamB, class Energy>
void calibrate_parallel(std::size_t n, const Counts& counts, const ParamA& a, const ParamB& b, Energy&& energy) {
  const auto count = static_cast<std::int64_t>(n);
#pragma omp parallel for schedule(static)
  for (std::int64_t i = 0; i < count; ++i) {
    const auto k = static_cast<std::size_t>(i);
    energy[k] = calibrated_energy(counts[k], a[k], b[k]);
  }
}

/// Signal-to-noise ratio of every sensor.
template <class Energy, class NoiseA, class NoiseB, class Noisy, class Ratio>
void ratio_serial(std::size_t n, const Energy& e, const NoiseA& na, const NoiseB& nb, const Noisy& noisy,
                  Ratio&& ratio) {
  for (std::size_t i = 0; i < n; ++i) ratio[i] = e[i] / noise_level(e[i], na[i], nb[i], noisy[i] != 0);
}

template <class Energy, class NoiseA, class NoiseB, class Noisy, class Ratio>
void ratio_parallel(std::size_t n, const Energy& e, const NoiseA& na, const NoiseB& nb, const Noisy& noisy,
                    Ratio&& ratio) {
  const auto count = static_cast<std::int64_t>(n);
#pragma omp parallel for schedule(static)
  for (std::int64_t i = 0; i < count; ++i) {
    const auto k = static_cast<std::size_t>(i);
    ratio[k] = e[k] / noise_level(e[k], na[k], nb[k], noisy[k] != 0);
  }
}

}  // namespace layoutkit::example

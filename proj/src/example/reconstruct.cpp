#include "layoutkit/example/reconstruct.hpp"

#include <algorithm>
#include <numeric>
#include <tuple>
#include <type_traits>
#include <vector>

#include "layoutkit/errors.hpp"

namespace layoutkit::example {

namespace {

struct Window {
  std::uint32_t x0, x1, y0, y1;  // inclusive, clipped to the grid
};

Window window_around(std::uint64_t seed, std::uint32_t width, std::uint32_t height) {
  const auto sx = static_cast<std::int64_t>(seed % width);
  const auto sy = static_cast<std::int64_t>(seed / width);
  return {static_cast<std::uint32_t>(std::max<std::int64_t>(0, sx - kWindowRadius)),
          static_cast<std::uint32_t>(std::min<std::int64_t>(width - 1, sx + kWindowRadius)),
          static_cast<std::uint32_t>(std::max<std::int64_t>(0, sy - kWindowRadius)),
          static_cast<std::uint32_t>(std::min<std::int64_t>(height - 1, sy + kWindowRadius))};
}

void check_grid(std::size_t n, std::uint32_t width, std::uint32_t height) {
  if (width == 0 || height == 0 || n != std::size_t{width} * height) {
    throw Error("sensor count " + std::to_string(n) + " does not match a " + std::to_string(width) + "x" +
                std::to_string(height) + " grid");
  }
}

/// Seeds in processing order: descending energy, ascending index on ties.
template <class Energy>
std::vector<std::uint32_t> order_seeds(const std::vector<float>& ratio, const Energy& energy) {
  std::vector<std::uint32_t> seeds;
  for (std::size_t i = 0; i < ratio.size(); ++i) {
    if (ratio[i] > kSeedRatio) seeds.push_back(static_cast<std::uint32_t>(i));
  }
  std::sort(seeds.begin(), seeds.end(), [&](std::uint32_t a, std::uint32_t b) {
    const float ea = energy[a];
    const float eb = energy[b];
    return ea != eb ? ea > eb : a < b;
  });
  return seeds;
}

/// Greedy clustering shared shape: seeds, then unconsumed window members in
/// ascending flat index.
struct Clusters {
  std::vector<std::uint32_t> origin;
  std::vector<std::int32_t> offsets{0};
  std::vector<std::uint64_t> members;
};

template <class Energy>
void find_clusters(const std::vector<float>& ratio, const Energy& energy, std::uint32_t width, std::uint32_t height,
                   Clusters& out) {
  std::vector<std::uint8_t> consumed(ratio.size(), 0);
  for (std::uint32_t seed : order_seeds(ratio, energy)) {
    if (consumed[seed] != 0) continue;
    const Window win = window_around(seed, width, height);
    for (std::uint32_t y = win.y0; y <= win.y1; ++y) {
      for (std::uint32_t x = win.x0; x <= win.x1; ++x) {
        const std::size_t idx = std::size_t{y} * width + x;
        if (consumed[idx] == 0 && ratio[idx] > kContributorRatio) {
          consumed[idx] = 1;
          out.members.push_back(idx);
        }
      }
    }
    out.origin.push_back(seed);
    out.offsets.push_back(static_cast<std::int32_t>(out.members.size()));
  }
}

/// Derived quantities of one particle, accumulated in ascending flat-index order.
struct Summary {
  float energy = 0.0f;
  float x = 0.0f;
  float y = 0.0f;
  float x_variance = 0.0f;
  float y_variance = 0.0f;
  float significance[kSensorTypes] = {};
  float E_contribution[kSensorTypes] = {};
  std::uint8_t noisy_count[kSensorTypes] = {};
};

/// `sensor(idx)` yields {type index, energy, noise, noisy}.
template <class Get>
Summary summarize(const std::uint64_t* begin, const std::uint64_t* end, std::uint32_t width, const Get& sensor) {
  Summary s;
  float wx = 0.0f;
  float wy = 0.0f;
  for (const std::uint64_t* p = begin; p != end; ++p) {
    const auto [t, e, noise, noisy] = sensor(*p);
    s.E_contribution[t] += e;
    s.significance[t] += e / noise;
    s.noisy_count[t] = static_cast<std::uint8_t>(s.noisy_count[t] + (noisy ? 1 : 0));
    wx += e * static_cast<float>(*p % width);
    wy += e * static_cast<float>(*p / width);
  }
  s.energy = ((s.E_contribution[0] + s.E_contribution[1]) + s.E_contribution[2]) + s.E_contribution[3];
  s.x = wx / s.energy;
  s.y = wy / s.energy;
  float vx = 0.0f;
  float vy = 0.0f;
  for (const std::uint64_t* p = begin; p != end; ++p) {
    const float e = std::get<1>(sensor(*p));
    const float dx = static_cast<float>(*p % width) - s.x;
    const float dy = static_cast<float>(*p / width) - s.y;
    vx += e * dx * dx;
    vy += e * dy * dy;
  }
  s.x_variance = vx / s.energy;
  s.y_variance = vy / s.energy;
  return s;
}

}  // namespace

std::vector<Particle> reconstruct_aos(const std::vector<Sensor>& sensors, std::uint32_t width, std::uint32_t height) {
  check_grid(sensors.size(), width, height);
  const std::size_t n = sensors.size();
  std::vector<float> ratio(n);
  std::vector<float> energy(n);
  for (std::size_t i = 0; i < n; ++i) {
    energy[i] = sensors[i].energy;
    ratio[i] = sensors[i].energy / sensors[i].get_noise();
  }
  std::vector<Particle> particles;
  std::vector<std::uint8_t> consumed(n, 0);
  for (std::uint32_t seed : order_seeds(ratio, energy)) {
    if (consumed[seed] != 0) continue;
    Particle p;
    p.origin = seed;
    const Window win = window_around(seed, width, height);
    for (std::uint32_t y = win.y0; y <= win.y1; ++y) {
      for (std::uint32_t x = win.x0; x <= win.x1; ++x) {
        const std::size_t idx = std::size_t{y} * width + x;
        if (consumed[idx] == 0 && ratio[idx] > kContributorRatio) {
          consumed[idx] = 1;
          p.sensors.push_back(idx);
        }
      }
    }
    float wx = 0.0f;
    float wy = 0.0f;
    for (std::uint64_t idx : p.sensors) {
      const Sensor& s = sensors[idx];
      const auto t = static_cast<std::size_t>(s.type);
      p.E_contribution[t] += s.energy;
      p.significance[t] += s.energy / s.get_noise();
      if (s.calibration_data.noisy) ++p.noisy_count[t];
      wx += s.energy * static_cast<float>(idx % width);
      wy += s.energy * static_cast<float>(idx / width);
    }
    p.energy = ((p.E_contribution[0] + p.E_contribution[1]) + p.E_contribution[2]) + p.E_contribution[3];
    p.x = wx / p.energy;
    p.y = wy / p.energy;
    float vx = 0.0f;
    float vy = 0.0f;
    for (std::uint64_t idx : p.sensors) {
      const float e = sensors[idx].energy;
      const float dx = static_cast<float>(idx % width) - p.x;
      const float dy = static_cast<float>(idx / width) - p.y;
      vx += e * dx * dx;
      vy += e * dy * dy;
    }
    p.x_variance = vx / p.energy;
    p.y_variance = vy / p.energy;
    particles.push_back(std::move(p));
  }
  return particles;
}

void reconstruct_soa(const SensorSoA& s, std::uint32_t width, std::uint32_t height, ParticleSoA& out) {
  check_grid(s.size(), width, height);
  const std::size_t n = s.size();
  std::vector<float> ratio(n);
  for (std::size_t i = 0; i < n; ++i) {
    ratio[i] = s.energy[i] / noise_level(s.energy[i], s.noise_A[i], s.noise_B[i], s.noisy[i] != 0);
  }
  Clusters c;
  find_clusters(ratio, s.energy, width, height, c);

  out.clear();
  const std::size_t k = c.origin.size();
  out.origin.assign(c.origin.begin(), c.origin.end());
  out.sensor_offsets = c.offsets;
  out.sensors = c.members;
  out.energy.resize(k);
  out.x.resize(k);
  out.y.resize(k);
  out.x_variance.resize(k);
  out.y_variance.resize(k);
  for (std::size_t t = 0; t < kSensorTypes; ++t) {
    out.significance[t].resize(k);
    out.E_contribution[t].resize(k);
    out.noisy_count[t].resize(k);
  }
  auto sensor = [&](std::uint64_t idx) {
    const float e = s.energy[idx];
    const bool noisy = s.noisy[idx] != 0;
    return std::tuple<std::size_t, float, float, bool>(static_cast<std::size_t>(s.type[idx]), e,
                                                       noise_level(e, s.noise_A[idx], s.noise_B[idx], noisy), noisy);
  };
  for (std::size_t i = 0; i < k; ++i) {
    const Summary sum = summarize(c.members.data() + c.offsets[i], c.members.data() + c.offsets[i + 1], width, sensor);
    out.energy[i] = sum.energy;
    out.x[i] = sum.x;
    out.y[i] = sum.y;
    out.x_variance[i] = sum.x_variance;
    out.y_variance[i] = sum.y_variance;
    for (std::size_t t = 0; t < kSensorTypes; ++t) {
      out.significance[t][i] = sum.significance[t];
      out.E_contribution[t][i] = sum.E_contribution[t];
      out.noisy_count[t][i] = sum.noisy_count[t];
    }
  }
}

namespace {

template <class Type, class Noisy, class Noise>
void cluster_and_fill(std::size_t n, const std::vector<float>& ratio, const Type& type, const float* energy,
                      const Noisy& noisy, const Noise& noise_A, const Noise& noise_B, std::uint32_t width,
                      std::uint32_t height, Collection& particles);

/// Strided energies are gathered densely during the ratio pass; seed ordering
/// reads them at random.
template <class Type, class Energy, class Noisy, class Noise>
void reconstruct_columns(std::size_t n, const Type& type, const Energy& energy, const Noisy& noisy,
                         const Noise& noise_A, const Noise& noise_B, std::uint32_t width, std::uint32_t height,
                         Collection& particles) {
  std::vector<float> ratio(n);
  if constexpr (std::is_pointer_v<Energy>) {
    for (std::size_t i = 0; i < n; ++i) ratio[i] = energy[i] / noise_level(energy[i], noise_A[i], noise_B[i], noisy[i]);
    cluster_and_fill(n, ratio, type, energy, noisy, noise_A, noise_B, width, height, particles);
  } else {
    std::vector<float> dense(n);
    for (std::size_t i = 0; i < n; ++i) {
      const float e = energy[i];
      dense[i] = e;
      ratio[i] = e / noise_level(e, noise_A[i], noise_B[i], noisy[i]);
    }
    cluster_and_fill(n, ratio, type, dense.data(), noisy, noise_A, noise_B, width, height, particles);
  }
}

template <class Type, class Noisy, class Noise>
void cluster_and_fill(std::size_t, const std::vector<float>& ratio, const Type& type, const float* energy,
                      const Noisy& noisy, const Noise& noise_A, const Noise& noise_B, std::uint32_t width,
                      std::uint32_t height, Collection& particles) {
  Clusters c;
  find_clusters(ratio, energy, width, height, c);

  const std::size_t k = c.origin.size();
  particles.clear();
  particles.resize(k);
  const JaggedHandle members = particles.jagged("sensors");
  std::vector<std::uint64_t> lengths(k);
  for (std::size_t i = 0; i < k; ++i) lengths[i] = static_cast<std::uint64_t>(c.offsets[i + 1] - c.offsets[i]);
  particles.assign_jagged_lengths(members, lengths);

  auto p_energy = particles.get_collection<float>("energy");
  auto p_x = particles.get_collection<float>("x");
  auto p_y = particles.get_collection<float>("y");
  auto p_origin = particles.get_collection<std::uint64_t>("origin");
  auto p_sensors = particles.jagged_values(members, particles.field<std::uint64_t>("sensors.value"));
  auto p_xv = particles.get_collection<float>("x_variance");
  auto p_yv = particles.get_collection<float>("y_variance");
  auto p_sig = particles.get_collection<float>("significance.value");
  auto p_ec = particles.get_collection<float>("E_contribution.value");
  auto p_nc = particles.get_collection<std::uint8_t>("noisy_count.value");

  for (std::size_t j = 0; j < c.members.size(); ++j) p_sensors(j) = c.members[j];
  auto sensor = [&](std::uint64_t idx) {
    const float e = energy[idx];
    const bool nz = noisy[idx];
    return std::tuple<std::size_t, float, float, bool>(static_cast<std::size_t>(type[idx]), e,
                                                       noise_level(e, noise_A[idx], noise_B[idx], nz), nz);
  };
  for (std::size_t i = 0; i < k; ++i) {
    const Summary sum = summarize(c.members.data() + c.offsets[i], c.members.data() + c.offsets[i + 1], width, sensor);
    p_origin(i) = c.origin[i];
    p_energy(i) = sum.energy;
    p_x(i) = sum.x;
    p_y(i) = sum.y;
    p_xv(i) = sum.x_variance;
    p_yv(i) = sum.y_variance;
    for (std::size_t t = 0; t < kSensorTypes; ++t) {
      p_sig(i, t) = sum.significance[t];
      p_ec(i, t) = sum.E_contribution[t];
      p_nc(i, t) = sum.noisy_count[t];
    }
  }
}

}  // namespace

void reconstruct(const Collection& sensors, std::uint32_t width, std::uint32_t height, Collection& particles) {
  check_grid(sensors.size(), width, height);
  const std::size_t n = sensors.size();
  const auto type = sensors.get_collection<SensorType>("type");
  const auto energy = sensors.get_collection<float>("energy");
  const auto noisy = sensors.get_collection<bool>("calibration_data.noisy");
  const auto noise_A = sensors.get_collection<float>("calibration_data.noise_A");
  const auto noise_B = sensors.get_collection<float>("calibration_data.noise_B");
  const bool dense = type.row_stride() == 1 && energy.row_stride() == 1 && noisy.row_stride() == 1 &&
                     noise_A.row_stride() == 1 && noise_B.row_stride() == 1;
  if (dense) {
    reconstruct_columns(n, type.base(), energy.base(), noisy.base(), noise_A.base(), noise_B.base(), width, height,
                        particles);
  } else {
    reconstruct_columns(n, type, energy, noisy, noise_A, noise_B, width, height, particles);
  }
}

}  // namespace layoutkit::example

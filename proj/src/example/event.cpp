#include "layoutkit/example/event.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>

#include "layoutkit/errors.hpp"

namespace layoutkit::example {

namespace {

constexpr float kBaseA[kSensorTypes] = {1.0f, 0.8f, 1.2f, 0.9f};
constexpr float kBaseB[kSensorTypes] = {0.0f, 0.5f, 0.25f, 1.0f};
constexpr float kNoiseA[kSensorTypes] = {1.0f, 1.1f, 0.9f, 1.2f};
constexpr float kNoiseB[kSensorTypes] = {1.0f, 0.8f, 1.2f, 1.5f};
constexpr float kNoisyFraction = 0.02f;
constexpr std::uint64_t kBackgroundLevels = 10;
constexpr float kMinAmplitude = 200.0f;
constexpr float kMaxAmplitude = 2000.0f;
constexpr char kMagic[4] = {'L', 'K', 'E', 'V'};
constexpr std::uint32_t kVersion = 1;

static_assert(std::endian::native == std::endian::little, "event files assume a little-endian host");

class Writer {
 public:
  template <class T>
  void put(const T& v) {
    const auto* p = reinterpret_cast<const std::uint8_t*>(&v);
    out.insert(out.end(), p, p + sizeof(T));
  }
  std::vector<std::uint8_t> out;
};

class Reader {
 public:
  explicit Reader(const std::vector<std::uint8_t>& b) : bytes(b) {}
  template <class T>
  T get() {
    if (at + sizeof(T) > bytes.size()) throw Error("event data truncated at byte " + std::to_string(at));
    T v;
    std::memcpy(&v, bytes.data() + at, sizeof(T));
    at += sizeof(T);
    return v;
  }
  const std::vector<std::uint8_t>& bytes;
  std::size_t at = 0;
};

}  // namespace

float parse_density(const std::string& text) {
  if (text == "low") return kLowDensity;
  if (text == "high") return kHighDensity;
  std::size_t used = 0;
  float d = 0.0f;
  try {
    d = std::stof(text, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used != text.size() || !(d >= 0.0f)) throw Error("invalid density '" + text + "'");
  return d;
}

Event generate_event(const EventSpec& spec) {
  if (spec.grid_width == 0 || spec.grid_height == 0) throw Error("event grid dimensions must be positive");
  Event ev;
  ev.spec = spec;
  const std::size_t w = spec.grid_width;
  const std::size_t h = spec.grid_height;
  ev.sensors.resize(w * h);
  SplitMix64 rng(spec.seed);
  for (auto& s : ev.sensors) {
    const auto t = static_cast<std::size_t>(rng.next() >> 62);
    s.type = static_cast<SensorType>(t);
    s.calibration_data.parameter_A = kBaseA[t] * (0.95f + 0.1f * rng.uniform());
    s.calibration_data.parameter_B = kBaseB[t];
    s.calibration_data.noise_A = kNoiseA[t];
    s.calibration_data.noise_B = kNoiseB[t];
    s.calibration_data.noisy = rng.uniform() < kNoisyFraction;
    s.counts = rng.below(kBackgroundLevels);
  }
  const auto deposits = static_cast<std::uint64_t>(std::floor(static_cast<double>(spec.density) *
                                                              static_cast<double>(w * h) / 100.0));
  for (std::uint64_t d = 0; d < deposits; ++d) {
    const auto cx = static_cast<std::int64_t>(rng.below(w));
    const auto cy = static_cast<std::int64_t>(rng.below(h));
    const double amplitude = kMinAmplitude + (kMaxAmplitude - kMinAmplitude) * rng.uniform();
    for (std::int64_t dy = -2; dy <= 2; ++dy) {
      for (std::int64_t dx = -2; dx <= 2; ++dx) {
        const std::int64_t x = cx + dx;
        const std::int64_t y = cy + dy;
        if (x < 0 || y < 0 || x >= static_cast<std::int64_t>(w) || y >= static_cast<std::int64_t>(h)) continue;
        const double v = amplitude * std::exp(-0.5 * static_cast<double>(dx * dx + dy * dy));
        ev.sensors[static_cast<std::size_t>(y) * w + static_cast<std::size_t>(x)].counts +=
            static_cast<std::uint64_t>(std::llround(v));
      }
    }
  }
  return ev;
}

std::vector<std::uint8_t> encode_event(const Event& event) {
  Writer w;
  for (char c : kMagic) w.put(c);
  w.put(kVersion);
  w.put(event.spec.grid_width);
  w.put(event.spec.grid_height);
  w.put(event.spec.seed);
  w.put(event.spec.density);
  for (const auto& s : event.sensors) w.put(static_cast<std::uint8_t>(s.type));
  for (const auto& s : event.sensors) w.put(s.counts);
  for (const auto& s : event.sensors) w.put(s.energy);
  for (const auto& s : event.sensors) w.put(static_cast<std::uint8_t>(s.calibration_data.noisy));
  for (const auto& s : event.sensors) w.put(s.calibration_data.parameter_A);
  for (const auto& s : event.sensors) w.put(s.calibration_data.parameter_B);
  for (const auto& s : event.sensors) w.put(s.calibration_data.noise_A);
  for (const auto& s : event.sensors) w.put(s.calibration_data.noise_B);
  return std::move(w.out);
}

Event decode_event(const std::vector<std::uint8_t>& bytes) {
  Reader r(bytes);
  for (char c : kMagic) {
    if (r.get<char>() != c) throw Error("not an event file (bad magic)");
  }
  const auto version = r.get<std::uint32_t>();
  if (version != kVersion) throw Error("unsupported event file version " + std::to_string(version));
  Event ev;
  ev.spec.grid_width = r.get<std::uint32_t>();
  ev.spec.grid_height = r.get<std::uint32_t>();
  ev.spec.seed = r.get<std::uint64_t>();
  ev.spec.density = r.get<float>();
  const std::size_t n = std::size_t{ev.spec.grid_width} * ev.spec.grid_height;
  if (n == 0) throw Error("event file has an empty grid");
  ev.sensors.resize(n);
  for (auto& s : ev.sensors) {
    const auto t = r.get<std::uint8_t>();
    if (t >= kSensorTypes) throw Error("event file holds invalid sensor type " + std::to_string(t));
    s.type = static_cast<SensorType>(t);
  }
  for (auto& s : ev.sensors) s.counts = r.get<std::uint64_t>();
  for (auto& s : ev.sensors) s.energy = r.get<float>();
  for (auto& s : ev.sensors) s.calibration_data.noisy = r.get<std::uint8_t>() != 0;
  for (auto& s : ev.sensors) s.calibration_data.parameter_A = r.get<float>();
  for (auto& s : ev.sensors) s.calibration_data.parameter_B = r.get<float>();
  for (auto& s : ev.sensors) s.calibration_data.noise_A = r.get<float>();
  for (auto& s : ev.sensors) s.calibration_data.noise_B = r.get<float>();
  if (r.at != bytes.size()) throw Error("trailing bytes in event file");
  return ev;
}

void save_event(const Event& event, const std::string& path) {
  const auto bytes = encode_event(event);
  std::ofstream out(path, std::ios::binary);
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw Error("cannot write event file '" + path + "'");
}

Event load_event(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open event file '" + path + "'");
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return decode_event(bytes);
}

}  // namespace layoutkit::example

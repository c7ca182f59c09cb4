#include "layoutkit/bench/harness.hpp"

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cstring>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>
#include <tuple>

#include "layoutkit/errors.hpp"
#include "layoutkit/example/reconstruct.hpp"
#include "layoutkit/transfer.hpp"

namespace layoutkit::bench {

using example::Event;
using example::Particle;
using example::Sensor;

namespace {

constexpr std::pair<Configuration, std::string_view> kConfigNames[] = {
    {Configuration::HandwrittenAos, "handwritten-aos"},
    {Configuration::HandwrittenSoa, "handwritten-soa"},
    {Configuration::LibPerField, "lib-per-field"},
    {Configuration::LibArena, "lib-arena"},
    {Configuration::LibAos, "lib-aos"},
    {Configuration::LibPerFieldViaMockdev, "lib-per-field-via-mockdev"},
};

template <class T>
std::string shortest(T v) {
  char buf[64];
  auto r = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, r.ptr);
}

template <class T>
T parse_number(std::string_view text, const char* what) {
  T v{};
  auto r = std::from_chars(text.data(), text.data() + text.size(), v);
  if (r.ec != std::errc() || r.ptr != text.data() + text.size()) {
    throw Error(std::string("invalid ") + what + " '" + std::string(text) + "'");
  }
  return v;
}

std::vector<std::string_view> split(std::string_view line, char sep) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const auto at = line.find(sep, start);
    out.push_back(line.substr(start, at - start));
    if (at == std::string_view::npos) break;
    start = at + 1;
  }
  return out;
}

std::uint64_t event_seed(std::uint64_t base, std::size_t grid, std::size_t density, std::size_t event) {
  example::SplitMix64 mix(base ^ (grid * 0x100000001B3ull) ^ (density << 20) ^ (event << 40));
  return mix.next();
}

Event make_event(const BenchConfig& cfg, std::size_t g, std::size_t d, std::size_t e) {
  return example::generate_event(
      {cfg.grids[g].width, cfg.grids[g].height, event_seed(cfg.seed, g, d, e), cfg.densities[d]});
}

LayoutSpec arena_for(const Schema& schema, std::size_t capacity) {
  ArenaSpec spec;
  for (const auto& tag : flatten(schema).size_tags) spec.capacities[tag.id] = capacity;
  return LayoutSpec::single_block(spec);
}

}  // namespace

std::string_view to_string(Configuration c) {
  for (const auto& [k, name] : kConfigNames) {
    if (k == c) return name;
  }
  return "?";
}

Configuration parse_configuration(std::string_view text) {
  for (const auto& [k, name] : kConfigNames) {
    if (name == text) return k;
  }
  throw Error("unknown configuration '" + std::string(text) + "'");
}

const std::vector<Configuration>& all_configurations() {
  static const std::vector<Configuration> all = [] {
    std::vector<Configuration> v;
    for (const auto& entry : kConfigNames) v.push_back(entry.first);
    return v;
  }();
  return all;
}

std::string_view to_string(Phase p) {
  return p == Phase::FillCalibrate ? "fill_transfer_calibrate" : "reconstruct_transfer_export";
}

Phase parse_phase(std::string_view text) {
  if (text == "fill_transfer_calibrate") return Phase::FillCalibrate;
  if (text == "reconstruct_transfer_export") return Phase::ReconstructExport;
  throw Error("unknown phase '" + std::string(text) + "'");
}

Grid parse_grid(std::string_view text) {
  const auto x = text.find('x');
  Grid g;
  if (x == std::string_view::npos) {
    g.width = g.height = parse_number<std::uint32_t>(text, "grid");
  } else {
    g.width = parse_number<std::uint32_t>(text.substr(0, x), "grid width");
    g.height = parse_number<std::uint32_t>(text.substr(x + 1), "grid height");
  }
  if (g.width == 0 || g.height == 0) throw Error("grid dimensions must be positive: '" + std::string(text) + "'");
  return g;
}

std::string format_density(float density) { return shortest(density); }

void BenchConfig::validate() const {
  if (configurations.empty()) throw Error("no configurations selected");
  if (grids.empty()) throw Error("no grid sizes selected");
  if (densities.empty()) throw Error("no densities selected");
  if (repetitions == 0) throw Error("repetitions must be at least 1");
  if (keep_fastest == 0 || keep_fastest > repetitions) {
    throw Error("keep-fastest must be in [1, repetitions], got " + std::to_string(keep_fastest));
  }
  if (events == 0) throw Error("events must be at least 1");
  for (float d : densities) {
    if (!(d >= 0.0f)) throw Error("densities must be non-negative");
  }
}

// ---------------------------------------------------------------------------
// Pipeline

struct Pipeline::Impl {
  Configuration config;
  Grid grid;
  std::vector<Sensor> aos;
  example::SensorSoA soa;
  example::ParticleSoA psoa;
  std::optional<Collection> sensors;
  std::optional<Collection> particles;
  std::optional<Collection> host_sensors;
  std::optional<Collection> host_particles;
  std::vector<Particle> out;
  PhaseTransfer transfer[2];

  std::size_t cells() const { return std::size_t{grid.width} * grid.height; }

  static PhaseTransfer account(const TransferStats& s) { return {s.bytes, s.copy_ops}; }
};

Pipeline::Pipeline(Configuration config, Grid grid) : impl_(std::make_unique<Impl>()) {
  impl_->config = config;
  impl_->grid = grid;
  const Schema sensor = example::sensor_schema();
  const Schema particle = example::particle_schema();
  const std::size_t n = impl_->cells();
  switch (config) {
    case Configuration::HandwrittenAos:
    case Configuration::HandwrittenSoa: break;
    case Configuration::LibPerField:
      impl_->sensors.emplace(sensor, LayoutSpec::per_field());
      impl_->particles.emplace(particle, LayoutSpec::per_field());
      break;
    case Configuration::LibArena:
      impl_->sensors.emplace(sensor, arena_for(sensor, n));
      impl_->particles.emplace(particle, arena_for(particle, n));
      break;
    case Configuration::LibAos:
      impl_->sensors.emplace(sensor, LayoutSpec::aos());
      impl_->particles.emplace(particle, LayoutSpec::aos());
      break;
    case Configuration::LibPerFieldViaMockdev:
      impl_->host_sensors.emplace(sensor, LayoutSpec::per_field());
      impl_->host_particles.emplace(particle, LayoutSpec::per_field());
      impl_->sensors.emplace(sensor, LayoutSpec::per_field(), ContextInfo::mockdev());
      impl_->particles.emplace(particle, LayoutSpec::per_field(), ContextInfo::mockdev());
      break;
  }
}

Pipeline::~Pipeline() = default;
Pipeline::Pipeline(Pipeline&&) noexcept = default;
Pipeline& Pipeline::operator=(Pipeline&&) noexcept = default;

Configuration Pipeline::configuration() const { return impl_->config; }

const PhaseTransfer& Pipeline::transfer(Phase p) const { return impl_->transfer[static_cast<int>(p)]; }

const std::vector<Particle>& Pipeline::particles() const { return impl_->out; }

void Pipeline::fill_calibrate(const Event& event) {
  Impl& m = *impl_;
  if (event.spec.grid_width != m.grid.width || event.spec.grid_height != m.grid.height) {
    throw Error("event grid does not match the pipeline grid");
  }
  m.transfer[0] = {};
  switch (m.config) {
    case Configuration::HandwrittenAos:
      m.aos = event.sensors;
      for (auto& s : m.aos) s.calibrate_energy();
      break;
    case Configuration::HandwrittenSoa:
      m.soa.assign(event.sensors);
      m.soa.calibrate();
      break;
    case Configuration::LibPerFieldViaMockdev: {
      import_external(*m.host_sensors, event.sensors, example::sensor_record_binding());
      m.transfer[0] = Impl::account(copy_collection(*m.sensors, *m.host_sensors));
      ExecutionScope device(ExecutionContext::MockDevice);
      call_behavior(example::kSensorFuncs, "calibrate_energy", *m.sensors);
      break;
    }
    default:
      import_external(*m.sensors, event.sensors, example::sensor_record_binding());
      call_behavior(example::kSensorFuncs, "calibrate_energy", *m.sensors);
      break;
  }
}

void Pipeline::reconstruct_export() {
  Impl& m = *impl_;
  const auto w = m.grid.width;
  const auto h = m.grid.height;
  m.transfer[1] = {};
  switch (m.config) {
    case Configuration::HandwrittenAos: m.out = example::reconstruct_aos(m.aos, w, h); break;
    case Configuration::HandwrittenSoa:
      example::reconstruct_soa(m.soa, w, h, m.psoa);
      m.psoa.to_records(m.out);
      break;
    case Configuration::LibPerFieldViaMockdev: {
      {
        ExecutionScope device(ExecutionContext::MockDevice);
        example::reconstruct(*m.sensors, w, h, *m.particles);
      }
      m.transfer[1] = Impl::account(copy_collection(*m.host_particles, *m.particles));
      m.out.resize(m.host_particles->size());
      export_external(*m.host_particles, std::span<Particle>(m.out), example::particle_binding());
      break;
    }
    default:
      example::reconstruct(*m.sensors, w, h, *m.particles);
      m.out.resize(m.particles->size());
      export_external(*m.particles, std::span<Particle>(m.out), example::particle_binding());
      break;
  }
}

std::vector<Sensor> Pipeline::sensors() const {
  const Impl& m = *impl_;
  switch (m.config) {
    case Configuration::HandwrittenAos: return m.aos;
    case Configuration::HandwrittenSoa: {
      std::vector<Sensor> out(m.soa.size());
      for (std::size_t i = 0; i < out.size(); ++i) {
        out[i].type = m.soa.type[i];
        out[i].counts = m.soa.counts[i];
        out[i].energy = m.soa.energy[i];
        out[i].calibration_data = {m.soa.noisy[i] != 0, m.soa.parameter_A[i], m.soa.parameter_B[i],
                                   m.soa.noise_A[i], m.soa.noise_B[i]};
      }
      return out;
    }
    case Configuration::LibPerFieldViaMockdev: {
      const Collection host = copy_to(*m.sensors, LayoutSpec::per_field(), ContextInfo::host());
      return export_external(host, example::sensor_binding());
    }
    default: return export_external(*m.sensors, example::sensor_binding());
  }
}

void Pipeline::corrupt_energy(std::size_t sensor) {
  Impl& m = *impl_;
  auto flip = [](float& f) {
    unsigned char b[sizeof(float)];
    std::memcpy(b, &f, sizeof f);
    b[0] ^= 0x01;
    std::memcpy(&f, b, sizeof f);
  };
  switch (m.config) {
    case Configuration::HandwrittenAos: flip(m.aos.at(sensor).energy); break;
    case Configuration::HandwrittenSoa: flip(m.soa.energy.at(sensor)); break;
    case Configuration::LibPerFieldViaMockdev: {
      ExecutionScope device(ExecutionContext::MockDevice);
      flip(m.sensors->get_collection<float>("energy").at(sensor));
      break;
    }
    default: flip(m.sensors->get_collection<float>("energy").at(sensor)); break;
  }
}

// ---------------------------------------------------------------------------
// comparison

std::string dump_particles(const std::vector<Particle>& particles) {
  Collection c(example::particle_schema());
  import_external(c, particles, example::particle_binding());
  return c.dump();
}

namespace {

template <class T>
bool bit_equal(const T& a, const T& b) {
  return std::memcmp(&a, &b, sizeof(T)) == 0;
}

}  // namespace

std::optional<std::string> first_difference(const std::vector<Sensor>& expected, const std::vector<Sensor>& actual) {
  if (expected.size() != actual.size()) {
    return "sensors.size (" + std::to_string(expected.size()) + " vs " + std::to_string(actual.size()) + ")";
  }
  for (std::size_t i = 0; i < expected.size(); ++i) {
    const Sensor& e = expected[i];
    const Sensor& a = actual[i];
    const std::string at = "sensors[" + std::to_string(i) + "].";
    if (e.type != a.type) return at + "type";
    if (e.counts != a.counts) return at + "counts";
    if (!bit_equal(e.energy, a.energy)) return at + "energy";
    const auto& ec = e.calibration_data;
    const auto& ac = a.calibration_data;
    if (ec.noisy != ac.noisy) return at + "calibration_data.noisy";
    if (!bit_equal(ec.parameter_A, ac.parameter_A)) return at + "calibration_data.parameter_A";
    if (!bit_equal(ec.parameter_B, ac.parameter_B)) return at + "calibration_data.parameter_B";
    if (!bit_equal(ec.noise_A, ac.noise_A)) return at + "calibration_data.noise_A";
    if (!bit_equal(ec.noise_B, ac.noise_B)) return at + "calibration_data.noise_B";
  }
  return std::nullopt;
}

std::optional<std::string> first_difference(const std::vector<Particle>& expected,
                                            const std::vector<Particle>& actual) {
  if (expected.size() != actual.size()) {
    return "particles.size (" + std::to_string(expected.size()) + " vs " + std::to_string(actual.size()) + ")";
  }
  for (std::size_t i = 0; i < expected.size(); ++i) {
    const Particle& e = expected[i];
    const Particle& a = actual[i];
    const std::string at = "particles[" + std::to_string(i) + "].";
    if (!bit_equal(e.energy, a.energy)) return at + "energy";
    if (!bit_equal(e.x, a.x)) return at + "x";
    if (!bit_equal(e.y, a.y)) return at + "y";
    if (e.origin != a.origin) return at + "origin";
    if (e.sensors.size() != a.sensors.size()) return at + "sensors.size";
    for (std::size_t k = 0; k < e.sensors.size(); ++k) {
      if (e.sensors[k] != a.sensors[k]) return at + "sensors[" + std::to_string(k) + "]";
    }
    if (!bit_equal(e.x_variance, a.x_variance)) return at + "x_variance";
    if (!bit_equal(e.y_variance, a.y_variance)) return at + "y_variance";
    for (std::size_t t = 0; t < example::kSensorTypes; ++t) {
      const std::string slot = "[" + std::to_string(t) + "]";
      if (!bit_equal(e.significance[t], a.significance[t])) return at + "significance" + slot;
      if (!bit_equal(e.E_contribution[t], a.E_contribution[t])) return at + "E_contribution" + slot;
      if (e.noisy_count[t] != a.noisy_count[t]) return at + "noisy_count" + slot;
    }
  }
  return std::nullopt;
}

// ---------------------------------------------------------------------------
// verify

VerifyOutcome run_verify(const BenchConfig& cfg) {
  cfg.validate();
  struct Job {
    std::size_t g, d, e;
  };
  std::vector<Job> jobs;
  for (std::size_t g = 0; g < cfg.grids.size(); ++g) {
    for (std::size_t d = 0; d < cfg.densities.size(); ++d) {
      for (std::size_t e = 0; e < cfg.events; ++e) jobs.push_back({g, d, e});
    }
  }
  Configuration faulty = Configuration::HandwrittenAos;
  for (auto c : cfg.configurations) {
    if (c != Configuration::HandwrittenAos) faulty = c;
  }

  std::vector<std::vector<std::string>> failures(jobs.size());
  std::vector<std::string> errors(jobs.size());
  auto run_job = [&](std::size_t j) {
    const Job& job = jobs[j];
    const Grid grid = cfg.grids[job.g];
    const Event ev = make_event(cfg, job.g, job.d, job.e);
    Pipeline reference(Configuration::HandwrittenAos, grid);
    reference.fill_calibrate(ev);
    reference.reconstruct_export();
    const auto ref_sensors = reference.sensors();
    for (auto c : cfg.configurations) {
      if (c == Configuration::HandwrittenAos) continue;
      Pipeline p(c, grid);
      p.fill_calibrate(ev);
      if (cfg.inject_fault && c == faulty) p.corrupt_energy(ev.sensors.size() / 2);
      p.reconstruct_export();
      auto diff = first_difference(ref_sensors, p.sensors());
      if (!diff) diff = first_difference(reference.particles(), p.particles());
      if (diff) {
        std::ostringstream msg;
        msg << to_string(c) << " grid " << grid.width << 'x' << grid.height << " density "
            << format_density(cfg.densities[job.d]) << " event " << job.e << ": " << *diff;
        failures[j].push_back(msg.str());
      }
    }
  };

  if (cfg.parallel) {
    const auto count = static_cast<std::int64_t>(jobs.size());
#pragma omp parallel for schedule(dynamic)
    for (std::int64_t j = 0; j < count; ++j) {
      try {
        run_job(static_cast<std::size_t>(j));
      } catch (const std::exception& ex) {
        errors[static_cast<std::size_t>(j)] = ex.what();
      }
    }
    for (const auto& e : errors) {
      if (!e.empty()) throw Error(e);
    }
  } else {
    for (std::size_t j = 0; j < jobs.size(); ++j) run_job(j);
  }

  VerifyOutcome out;
  out.runs = jobs.size();
  for (auto& f : failures) {
    for (auto& line : f) out.failures.push_back(std::move(line));
  }
  out.ok = out.failures.empty();
  return out;
}

// ---------------------------------------------------------------------------
// bench

double mean_of_fastest(std::vector<double> values, std::size_t keep) {
  if (keep == 0 || keep > values.size()) throw Error("cannot keep " + std::to_string(keep) + " of " +
                                                     std::to_string(values.size()) + " samples");
  std::sort(values.begin(), values.end());
  double sum = 0.0;
  for (std::size_t i = 0; i < keep; ++i) sum += values[i];
  return sum / static_cast<double>(keep);
}

BenchResult run_bench(const BenchConfig& cfg) {
  cfg.validate();
  if (cfg.verify) {
    const VerifyOutcome v = run_verify(cfg);
    if (!v.ok) throw Error("verification failed before benchmarking: " + v.failures.front());
  }
  using Clock = std::chrono::steady_clock;
  BenchResult result;
  for (std::size_t g = 0; g < cfg.grids.size(); ++g) {
    for (std::size_t d = 0; d < cfg.densities.size(); ++d) {
      std::vector<Event> events;
      for (std::size_t e = 0; e < cfg.events; ++e) events.push_back(make_event(cfg, g, d, e));
      std::vector<Pipeline> pipelines;
      for (auto c : cfg.configurations) pipelines.emplace_back(c, cfg.grids[g]);
      for (auto& p : pipelines) {
        p.fill_calibrate(events.front());
        p.reconstruct_export();
      }
      const std::size_t nc = pipelines.size();
      std::vector<std::vector<double>> times[2];
      times[0].assign(nc, {});
      times[1].assign(nc, {});
      std::vector<PhaseTransfer> moved[2];
      moved[0].assign(nc, {});
      moved[1].assign(nc, {});
      for (std::size_t r = 0; r < cfg.repetitions; ++r) {
        for (std::size_t c = 0; c < nc; ++c) {
          double total[2] = {0.0, 0.0};
          PhaseTransfer sum[2];
          for (const Event& ev : events) {
            const auto t0 = Clock::now();
            pipelines[c].fill_calibrate(ev);
            const auto t1 = Clock::now();
            pipelines[c].reconstruct_export();
            const auto t2 = Clock::now();
            total[0] += std::chrono::duration<double>(t1 - t0).count();
            total[1] += std::chrono::duration<double>(t2 - t1).count();
            for (int ph = 0; ph < 2; ++ph) {
              sum[ph].bytes += pipelines[c].transfer(static_cast<Phase>(ph)).bytes;
              sum[ph].copy_ops += pipelines[c].transfer(static_cast<Phase>(ph)).copy_ops;
            }
          }
          for (int ph = 0; ph < 2; ++ph) {
            times[ph][c].push_back(total[ph]);
            moved[ph][c] = sum[ph];
            result.samples.push_back(
                {cfg.configurations[c], cfg.grids[g], cfg.densities[d], static_cast<Phase>(ph), r, total[ph]});
          }
        }
      }
      for (std::size_t c = 0; c < nc; ++c) {
        for (int ph = 0; ph < 2; ++ph) {
          result.rows.push_back({cfg.configurations[c], cfg.grids[g], cfg.densities[d], static_cast<Phase>(ph),
                                 cfg.events, cfg.repetitions, cfg.keep_fastest,
                                 mean_of_fastest(times[ph][c], cfg.keep_fastest), moved[ph][c].bytes,
                                 moved[ph][c].copy_ops});
        }
      }
    }
  }
  return result;
}

// ---------------------------------------------------------------------------
// CSV

namespace {

constexpr const char* kReportHeader =
    "configuration,grid_width,grid_height,density,phase,events,repetitions,keep_fastest,mean_fastest_seconds,"
    "bytes_transferred,copy_ops";
constexpr const char* kSamplesHeader = "configuration,grid_width,grid_height,density,phase,repetition,seconds";

template <class F>
void read_csv(std::istream& in, const char* header, std::size_t columns, F&& row) {
  std::string line;
  if (!std::getline(in, line)) throw Error("empty CSV input");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != header) throw Error("unexpected CSV header '" + line + "'");
  std::size_t number = 1;
  while (std::getline(in, line)) {
    ++number;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto cells = split(line, ',');
    if (cells.size() != columns) throw Error("CSV line " + std::to_string(number) + " has the wrong column count");
    row(cells);
  }
}

}  // namespace

void write_report_csv(std::ostream& out, const std::vector<ReportRow>& rows) {
  out << kReportHeader << '\n';
  for (const auto& r : rows) {
    out << to_string(r.configuration) << ',' << r.grid.width << ',' << r.grid.height << ','
        << format_density(r.density) << ',' << to_string(r.phase) << ',' << r.events << ',' << r.repetitions << ','
        << r.keep_fastest << ',' << shortest(r.mean_fastest_seconds) << ',' << r.bytes_transferred << ','
        << r.copy_ops << '\n';
  }
}

std::vector<ReportRow> read_report_csv(std::istream& in) {
  std::vector<ReportRow> rows;
  read_csv(in, kReportHeader, 11, [&](const std::vector<std::string_view>& c) {
    rows.push_back({parse_configuration(c[0]),
                    {parse_number<std::uint32_t>(c[1], "grid width"), parse_number<std::uint32_t>(c[2], "grid height")},
                    parse_number<float>(c[3], "density"),
                    parse_phase(c[4]),
                    parse_number<std::size_t>(c[5], "events"),
                    parse_number<std::size_t>(c[6], "repetitions"),
                    parse_number<std::size_t>(c[7], "keep_fastest"),
                    parse_number<double>(c[8], "seconds"),
                    parse_number<std::uint64_t>(c[9], "bytes"),
                    parse_number<std::uint64_t>(c[10], "copy_ops")});
  });
  return rows;
}

void write_samples_csv(std::ostream& out, const std::vector<Sample>& samples) {
  out << kSamplesHeader << '\n';
  for (const auto& s : samples) {
    out << to_string(s.configuration) << ',' << s.grid.width << ',' << s.grid.height << ','
        << format_density(s.density) << ',' << to_string(s.phase) << ',' << s.repetition << ','
        << shortest(s.seconds) << '\n';
  }
}

std::vector<Sample> read_samples_csv(std::istream& in) {
  std::vector<Sample> samples;
  read_csv(in, kSamplesHeader, 7, [&](const std::vector<std::string_view>& c) {
    samples.push_back({parse_configuration(c[0]),
                       {parse_number<std::uint32_t>(c[1], "grid width"),
                        parse_number<std::uint32_t>(c[2], "grid height")},
                       parse_number<float>(c[3], "density"),
                       parse_phase(c[4]),
                       parse_number<std::size_t>(c[5], "repetition"),
                       parse_number<double>(c[6], "seconds")});
  });
  return samples;
}

// ---------------------------------------------------------------------------
// overhead

const std::vector<OverheadPair>& overhead_pairs() {
  static const std::vector<OverheadPair> pairs = {
      {Configuration::LibPerField, Configuration::HandwrittenSoa, true},
      {Configuration::LibArena, Configuration::HandwrittenSoa, true},
      {Configuration::LibAos, Configuration::HandwrittenAos, false},
  };
  return pairs;
}

BenchConfig overhead_config() {
  BenchConfig c;
  c.grids = {{512, 512}};
  c.configurations = {Configuration::HandwrittenAos, Configuration::HandwrittenSoa, Configuration::LibPerField,
                      Configuration::LibArena, Configuration::LibAos};
  c.events = 3;
  c.repetitions = 10;
  c.keep_fastest = 3;
  return c;
}

OverheadReport compute_overhead(const std::vector<ReportRow>& rows, const std::vector<OverheadPair>& pairs) {
  using Key = std::tuple<Configuration, std::uint32_t, std::uint32_t, float, Phase>;
  std::map<Key, double> seconds;
  for (const auto& r : rows) seconds[{r.configuration, r.grid.width, r.grid.height, r.density, r.phase}] =
      r.mean_fastest_seconds;

  OverheadReport report;
  bool any_gating = false;
  for (const auto& pair : pairs) {
    for (Phase phase : {Phase::FillCalibrate, Phase::ReconstructExport}) {
      OverheadLine line{pair, phase, 0.0, {}, false};
      for (const auto& r : rows) {
        if (r.configuration != pair.library || r.phase != phase) continue;
        auto base = seconds.find({pair.baseline, r.grid.width, r.grid.height, r.density, phase});
        if (base == seconds.end()) {
          throw Error("no " + std::string(to_string(pair.baseline)) + " baseline row for grid " +
                      std::to_string(r.grid.width) + "x" + std::to_string(r.grid.height) + " density " +
                      format_density(r.density) + " phase " + std::string(to_string(phase)));
        }
        line.ratios.push_back(r.mean_fastest_seconds / base->second);
      }
      if (line.ratios.empty()) continue;
      auto sorted = line.ratios;
      std::sort(sorted.begin(), sorted.end());
      const std::size_t n = sorted.size();
      line.median_ratio = n % 2 == 1 ? sorted[n / 2] : 0.5 * (sorted[n / 2 - 1] + sorted[n / 2]);
      line.pass = line.median_ratio <= kOverheadTolerance;
      if (pair.gating) {
        any_gating = true;
        report.pass = report.pass && line.pass;
      }
      report.lines.push_back(std::move(line));
    }
  }
  if (!any_gating) throw Error("no library configuration with a handwritten baseline in the report");
  return report;
}

void print_overhead(std::ostream& out, const OverheadReport& report) {
  for (const auto& l : report.lines) {
    out << to_string(l.pair.library) << " / " << to_string(l.pair.baseline) << ' ' << to_string(l.phase)
        << " median ratio " << l.median_ratio;
    if (l.pair.gating) {
      out << (l.pass ? " PASS" : " FAIL") << '\n';
    } else {
      out << (l.pass ? " within (info)" : " over (info)") << '\n';
    }
  }
  out << (report.pass ? "overhead: PASS" : "overhead: FAIL") << '\n';
}

}  // namespace layoutkit::bench

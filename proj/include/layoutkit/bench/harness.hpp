#pragma once

#include <cstdint>
#include <iosfwd>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "layoutkit/example/event.hpp"

namespace layoutkit::bench {

enum class Configuration : std::uint8_t {
  HandwrittenAos,
  HandwrittenSoa,
  LibPerField,
  LibArena,
  LibAos,
  LibPerFieldViaMockdev,
};

std::string_view to_string(Configuration c);
Configuration parse_configuration(std::string_view text);
const std::vector<Configuration>& all_configurations();

enum class Phase : std::uint8_t { FillCalibrate, ReconstructExport };
std::string_view to_string(Phase p);
Phase parse_phase(std::string_view text);

struct Grid {
  std::uint32_t width = 0;
  std::uint32_t height = 0;
  friend bool operator==(const Grid&, const Grid&) = default;
};

/// Parses "64" (square) or "64x32".
Grid parse_grid(std::string_view text);

struct BenchConfig {
  std::vector<Grid> grids{{64, 64}};
  std::vector<float> densities{example::kLowDensity, example::kHighDensity};
  std::vector<Configuration> configurations = all_configurations();
  std::uint64_t seed = 1;
  std::size_t repetitions = 50;
  std::size_t keep_fastest = 10;
  std::size_t events = 10;
  bool verify = true;
  bool parallel = false;
  /// Test hook: corrupt one sensor energy of the last non-reference configuration.
  bool inject_fault = false;

  /// Throws Error on an unusable configuration.
  void validate() const;
};

/// Per-phase transfer accounting of one pipeline run.
struct PhaseTransfer {
  std::uint64_t bytes = 0;
  std::uint64_t copy_ops = 0;
};

/// State of one configuration, reused across events so that timings exclude
/// one-off construction.
class Pipeline {
 public:
  Pipeline(Configuration config, Grid grid);
  ~Pipeline();
  Pipeline(Pipeline&&) noexcept;
  Pipeline& operator=(Pipeline&&) noexcept;

  Configuration configuration() const;

  /// Fill from the original records, transfer if needed, calibrate.
  void fill_calibrate(const example::Event& event);
  /// Reconstruct, transfer back if needed, export to records.
  void reconstruct_export();

  const PhaseTransfer& transfer(Phase p) const;

  /// Calibrated sensor records, read back from whatever storage is used.
  std::vector<example::Sensor> sensors() const;
  const std::vector<example::Particle>& particles() const;

  /// Test hook: flips the low byte of one sensor's stored energy.
  void corrupt_energy(std::size_t sensor);

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

/// Logical dump of particle records, identical to the dump of a collection
/// holding them.
std::string dump_particles(const std::vector<example::Particle>& particles);

/// Path of the first differing field ("particles[3].E_contribution[1]"), if any.
std::optional<std::string> first_difference(const std::vector<example::Sensor>& expected,
                                            const std::vector<example::Sensor>& actual);
std::optional<std::string> first_difference(const std::vector<example::Particle>& expected,
                                            const std::vector<example::Particle>& actual);

struct VerifyOutcome {
  bool ok = true;
  std::size_t runs = 0;
  std::vector<std::string> failures;  // "<config> grid WxH density d event e: <path>"
};

VerifyOutcome run_verify(const BenchConfig& config);

struct Sample {
  Configuration configuration;
  Grid grid;
  float density;
  Phase phase;
  std::size_t repetition;
  double seconds;  // summed over the events of the repetition
};

struct ReportRow {
  Configuration configuration;
  Grid grid;
  float density;
  Phase phase;
  std::size_t events;
  std::size_t repetitions;
  std::size_t keep_fastest;
  double mean_fastest_seconds;
  std::uint64_t bytes_transferred;  // per repetition
  std::uint64_t copy_ops;           // per repetition
};

struct BenchResult {
  std::vector<ReportRow> rows;
  std::vector<Sample> samples;
};

BenchResult run_bench(const BenchConfig& config);

/// Mean of the `keep` smallest values.
double mean_of_fastest(std::vector<double> values, std::size_t keep);

void write_report_csv(std::ostream& out, const std::vector<ReportRow>& rows);
std::vector<ReportRow> read_report_csv(std::istream& in);
void write_samples_csv(std::ostream& out, const std::vector<Sample>& samples);
std::vector<Sample> read_samples_csv(std::istream& in);

/// Density as printed in CSV files and reports (shortest round-trip form).
std::string format_density(float density);

struct OverheadPair {
  Configuration library;
  Configuration baseline;
  bool gating;
};

/// Library configurations and the handwritten baselines they are held to.
const std::vector<OverheadPair>& overhead_pairs();

struct OverheadLine {
  OverheadPair pair;
  Phase phase;
  double median_ratio;
  std::vector<double> ratios;  // one per (grid, density) cell
  bool pass;
};

struct OverheadReport {
  std::vector<OverheadLine> lines;
  bool pass = true;  // over gating pairs only
};

inline constexpr double kOverheadTolerance = 1.10;

/// Default measurement of the overhead command: one 512x512 grid, the
/// handwritten and host library configurations, 3 events, fastest 3 of 10.
BenchConfig overhead_config();

/// Ratios library / baseline per phase over matching report rows. Throws
/// Error when a baseline row is missing.
OverheadReport compute_overhead(const std::vector<ReportRow>& rows, const std::vector<OverheadPair>& pairs);
void print_overhead(std::ostream& out, const OverheadReport& report);

}  // namespace layoutkit::bench

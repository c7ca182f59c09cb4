#include <CLI11.hpp>

#include <fstream>
#include <iostream>

#include "layoutkit/bench/harness.hpp"
#include "layoutkit/example/domain.hpp"
#include "layoutkit/schema_io.hpp"

namespace lb = layoutkit::bench;
namespace lx = layoutkit::example;

namespace {

struct Options {
  std::vector<std::string> grids{"64"};
  std::vector<std::string> densities{"low", "high"};
  std::vector<std::string> configurations;
  std::uint64_t seed = 1;
  std::size_t repetitions = 50;
  std::size_t keep = 10;
  std::size_t events = 10;
  std::string output;
  std::string raw_output;
  bool no_verify = false;
  bool parallel = false;
  bool inject_fault = false;

  lb::BenchConfig config() const {
    lb::BenchConfig c;
    c.grids.clear();
    for (const auto& g : grids) c.grids.push_back(lb::parse_grid(g));
    c.densities.clear();
    for (const auto& d : densities) c.densities.push_back(lx::parse_density(d));
    if (!configurations.empty()) {
      c.configurations.clear();
      for (const auto& name : configurations) c.configurations.push_back(lb::parse_configuration(name));
    }
    c.seed = seed;
    c.repetitions = repetitions;
    c.keep_fastest = keep;
    c.events = events;
    c.verify = !no_verify;
    c.parallel = parallel;
    c.inject_fault = inject_fault;
    return c;
  }
};

void add_common(CLI::App* cmd, Options& o) {
  cmd->add_option("--grid", o.grids, "Grid sizes, N or WxH")->delimiter(',');
  cmd->add_option("--density", o.densities, "Deposit densities: low, high or deposits per 100 sensors")
      ->delimiter(',');
  cmd->add_option("--config", o.configurations, "Configurations to run (default: all)")->delimiter(',');
  cmd->add_option("--seed", o.seed, "Base seed");
  cmd->add_option("--events", o.events, "Events per grid and density");
}

void add_timing(CLI::App* cmd, Options& o) {
  cmd->add_option("--repetitions", o.repetitions, "Timed repetitions per cell");
  cmd->add_option("--keep-fastest", o.keep, "Fastest repetitions averaged per cell");
  cmd->add_flag("--no-verify", o.no_verify, "Skip the verification pass");
}

template <class Write>
void emit(const std::string& path, Write&& write) {
  if (path.empty() || path == "-") {
    write(std::cout);
    return;
  }
  std::ofstream out(path);
  write(out);
  if (!out) throw layoutkit::Error("cannot write '" + path + "'");
}

layoutkit::Schema choose_schema(const std::string& example, const std::string& file) {
  if (example == "sensor") return lx::sensor_schema();
  if (example == "particle") return lx::particle_schema();
  if (!example.empty()) throw layoutkit::Error("unknown example schema '" + example + "'");
  if (file.empty()) throw layoutkit::Error("no schema given");
  return layoutkit::load_schema_file(file);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"layoutkit: data layout benchmark harness"};
  app.require_subcommand(1);

  Options verify_opts;
  verify_opts.events = 3;
  auto* verify = app.add_subcommand("verify", "Check every configuration against the handwritten reference");
  add_common(verify, verify_opts);
  verify->add_flag("--parallel", verify_opts.parallel, "Verify events on several threads");
  verify->add_flag("--inject-fault", verify_opts.inject_fault, "Corrupt one sensor energy (self-test)");

  Options bench_opts;
  auto* bench = app.add_subcommand("bench", "Time both phases of every configuration");
  add_common(bench, bench_opts);
  add_timing(bench, bench_opts);
  bench->add_option("-o,--output", bench_opts.output, "Report CSV path (default stdout)");
  bench->add_option("--raw-output", bench_opts.raw_output, "Per-repetition sample CSV path");

  const lb::BenchConfig overhead_defaults = lb::overhead_config();
  Options overhead_opts;
  overhead_opts.grids.clear();
  for (const auto& g : overhead_defaults.grids) {
    overhead_opts.grids.push_back(std::to_string(g.width) + "x" + std::to_string(g.height));
  }
  overhead_opts.densities.clear();
  for (float d : overhead_defaults.densities) overhead_opts.densities.push_back(lb::format_density(d));
  overhead_opts.configurations.clear();
  for (auto c : overhead_defaults.configurations) overhead_opts.configurations.emplace_back(lb::to_string(c));
  overhead_opts.events = overhead_defaults.events;
  overhead_opts.repetitions = overhead_defaults.repetitions;
  overhead_opts.keep = overhead_defaults.keep_fastest;
  std::string overhead_input;
  auto* overhead = app.add_subcommand("overhead", "Compare library configurations with handwritten baselines");
  add_common(overhead, overhead_opts);
  add_timing(overhead, overhead_opts);
  overhead->add_option("--input", overhead_input, "Use an existing report CSV instead of measuring");
  overhead->add_option("-o,--output", overhead_opts.output, "Also write the measured report CSV here");

  std::string generate_grid = "64";
  std::string generate_density = "low";
  std::uint64_t generate_seed = 1;
  std::string generate_output;
  auto* generate = app.add_subcommand("generate", "Write one event to a binary file");
  generate->add_option("--grid", generate_grid, "Grid size, N or WxH");
  generate->add_option("--density", generate_density, "Deposit density");
  generate->add_option("--seed", generate_seed, "Seed");
  generate->add_option("-o,--output", generate_output, "Event file path")->required();

  std::string plan_input;
  std::string plan_example;
  bool plan_accessors = false;
  auto* plan = app.add_subcommand("plan", "Validate a schema file and print its storage plan");
  auto* plan_file = plan->add_option("schema", plan_input, "Schema JSON file");
  plan->add_option("--example", plan_example, "Built-in schema instead of a file: sensor or particle")
      ->excludes(plan_file);
  plan->add_flag("--emit-accessors", plan_accessors, "Print generated accessor declarations");

  CLI11_PARSE(app, argc, argv);

  try {
    if (verify->parsed()) {
      const auto outcome = lb::run_verify(verify_opts.config());
      for (const auto& f : outcome.failures) std::cout << "DIVERGED " << f << '\n';
      std::cout << (outcome.ok ? "verify: OK" : "verify: FAILED") << " (" << outcome.runs << " events)\n";
      return outcome.ok ? 0 : 1;
    }
    if (bench->parsed()) {
      const auto result = lb::run_bench(bench_opts.config());
      emit(bench_opts.output, [&](std::ostream& o) { lb::write_report_csv(o, result.rows); });
      if (!bench_opts.raw_output.empty()) {
        emit(bench_opts.raw_output, [&](std::ostream& o) { lb::write_samples_csv(o, result.samples); });
      }
      return 0;
    }
    if (overhead->parsed()) {
      std::vector<lb::ReportRow> rows;
      if (!overhead_input.empty()) {
        std::ifstream in(overhead_input);
        if (!in) throw layoutkit::Error("cannot open '" + overhead_input + "'");
        rows = lb::read_report_csv(in);
      } else {
        rows = lb::run_bench(overhead_opts.config()).rows;
        if (!overhead_opts.output.empty()) {
          emit(overhead_opts.output, [&](std::ostream& o) { lb::write_report_csv(o, rows); });
        }
      }
      const auto report = lb::compute_overhead(rows, lb::overhead_pairs());
      lb::print_overhead(std::cout, report);
      return report.pass ? 0 : 1;
    }
    if (generate->parsed()) {
      const auto g = lb::parse_grid(generate_grid);
      const auto ev = lx::generate_event({g.width, g.height, generate_seed, lx::parse_density(generate_density)});
      lx::save_event(ev, generate_output);
      std::cout << "wrote " << ev.sensors.size() << " sensors to " << generate_output << '\n';
      return 0;
    }
    if (plan->parsed()) {
      lx::register_sensor_functions();
      const layoutkit::Schema schema = choose_schema(plan_example, plan_input);
      std::cout << "schema " << schema.name() << '\n' << layoutkit::describe_plan(layoutkit::flatten(schema));
      if (plan_accessors) std::cout << '\n' << layoutkit::generate_accessors(schema);
      return 0;
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
  return 0;
}

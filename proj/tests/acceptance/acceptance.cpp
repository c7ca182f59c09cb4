// Acceptance gate: one PASS/FAIL line per criterion, nonzero exit on any failure.
// Usage: layoutkit_acceptance [criterion...]

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <unistd.h>

#include "layoutkit/bench/harness.hpp"
#include "layoutkit/example/event.hpp"
#include "layoutkit/transfer.hpp"
#include "support/oracle.hpp"

#ifndef LAYOUTKIT_CLI
#error "LAYOUTKIT_CLI must name the command-line tool"
#endif

namespace fs = std::filesystem;
namespace lb = layoutkit::bench;
namespace lx = layoutkit::example;
namespace lt = layoutkit::testing;
using namespace layoutkit;

namespace {

struct Verdict {
  bool pass = false;
  std::string detail;
};

struct Criterion {
  std::string name;
  std::function<Verdict()> run;
};

std::string dump_anywhere(const Collection& c) {
  if (memory().accessible(c.context_info(), ExecutionContext::Host)) return c.dump();
  ExecutionScope device(ExecutionContext::MockDevice);
  return c.dump();
}

struct Placement {
  LayoutSpec spec;
  ContextInfo info;
  std::string name() const { return std::string(to_string(spec.kind)) + "@" + info.context; }
};

std::vector<Placement> placements() {
  std::vector<Placement> out;
  for (const auto& info : {ContextInfo::host(), ContextInfo::mockdev()}) {
    for (const auto& spec : {LayoutSpec::per_field(), lt::fuzz_arena_spec(), LayoutSpec::aos()}) {
      out.push_back({spec, info});
    }
  }
  return out;
}

Collection random_collection(std::uint64_t seed, std::size_t n) {
  Collection c(lt::fuzz_schema());
  lt::Rng rng(seed);
  lt::fill_random(c, n, rng);
  return c;
}

fs::path scratch_dir() {
  const fs::path dir = fs::temp_directory_path() / ("layoutkit_acceptance_" + std::to_string(::getpid()));
  fs::create_directories(dir);
  return dir;
}

int run_cli(const std::string& args, const fs::path& log) {
  const std::string cmd = std::string("\"") + LAYOUTKIT_CLI + "\" " + args + " > \"" + log.string() + "\" 2>&1";
  return std::system(cmd.c_str());
}

std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> out;
  std::stringstream s(line);
  std::string cell;
  while (std::getline(s, cell, ',')) out.push_back(cell);
  return out;
}

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 == 1 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

Verdict cross_layout_oracle() {
  const std::vector<lb::Grid> grids = {{16, 16}, {64, 64}, {128, 128}};
  const std::vector<float> densities = {0.0f, lx::kLowDensity, lx::kHighDensity};
  const std::size_t events_per_cell = 3;
  std::size_t events = 0;
  std::size_t comparisons = 0;
  std::size_t particles = 0;
  std::vector<std::string> failures;
  for (std::size_t g = 0; g < grids.size(); ++g) {
    for (std::size_t d = 0; d < densities.size(); ++d) {
      for (std::size_t e = 0; e < events_per_cell; ++e) {
        const lx::Event ev = lx::generate_event({grids[g].width, grids[g].height, 7000 + 100 * g + 10 * d + e,
                                                 densities[d]});
        ++events;
        lb::Pipeline ref(lb::Configuration::HandwrittenAos, grids[g]);
        ref.fill_calibrate(ev);
        ref.reconstruct_export();
        const std::string expected = lb::dump_particles(ref.particles());
        particles += ref.particles().size();
        for (auto c : lb::all_configurations()) {
          if (c == lb::Configuration::HandwrittenAos) continue;
          lb::Pipeline p(c, grids[g]);
          p.fill_calibrate(ev);
          p.reconstruct_export();
          ++comparisons;
          if (lb::dump_particles(p.particles()) != expected || lb::first_difference(ref.sensors(), p.sensors())) {
            failures.push_back(std::string(lb::to_string(c)) + " grid " + std::to_string(grids[g].width) +
                               " density " + lb::format_density(densities[d]) + " event " + std::to_string(e));
          }
        }
      }
    }
  }
  std::ostringstream msg;
  msg << events << " events, " << comparisons << " configuration runs, " << particles << " reference particles, "
      << failures.size() << " divergences";
  if (!failures.empty()) msg << " (first: " << failures.front() << ")";
  return {events >= 20 && failures.empty(), msg.str()};
}

std::vector<lt::FuzzOutcome>& fuzz_outcomes() {
  static std::vector<lt::FuzzOutcome> outcomes;
  return outcomes;
}

const std::vector<lt::FuzzOutcome>& run_fuzz_once() {
  auto& outcomes = fuzz_outcomes();
  if (outcomes.empty()) {
    std::uint64_t seed = 0xACCE97;
    for (const auto& spec : {LayoutSpec::per_field(), lt::fuzz_arena_spec(), LayoutSpec::aos()}) {
      outcomes.push_back(lt::run_fuzz(spec, seed++, 1000, 200));
    }
  }
  return outcomes;
}

Verdict fuzz_equivalence() {
  const auto& outcomes = run_fuzz_once();
  std::ostringstream msg;
  bool pass = true;
  const char* names[] = {"per_field", "arena", "aos"};
  for (std::size_t i = 0; i < outcomes.size(); ++i) {
    const auto& o = outcomes[i];
    pass = pass && o.sequences == 1000 && o.divergences == 0;
    msg << (i ? "; " : "") << names[i] << ": " << o.sequences << " sequences, " << o.operations << " ops, "
        << o.divergences << " divergences";
    if (o.divergences) msg << " (first: " << o.first_divergence << ")";
  }
  return {pass, msg.str()};
}

Verdict jagged_invariants() {
  const auto& outcomes = run_fuzz_once();
  std::size_t checks = 0;
  std::size_t violations = 0;
  std::string first;
  for (const auto& o : outcomes) {
    checks += o.invariant_checks;
    violations += o.invariant_violations;
    if (first.empty()) first = o.first_violation;
  }
  std::ostringstream msg;
  msg << checks << " post-step checks, " << violations << " violations";
  if (violations) msg << " (first: " << first << ")";
  return {checks > 0 && violations == 0, msg.str()};
}

Verdict transfer_matrix() {
  const auto all = placements();
  std::size_t pairs = 0;
  std::size_t failures = 0;
  std::size_t block_pairs = 0;
  std::size_t block_failures = 0;
  std::string first;
  std::uint64_t seed = 500;
  for (const auto& from : all) {
    for (const auto& to : all) {
      ++pairs;
      const Collection host = random_collection(seed++, 1 + seed % lt::kMaxRecords);
      const Collection src = copy_to(host, from.spec, from.info);
      Collection dst = copy_to(random_collection(seed++, seed % 7), to.spec, to.info);
      const TransferStats stats = copy_collection(dst, src);
      Collection back = copy_to(random_collection(seed++, 3), from.spec, from.info);
      copy_collection(back, dst);
      const std::string expected = host.dump();
      bool ok = dump_anywhere(src) == expected && dump_anywhere(dst) == expected && dump_anywhere(back) == expected;
      if (from.spec.kind == LayoutKind::Arena && to.spec.kind == LayoutKind::Arena) {
        ++block_pairs;
        const bool one_per_buffer = stats.specification == "arena_block" &&
                                    stats.copy_ops == dst.layout().buffers().size() && stats.copy_ops == 1;
        if (!one_per_buffer) ++block_failures;
        ok = ok && one_per_buffer;
      }
      if (!ok) {
        ++failures;
        if (first.empty()) first = from.name() + " -> " + to.name() + " via " + stats.specification;
      }
    }
  }
  std::ostringstream msg;
  msg << pairs << " placement pairs, " << failures << " failures; arena->arena " << block_pairs << " pairs, "
      << block_failures << " not a single block copy";
  if (!first.empty()) msg << " (first: " << first << ")";
  return {pairs == 36 && failures == 0 && block_pairs == 4, msg.str()};
}

Verdict overlap_oracle() {
  std::size_t cases = 0;
  std::size_t mismatches = 0;
  std::string first;
  for (const auto& info : {ContextInfo::host(), ContextInfo::mockdev()}) {
    const lt::OverlapOutcome o = lt::run_overlap_oracle(info, 64);
    cases += o.cases;
    mismatches += o.mismatches;
    if (first.empty()) first = o.first_mismatch;
  }
  std::ostringstream msg;
  msg << cases << " copies up to length 64 on host and mockdev, " << mismatches << " mismatches";
  if (mismatches) msg << " (first: " << first << ")";
  return {cases > 0 && mismatches == 0, msg.str()};
}

template <class F>
bool faults(F&& f) {
  try {
    f();
  } catch (const AccessFault&) {
    return true;
  }
  return false;
}

Verdict mockdev_guard() {
  std::size_t attempts = 0;
  std::size_t faulted = 0;
  std::size_t migrations = 0;
  std::size_t migration_failures = 0;
  std::size_t injected = 0;
  std::size_t injected_failures = 0;
  std::string first;
  auto note = [&](const std::string& s) {
    if (first.empty()) first = s;
  };
  auto attempt = [&](auto&& f) {
    ++attempts;
    if (faults(f)) ++faulted;
  };

  std::uint64_t seed = 900;
  for (const auto& spec : {LayoutSpec::per_field(), lt::fuzz_arena_spec(), LayoutSpec::aos()}) {
    const Collection host = random_collection(seed++, 12);
    const std::string expected = host.dump();
    Collection dev = copy_to(host, spec, ContextInfo::mockdev());
    const Layout& l = dev.layout();
    for (std::size_t leaf = 0; leaf < dev.plan().leaves.size(); ++leaf) {
      const std::size_t n = l.rows(leaf) * dev.plan().leaves[leaf].slots;
      for (std::size_t i = 0; i < n; ++i) {
        attempt([&] { (void)l.element_ref(leaf, i, AccessMode::Read); });
        attempt([&] { (void)l.element_ref(leaf, i, AccessMode::Write); });
      }
      attempt([&] { (void)l.leaf_base(leaf, AccessMode::Read); });
    }
    for (const Buffer& b : l.buffers()) {
      attempt([&] { (void)memory().data(b, AccessMode::Read); });
      attempt([&] { (void)memory().data(b, AccessMode::Write); });
    }
    for (std::size_t i = 0; i < dev.size(); ++i) {
      attempt([&] { (void)dev[i].get<std::uint32_t>("id"); });
      attempt([&] { dev[i].get<float>("w") = 1.0f; });
    }
    attempt([&] { (void)dev.get_collection<float>("w"); });
    attempt([&] { (void)dev.global<std::uint32_t>("count"); });
    attempt([&] { (void)dev.dump(); });

    // Round trips host -> device -> other device -> host, in place.
    Collection m = copy_to(host, spec, ContextInfo::host());
    bool ok = true;
    for (const auto& info : {ContextInfo::mockdev(0), ContextInfo::mockdev(1), ContextInfo::mockdev(1, 3),
                             ContextInfo::host()}) {
      m.update_memory_context_info(info);
      ++migrations;
      ok = ok && m.context_info() == info && dump_anywhere(m) == expected;
    }
    if (!ok) {
      ++migration_failures;
      note("migration round trip of " + std::string(to_string(spec.kind)));
    }

    // Injected allocation failure at every allocation of the migration, both directions.
    for (const auto& [target, context] : {std::pair{ContextInfo::mockdev(), kMockDeviceContext},
                                          std::pair{ContextInfo::host(), kHostContext}}) {
      Collection s = copy_to(host, spec, target == ContextInfo::host() ? ContextInfo::mockdev() : ContextInfo::host());
      const ContextInfo before = s.context_info();
      for (std::int64_t k = 0;; ++k) {
        const auto live = memory().allocation_stats(context).live_allocations;
        memory().fail_allocation_after(context, k);
        bool threw = false;
        try {
          s.update_memory_context_info(target);
        } catch (const OutOfMemoryError&) {
          threw = true;
        }
        memory().fail_allocation_after(context, -1);
        if (!threw) {
          if (!(s.context_info() == target) || dump_anywhere(s) != expected) {
            ++injected_failures;
            note("migration after injected failures lost contents");
          }
          break;
        }
        ++injected;
        const bool intact = s.context_info() == before && dump_anywhere(s) == expected &&
                            memory().allocation_stats(context).live_allocations == live;
        if (!intact) {
          ++injected_failures;
          note("source not intact after injected failure " + std::to_string(k) + " of " +
               std::string(to_string(spec.kind)));
        }
        if (k > 1000) {
          ++injected_failures;
          note("migration never succeeded");
          break;
        }
      }
    }
  }
  std::ostringstream msg;
  msg << faulted << "/" << attempts << " host accesses faulted; " << migrations << " migrations, "
      << migration_failures << " lost contents; " << injected << " injected allocation failures, "
      << injected_failures << " left the source altered";
  if (!first.empty()) msg << " (first: " << first << ")";
  return {attempts > 0 && faulted == attempts && migration_failures == 0 && injected > 0 && injected_failures == 0,
          msg.str()};
}

Verdict overhead_check() {
  const fs::path dir = scratch_dir();
  const int runs = 5;
  std::map<std::pair<std::string, lb::Phase>, std::vector<double>> ratios;
  for (int r = 0; r < runs; ++r) {
    const fs::path csv = dir / ("overhead_" + std::to_string(r) + ".csv");
    run_cli("overhead -o \"" + csv.string() + "\"", dir / "overhead.log");
    std::ifstream in(csv);
    if (!in) return {false, "overhead run " + std::to_string(r) + " wrote no report"};
    const auto report = lb::compute_overhead(lb::read_report_csv(in), lb::overhead_pairs());
    for (const auto& line : report.lines) {
      if (!line.pair.gating) continue;
      const std::string pair = std::string(lb::to_string(line.pair.library)) + "/" +
                               std::string(lb::to_string(line.pair.baseline));
      ratios[{pair, line.phase}].push_back(line.median_ratio);
    }
  }
  bool pass = !ratios.empty();
  std::set<lb::Phase> phases;
  std::ostringstream msg;
  msg << "median of " << runs << " runs at 512x512:";
  for (const auto& [key, values] : ratios) {
    const double m = median(values);
    pass = pass && values.size() == static_cast<std::size_t>(runs) && m <= lb::kOverheadTolerance;
    phases.insert(key.second);
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.3f", m);
    msg << ' ' << key.first << ' ' << lb::to_string(key.second) << '=' << buf;
  }
  return {pass && phases.size() == 2, msg.str()};
}

Verdict bench_protocol() {
  const fs::path dir = scratch_dir();
  const fs::path report = dir / "bench_report.csv";
  const fs::path raw = dir / "bench_samples.csv";
  const int rc = run_cli("bench --grid 32 --repetitions 50 --keep-fastest 10 --events 10 -o \"" + report.string() +
                             "\" --raw-output \"" + raw.string() + "\"",
                         dir / "bench.log");
  if (rc != 0) return {false, "bench exited with status " + std::to_string(rc)};

  using Key = std::string;
  auto key_of = [](const std::vector<std::string>& c) { return c[0] + "," + c[1] + "," + c[2] + "," + c[3] + "," + c[4]; };
  std::map<Key, std::vector<double>> samples;
  std::map<Key, std::set<long>> repetitions;
  std::ifstream rin(raw);
  std::string line;
  std::getline(rin, line);
  while (std::getline(rin, line)) {
    const auto c = split(line);
    if (c.size() != 7) return {false, "malformed sample line '" + line + "'"};
    samples[key_of(c)].push_back(std::strtod(c[6].c_str(), nullptr));
    repetitions[key_of(c)].insert(std::strtol(c[5].c_str(), nullptr, 10));
  }

  std::size_t cells = 0;
  std::size_t mismatches = 0;
  std::string first;
  std::ifstream pin(report);
  std::getline(pin, line);
  while (std::getline(pin, line)) {
    const auto c = split(line);
    if (c.size() != 11) return {false, "malformed report line '" + line + "'"};
    ++cells;
    std::vector<double> v = samples[key_of(c)];
    bool ok = c[5] == "10" && c[6] == "50" && c[7] == "10" && v.size() == 50 && repetitions[key_of(c)].size() == 50;
    if (ok) {
      std::sort(v.begin(), v.end());
      double sum = 0.0;
      for (std::size_t i = 0; i < 10; ++i) sum += v[i];
      ok = sum / 10.0 == std::strtod(c[8].c_str(), nullptr);
    }
    if (!ok) {
      ++mismatches;
      if (first.empty()) first = line;
    }
  }
  std::ostringstream msg;
  msg << cells << " report cells recomputed from " << [&] {
    std::size_t n = 0;
    for (const auto& [k, v] : samples) n += v.size();
    return n;
  }() << " raw samples, " << mismatches << " mismatches";
  if (!first.empty()) msg << " (first: " << first << ")";
  return {cells == lb::all_configurations().size() * 2 * 2 && mismatches == 0, msg.str()};
}

}  // namespace

int main(int argc, char** argv) {
  const std::vector<Criterion> criteria = {
      {"cross-layout-oracle", cross_layout_oracle}, {"fuzz-equivalence", fuzz_equivalence},
      {"jagged-invariants", jagged_invariants},     {"transfer-matrix", transfer_matrix},
      {"overlap-oracle", overlap_oracle},           {"mockdev-guard", mockdev_guard},
      {"overhead", overhead_check},                 {"bench-protocol", bench_protocol},
  };
  std::set<std::string> only(argv + 1, argv + argc);
  int failed = 0;
  int ran = 0;
  for (const auto& c : criteria) {
    if (!only.empty() && only.count(c.name) == 0) continue;
    ++ran;
    const auto t0 = std::chrono::steady_clock::now();
    Verdict v;
    try {
      v = c.run();
    } catch (const std::exception& e) {
      v = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    char t[32];
    std::snprintf(t, sizeof t, "%.1fs", secs);
    std::cout << (v.pass ? "PASS " : "FAIL ") << c.name << ": " << v.detail << " [" << t << "]" << std::endl;
    if (!v.pass) ++failed;
  }
  std::error_code ec;
  fs::remove_all(fs::temp_directory_path() / ("layoutkit_acceptance_" + std::to_string(::getpid())), ec);
  std::cout << (failed == 0 ? "acceptance: PASS" : "acceptance: FAIL") << " (" << ran - failed << "/" << ran
            << " criteria)" << std::endl;
  return failed == 0 && ran > 0 ? 0 : 1;
}

// SPDX-License-Identifier: Apache-2.0
//
// Experiment runner: executes scenario files on the simulator and emits the
// metric CSVs, or compares two finished runs.

#include <CLI11.hpp>
#include <iostream>

#include "wbft/history.hpp"
#include "wbft/report.hpp"

using namespace wbft;

namespace {

int cmd_run(const std::string& scenario_path, std::optional<std::uint64_t> seed,
            std::optional<std::string> jitter, std::optional<std::string> pattern,
            std::string outdir) {
  std::vector<std::string> errors;
  Scenario sc = load_scenario(scenario_path, errors);
  if (errors.empty()) {
    if (seed) sc.seed = *seed;
    if (jitter) sc.jitter = *jitter == "on";
    if (pattern) sc.pattern = (*pattern == "seven" || *pattern == "seven_step")
                                  ? Pattern::seven_step
                                  : Pattern::three_step;
    for (const auto& p : sc.validate()) errors.push_back(p);
  }
  if (!errors.empty()) {
    for (const auto& e : errors) std::cerr << "scenario error: " << e << '\n';
    return 1;
  }

  if (outdir.empty()) {
    auto slash = scenario_path.find_last_of('/');
    std::string stem = slash == std::string::npos ? scenario_path : scenario_path.substr(slash + 1);
    auto dot = stem.find_last_of('.');
    if (dot != std::string::npos) stem = stem.substr(0, dot);
    outdir = "out-" + stem + "-seed" + std::to_string(sc.seed);
  }

  try {
    Simulation sim(sc);
    Trace trace = sim.run();
    write_reports(trace, sc, outdir);
    std::uint32_t finals = 0;
    for (const auto& op : trace.ops)
      if (op.op.final_ts >= 0) ++finals;
    std::cout << "run complete: " << trace.consensus.size() << " consensus rows, " << finals
              << "/" << trace.ops.size() << " operations finalized, end "
              << format_ms(trace.end_time) << " ms\n"
              << "reports in " << outdir << '\n';
    if (!trace.all_clients_done)
      std::cout << "warning: scenario ended before every client finished\n";
    return 0;
  } catch (const std::exception& e) {
    std::cerr << "runtime error: " << e.what() << '\n';
    return 2;
  }
}

int cmd_compare(const std::string& dir_a, const std::string& dir_b, const std::string& out) {
  try {
    LoadedReport a = load_report(dir_a);
    LoadedReport b = load_report(dir_b);
    std::string error;
    auto cmp = compare_reports(a, b, &error);
    if (!cmp) {
      std::cerr << error << '\n';
      return 1;
    }
    std::cout << "speedup of " << dir_b << " over " << dir_a << " (baseline):\n";
    std::cout << "  consensus: " << cmp->consensus_speedup << "x\n";
    for (const auto& [level, s] : cmp->level_speedup)
      std::cout << "  " << level << ": " << s << "x\n";
    if (!out.empty()) write_compare_csv(*cmp, out);
    return 0;
  } catch (const std::exception& e) {
    std::cerr << "compare failed: " << e.what() << '\n';
    return 2;
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"weighted-quorum BFT simulator"};
  app.require_subcommand(1);

  std::string scenario_path, outdir;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> jitter, pattern;
  auto* run = app.add_subcommand("run", "execute a scenario and write metric CSVs");
  run->add_option("scenario", scenario_path, "scenario file")->required();
  run->add_option("--seed", seed, "override the scenario seed");
  run->add_option("--out", outdir, "output directory (default derived from scenario)");
  run->add_option("--jitter", jitter, "on|off")->check(CLI::IsMember({"on", "off"}));
  run->add_option("--pattern", pattern, "three|seven")
      ->check(CLI::IsMember({"three", "seven", "three_step", "seven_step"}));

  std::string dir_a, dir_b, cmp_out;
  auto* cmp = app.add_subcommand("compare", "speedups of run B relative to baseline run A");
  cmp->add_option("baseline", dir_a, "baseline report directory")->required();
  cmp->add_option("candidate", dir_b, "candidate report directory")->required();
  cmp->add_option("--out", cmp_out, "write speedups.csv here");

  CLI11_PARSE(app, argc, argv);

  if (run->parsed()) return cmd_run(scenario_path, seed, jitter, pattern, outdir);
  return cmd_compare(dir_a, dir_b, cmp_out);
}

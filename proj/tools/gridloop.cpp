/* gridloop: run, validate, serve and replay microgrid scenarios.
 *
 * Exit codes: 0 success, 1 validation error, 2 runtime divergence,
 * 3 digest mismatch.
 *
 * SPDX-License-Identifier: Apache-2.0
 */

#include "outputs.hpp"

#include <gridloop/engine/simulation.hpp>

#include <CLI11.hpp>
#include <fmt/format.h>

#include <chrono>
#include <fstream>
#include <iostream>

using namespace gridloop;

namespace {

using tools::kDiverged;
using tools::kInvalid;
using tools::kMismatch;
using tools::kOk;
using tools::print_summary;
using tools::write_outputs;

void print_problems(const ValidationError &e) {
  fmt::print(stderr, "invalid scenario:\n");
  for (const auto &p : e.problems())
    fmt::print(stderr, "  - {}\n", p);
}

int cmd_run(const std::string &path, const std::string &out, bool csv,
            std::optional<std::uint64_t> seed) {
  auto scenario = engine::load_scenario(path);
  if (seed)
    scenario.seed = *seed;
  auto start = std::chrono::steady_clock::now();
  auto record = engine::run_scenario(scenario);
  double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  print_summary(record, wall);
  if (!out.empty())
    write_outputs(record, scenario, out, csv);
  return record.truncated() ? kDiverged : kOk;
}

int cmd_validate(const std::string &path) {
  auto scenario = engine::load_scenario(path);
  if (auto p = scenario.problems(); !p.empty())
    throw ValidationError(std::move(p));
  fmt::print("{}: ok ({} events, {} frames)\n", path, scenario.events.size(),
             scenario.frame_count());
  return kOk;
}

int cmd_replay(const std::string &path, const std::string &expected) {
  std::ifstream in(path);
  if (!in)
    throw ValidationError({fmt::format("cannot open record {}", path)});
  engine::json doc;
  try {
    doc = engine::json::parse(in);
  } catch (const engine::json::parse_error &e) {
    throw ValidationError({fmt::format("{}: {}", path, e.what())});
  }
  if (!doc.contains("scenario"))
    throw ValidationError({fmt::format("{} has no embedded scenario", path)});
  auto scenario = engine::parse_scenario(doc["scenario"]);
  auto check = expected.empty() ? doc.value("digest", std::string{}) : expected;
  auto record = engine::run_scenario(scenario);
  fmt::print("digest    {}\n", record.digest);
  if (record.digest != check) {
    fmt::print(stderr, "digest mismatch: expected {}\n", check);
    return kMismatch;
  }
  fmt::print("replay matches\n");
  return record.truncated() ? kDiverged : kOk;
}

} // namespace


int main(int argc, char **argv) {
  CLI::App app{"Deterministic two-generator microgrid twin"};
  app.require_subcommand(1);

  std::string scenario_path, out_dir, record_path, digest;
  tools::ServeOptions serve_opts;
  bool csv = false;
  std::optional<std::uint64_t> seed;

  auto *run = app.add_subcommand("run", "Run a scenario offline");
  run->add_option("scenario", scenario_path, "Scenario file")->required();
  run->add_option("--out", out_dir, "Output directory for record, logs and CSVs");
  run->add_flag("--csv", csv, "Write CSV files (needs --out)");
  run->add_option("--seed", seed, "Override the scenario seed");

  auto *validate = app.add_subcommand("validate", "Check a scenario file");
  validate->add_option("scenario", scenario_path, "Scenario file")->required();

  auto *serve = app.add_subcommand("serve", "Run a scenario live for operator clients");
  serve->add_option("scenario", scenario_path, "Scenario file")->required();
  serve->add_option("--listen", serve_opts.listen, "host:port to listen on")->required();
  serve->add_option("--pace", serve_opts.pace, "Simulated seconds per wall second (0: unpaced)")
      ->check(CLI::NonNegativeNumber);
  serve->add_option("--wait", serve_opts.wait_subscribers,
                    "Subscribers to wait for before starting the run");
  serve->add_option("--max-lag", serve_opts.max_lag,
                    "Wall seconds behind schedule before pacing restarts from now")
      ->check(CLI::NonNegativeNumber);
  serve->add_option("--decimation", serve_opts.decimation, "Control periods per streamed frame")
      ->check(CLI::PositiveNumber);
  serve->add_option("--out", out_dir, "Output directory for record and logs");

  auto *replay = app.add_subcommand("replay", "Re-run a record and compare digests");
  replay->add_option("record", record_path, "record.json from a previous run")->required();
  replay->add_option("--check", digest, "Expected digest (default: the recorded one)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError &e) {
    return app.exit(e) == 0 ? kOk : kInvalid;
  }

  try {
    if (*run)
      return cmd_run(scenario_path, out_dir, csv, seed);
    if (*validate)
      return cmd_validate(scenario_path);
    if (*serve)
      return tools::serve_main(scenario_path, out_dir, serve_opts);
    if (*replay)
      return cmd_replay(record_path, digest);
  } catch (const ValidationError &e) {
    print_problems(e);
    return kInvalid;
  } catch (const std::exception &e) {
    fmt::print(stderr, "error: {}\n", e.what());
    return kDiverged;
  }
  return kOk;
}

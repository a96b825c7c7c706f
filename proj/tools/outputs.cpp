/* SPDX-License-Identifier: Apache-2.0 */

#include "outputs.hpp"

#include <fmt/format.h>

#include <fstream>

namespace gridloop::tools {

namespace {

void write_text(const std::filesystem::path &path, const std::string &text) {
  std::ofstream out(path, std::ios::binary);
  out << text;
  if (!out)
    throw Error(fmt::format("cannot write {}", path.string()));
}

} // namespace

void write_outputs(const engine::SimulationRecord &r, const engine::Scenario &s,
                   const std::filesystem::path &dir, bool csv) {
  std::filesystem::create_directories(dir);
  write_text(dir / "record.json", engine::record_summary(r, s).dump(2) + "\n");
  std::string log;
  for (const auto &line : r.decision_log)
    log += line + "\n";
  write_text(dir / "decisions.log", log);
  std::string events;
  for (const auto &e : r.events)
    events += fmt::format("t={:.6f} {} {} {}\n", e.t, e.source, e.kind, e.detail);
  write_text(dir / "events.log", events);
  if (csv)
    engine::export_csv(r, engine::csv_groups(), dir);
}

void print_summary(const engine::SimulationRecord &r, double wall) {
  fmt::print("scenario  {}\n", r.scenario_name);
  fmt::print("frames    {}\n", r.frames.size());
  fmt::print("events    {}\n", r.events.size());
  fmt::print("energy    imbalance {:.3e}\n", r.energy.relative_imbalance());
  fmt::print("kcl       max residual {:.3e} A\n", r.max_kcl_residual);
  fmt::print("wall      {:.2f} s\n", wall);
  fmt::print("digest    {}\n", r.digest);
  if (r.diagnostic)
    fmt::print("diverged  t={:.6f} {}: {}\n", r.diagnostic->t, r.diagnostic->kind,
               r.diagnostic->message);
}

} // namespace gridloop::tools

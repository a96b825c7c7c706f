/* SPDX-License-Identifier: Apache-2.0 */

#pragma once

#include <gridloop/engine/simulation.hpp>

#include <filesystem>
#include <string>

namespace gridloop::tools {

constexpr int kOk = 0;
constexpr int kInvalid = 1;
constexpr int kDiverged = 2;
constexpr int kMismatch = 3;

void write_outputs(const engine::SimulationRecord &r, const engine::Scenario &s,
                   const std::filesystem::path &dir, bool csv);
void print_summary(const engine::SimulationRecord &r, double wall);

struct ServeOptions {
  std::string listen;
  double pace = 1.0;
  int wait_subscribers = 0;
  int decimation = 20;
  double max_lag = 0.25; // wall s behind schedule before the pacing origin moves
};

int serve_main(const std::string &scenario_path, const std::string &out_dir,
               const ServeOptions &opts);

} // namespace gridloop::tools

/* gridloop serve: paced live run with the control service attached.
 *
 * SPDX-License-Identifier: Apache-2.0
 */

#include "outputs.hpp"

#include <gridloop/service/tcp_server.hpp>

#include <fmt/format.h>

#include <chrono>
#include <csignal>
#include <cstdlib>
#include <thread>

namespace gridloop::tools {

namespace {

volatile std::sig_atomic_t g_interrupted = 0;

void on_signal(int) { g_interrupted = 1; }

} // namespace

int serve_main(const std::string &scenario_path, const std::string &out_dir,
               const ServeOptions &opts) {
  auto scenario = engine::load_scenario(scenario_path);
  engine::Simulation sim(scenario);

  service::ServiceOptions so;
  if (const char *tok = std::getenv("GRIDLOOP_TOKEN"))
    so.token = tok;
  else
    fmt::print(stderr, "warning: GRIDLOOP_TOKEN is not set; any token is accepted\n");
  so.decimation = opts.decimation;
  service::ControlService svc(sim, so);
  svc.attach();
  service::TcpServer server(svc, opts.listen);
  server.start();
  fmt::print("listening on port {}\n", server.port());
  std::fflush(stdout);

  std::signal(SIGINT, on_signal);
  std::signal(SIGTERM, on_signal);
  while (!g_interrupted && svc.subscriber_count() < static_cast<std::size_t>(opts.wait_subscribers))
    std::this_thread::sleep_for(std::chrono::milliseconds(10));

  using clock = std::chrono::steady_clock;
  const auto start = clock::now();
  const auto max_lag = std::chrono::duration_cast<clock::duration>(
      std::chrono::duration<double>(opts.max_lag));
  auto origin = start;
  std::size_t lag_resets = 0;
  while (!g_interrupted && sim.step()) {
    if (opts.pace > 0.0) {
      auto due = origin + std::chrono::duration_cast<clock::duration>(
                              std::chrono::duration<double>(sim.time() / opts.pace));
      const auto now = clock::now();
      if (now - due > max_lag) {
        origin += now - due;
        ++lag_resets;
      } else {
        std::this_thread::sleep_until(due);
      }
    }
  }
  auto record = sim.record();
  const double wall = std::chrono::duration<double>(clock::now() - start).count();
  svc.finish(record);
  server.flush(2.0);
  server.stop();
  print_summary(record, wall);
  if (!out_dir.empty())
    write_outputs(record, sim.scenario(), out_dir, false);
  if (lag_resets)
    fmt::print("pacing fell more than {:.3f} s behind {} times\n", opts.max_lag, lag_resets);
  if (g_interrupted)
    fmt::print("interrupted at t={:.3f} s\n", sim.time());
  return record.truncated() ? kDiverged : kOk;
}

} // namespace gridloop::tools

/* The hardware-in-the-loop cycle. Each control period:
 *   devices sample -> boundary events apply -> controller decides ->
 *   actuators apply -> plant steps (control_period / plant_dt times).
 *
 * SPDX-License-Identifier: Apache-2.0
 */

#pragma once

#include <gridloop/engine/scenario.hpp>
#include <gridloop/plant/plant.hpp>

#include <deque>
#include <functional>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

namespace gridloop::engine {

struct EventLogEntry {
  double t = 0.0;          // control-period boundary at which it was applied
  std::string kind;
  std::string detail;
  std::string source;      // "scenario" or "live"
  bool operator==(const EventLogEntry &) const = default;
};

struct Diagnostic {
  std::string kind;        // "divergence", "singular_network", ...
  std::string message;
  double t = 0.0;
};

struct SimulationRecord {
  std::string scenario_name;
  std::uint64_t seed = 0;
  double control_period = 1e-3;
  std::vector<std::string> generator_ids;
  std::vector<devices::TelemetryFrame> frames;
  std::vector<controller::ControllerDecision> decisions;
  std::vector<std::string> decision_log;
  std::vector<EventLogEntry> events;
  std::optional<Diagnostic> diagnostic;
  std::vector<plant::SetState> final_sets;
  plant::Topology final_topology;
  double final_time = 0.0;
  plant::EnergyLedger energy;
  double max_kcl_residual = 0.0;
  std::uint64_t stale_frames = 0;
  std::string digest; // SHA-256 hex

  bool truncated() const { return diagnostic.has_value(); }
};

/// SHA-256 over every frame value, decision line, event entry and the
/// final plant state, in that order.
std::string record_digest(const SimulationRecord &r);

struct InjectResult {
  bool accepted = false;
  std::string reason;
};

/// The controller request an event turns into (generator trips and operator
/// commands); nullopt for plant-side events.
std::optional<controller::Request> operator_request(const ScenarioEvent &e, double t,
                                                    const std::string &fallback_id);

class Simulation {
public:
  /// Throws ValidationError if the scenario has problems.
  explicit Simulation(Scenario scenario);
  ~Simulation();

  const Scenario &scenario() const { return scenario_; }
  bool finished() const;
  std::size_t period() const { return period_; }
  double time() const;

  /// Advances one control period. False once finished or diverged.
  bool step();
  /// Runs to the end and returns the record.
  SimulationRecord run();
  /// Record so far, with digest.
  SimulationRecord record() const;

  /// Thread-safe. Applied at the next control-period boundary.
  InjectResult inject(const ScenarioEvent &event, std::string source = "live");

  std::function<void(const devices::TelemetryFrame &, const controller::ControllerDecision &)>
      on_period;
  std::function<void(const EventLogEntry &)> on_event;

  const plant::Plant &plant() const;
  const controller::ControllerState &controller_state() const { return ctrl_; }

private:
  void apply(const ScenarioEvent &e, const std::string &source);
  EventLogEntry describe(const ScenarioEvent &e, const std::string &source) const;

  Scenario scenario_;
  std::unique_ptr<plant::Plant> plant_;
  std::unique_ptr<devices::DeviceBank> devices_;
  controller::ControllerState ctrl_;
  plant::Actuation actuation_;
  std::size_t period_ = 0;
  std::size_t frames_total_ = 0;
  std::size_t next_event_ = 0;
  int ratio_ = 10;
  int request_counter_ = 0;

  std::vector<devices::TelemetryFrame> frames_;
  std::vector<controller::ControllerDecision> decisions_;
  std::vector<std::string> decision_log_;
  std::vector<EventLogEntry> events_;
  std::optional<Diagnostic> diagnostic_;

  mutable std::mutex inbox_mutex_;
  std::deque<std::pair<ScenarioEvent, std::string>> inbox_;
};

SimulationRecord run_scenario(const Scenario &scenario);

// ---------------------------------------------------------------------------
// Export

/// Valid groups: generators, load_bus, dc, decisions.
const std::vector<std::string> &csv_groups();

/// CSV text per group, header row then one row per frame. Throws
/// ValidationError naming the valid groups if one is unknown.
std::map<std::string, std::string> render_csv(const SimulationRecord &r,
                                              const std::vector<std::string> &groups);

/// Writes <dir>/<group>.csv for each group; returns the paths.
std::vector<std::filesystem::path> export_csv(const SimulationRecord &r,
                                              const std::vector<std::string> &groups,
                                              const std::filesystem::path &dir);

json to_json(const devices::TelemetryFrame &f);
json to_json(const controller::ControllerDecision &d, const controller::ControllerConfig &cfg);
json to_json(const EventLogEntry &e);

/// record.json: embedded scenario, digest and summary (not the frames).
json record_summary(const SimulationRecord &r, const Scenario &s);

} // namespace gridloop::engine

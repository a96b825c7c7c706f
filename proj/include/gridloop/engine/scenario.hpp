/* Scenario documents: plant, devices, controller, initial state and a
 * time-ordered event script. Stored as JSON, schema_version 1.
 *
 * SPDX-License-Identifier: Apache-2.0
 */

#pragma once

#include <gridloop/controller/controller.hpp>
#include <gridloop/devices/device_bank.hpp>
#include <gridloop/plant/config.hpp>

#include <nlohmann/json.hpp>

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace gridloop::engine {

using nlohmann::json;

inline constexpr int kSchemaVersion = 1;

enum class EventKind { load_step, relay_force, generator_trip, sensor_bias, operator_command };

const char *to_string(EventKind k);
std::optional<EventKind> event_kind_from_string(const std::string &s);

/// Params by kind:
///   load_step        {load, resistance, reactance}
///   relay_force      {relay, state}                      (relay or breaker, no delay)
///   generator_trip   {generator}
///   sensor_bias      {channel, bias}
///   operator_command {command, target, state?, voltage_setpoint?,
///                     speed_setpoint_rpm?, auto_match?, request_id?}
struct ScenarioEvent {
  double t = 0.0;
  EventKind kind = EventKind::load_step;
  json params = json::object();
};

struct Timing {
  double plant_dt = 1e-4;
  double control_period = 1e-3;

  /// Plant steps per control period; 0 if the ratio is not an integer.
  int ratio() const;
};

struct InitialGenerator {
  double terminal_voltage = 220.0;
  double speed_rpm = 1400.0;
  double phase_offset_deg = 0.0; // disconnected sets only
};

struct InitialConditions {
  std::map<std::string, devices::SwitchState> switches; // default: every switch closed
  std::vector<InitialGenerator> generators;             // default: nominal
};

struct Scenario {
  int schema_version = kSchemaVersion;
  std::string name = "unnamed";
  std::uint64_t seed = 0;
  double duration = 1.0;
  Timing timing;
  plant::PlantConfig plant = plant::PlantConfig::defaults();
  devices::DeviceConfig devices;
  controller::ControllerConfig controller =
      controller::ControllerConfig::for_plant(plant::PlantConfig::defaults());
  InitialConditions initial;
  std::vector<ScenarioEvent> events;

  /// Frames recorded: floor(duration / control_period), with a 1e-9 guard
  /// against representation error.
  std::size_t frame_count() const;
  plant::Topology initial_topology() const;
  InitialGenerator initial_generator(std::size_t set) const;

  std::vector<std::string> problems() const;
};

/// Reason the event is not applicable to the scenario, if any.
std::optional<std::string> event_problem(const Scenario &s, const ScenarioEvent &e);

/// Parses a scenario; unspecified fields take their defaults. Throws
/// ValidationError for malformed documents (not for semantic problems).
Scenario parse_scenario(const json &doc);
Scenario load_scenario(const std::filesystem::path &path);
json to_json(const Scenario &s);

json to_json(const ScenarioEvent &e);
ScenarioEvent parse_event(const json &doc);

} // namespace gridloop::engine

/* One sampling instant of every measurement, as the supervisor sees it.
 *
 * SPDX-License-Identifier: Apache-2.0
 */

#pragma once

#include <gridloop/devices/relay.hpp>

#include <optional>
#include <string>
#include <vector>

namespace gridloop::devices {

struct GeneratorTelemetry {
  std::string id;
  double terminal_voltage_rms = 0.0; // V
  double stator_current_rms = 0.0;   // A
  double real_power = 0.0;           // W
  double reactive_power = 0.0;       // var
  double speed_rpm = 0.0;
  double torque = 0.0;               // N m, prime-mover shaft
  double frequency = 0.0;            // Hz, terminal voltage
  double bus_voltage_rms = 0.0;      // V, line side of the breaker
  double phase_difference = 0.0;     // deg, terminal minus line side
};

struct LoadBusTelemetry {
  double voltage_rms = 0.0;
  double current_rms = 0.0;
  double frequency = 0.0;
};

struct DcTelemetry {
  double field_voltage = 0.0;   // generator field converter output
  double field_current = 0.0;
  double armature_voltage = 0.0; // prime-mover armature converter output
  double armature_current = 0.0;
};

struct SwitchTelemetry {
  std::string id;
  SwitchState state = SwitchState::open;
  bool operator==(const SwitchTelemetry &) const = default;
};

struct TelemetryFrame {
  double timestamp = 0.0;
  std::vector<GeneratorTelemetry> generators;
  LoadBusTelemetry load_bus;
  std::vector<DcTelemetry> dc; // per machine set
  std::vector<SwitchTelemetry> breakers;
  std::vector<SwitchTelemetry> relays;

  std::optional<SwitchState> switch_state(const std::string &id) const;
};

} // namespace gridloop::devices

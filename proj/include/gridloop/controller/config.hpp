/* Supervisor limits, tolerances and regulator gains.
 *
 * SPDX-License-Identifier: Apache-2.0
 */

#pragma once

#include <gridloop/plant/config.hpp>

#include <string>
#include <vector>

namespace gridloop::controller {

/// PI law with feed-forward bias; output clamp is fixed at [0, 1].
struct PiGains {
  double kp = 0.0;
  double ki = 0.0;
  double bias = 0.0;
};

struct SyncSettings {
  double voltage_tolerance = 0.05;  // |dV| / V_nominal
  double frequency_tolerance = 0.2; // Hz
  double phase_tolerance = 10.0;    // deg
  int confirmation_periods = 20;
  double dead_bus_fraction = 0.10;  // bus below this fraction of nominal is dead
  bool dead_bus_close = true;
  // Automatic matching: frequency offset commanded per degree of phase error,
  // capped at max_slip.
  double phase_gain = 0.0025;       // Hz / deg
  double max_slip = 0.15;           // Hz
};

struct GeneratorRating {
  std::string id;
  std::string breaker_id;
  double rated_power = 0.0;     // W
  double rated_speed_rpm = 0.0;
  int pole_pairs = 1;
};

struct ShedTarget {
  std::string load_id;
  std::string relay_id;
  int priority = 0;
};

struct ControllerConfig {
  double nominal_voltage = 220.0;     // terminal-voltage setpoint, V
  double voltage_tolerance = 0.05;    // band, fraction of nominal
  double voltage_permissible = 0.15;  // beyond this deviation a violation is beyond-band
  double branch_current_limit = 16.0; // A
  double permissible_band = 1.10;     // in-band up to this multiple of a limit
  double speed_setpoint_rpm = 1400.0;
  double nominal_frequency = 1400.0 * 2 / 60.0;
  double frequency_band = 0.5;        // Hz
  double frequency_permissible = 1.5; // Hz
  SyncSettings sync;
  PiGains excitation{0.006, 0.012, 0.6};
  PiGains speed{4.0, 10.0, 0.9};
  double speed_droop = 0.05;          // per unit speed per unit power
  double sharing_time_constant = 1.0; // s, low-pass on the power-sharing error
  int trip_confirmation_periods = 50;
  double switch_retry_time = 0.05;    // s before re-sending an unanswered breaker open
  double control_period = 1e-3;       // s
  std::vector<GeneratorRating> generators;
  std::vector<ShedTarget> shedding_order; // ascending priority

  /// Defaults bound to a plant: ratings, breaker ids and shedding order.
  static ControllerConfig for_plant(const plant::PlantConfig &plant);

  std::vector<std::string> problems(const plant::PlantConfig &plant) const;
  int generator_index(const std::string &id) const;
};

} // namespace gridloop::controller

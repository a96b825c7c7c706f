/* Plant configuration: machine, converter, network and load ratings.
 *
 * Defaults describe the two motor-generator sets of the bench prototype
 * (1.2 kW / 1400 RPM alternators driven by 1 kW, 220 V separately excited
 * DC motors) feeding a common load bus through two short lines.
 *
 * SPDX-License-Identifier: Apache-2.0
 */

#pragma once

#include <gridloop/common.hpp>

#include <string>
#include <vector>

namespace gridloop::plant {

/// Separately excited DC motor used as prime mover.
struct PrimeMoverParams {
  double rated_power = 1000.0;        // W, shaft
  double rated_voltage = 220.0;       // V, armature
  double rated_field_current = 0.55;  // A
  double armature_resistance = 2.0;   // ohm
  double armature_time_constant = 0.05; // s, L_a / R_a

  double armature_inductance() const { return armature_time_constant * armature_resistance; }
  double field_resistance() const { return rated_voltage / rated_field_current; }
};

/// Synchronous alternator modelled as an EMF behind synchronous impedance.
struct GeneratorParams {
  double rated_power = 1200.0;       // W
  double rated_speed_rpm = 1400.0;   // synchronous speed at nominal frequency
  int pole_pairs = 2;
  double synchronous_reactance = 20.0; // ohm
  double stator_resistance = 0.0;      // ohm
  double exciter_time_constant = 0.5;  // s
  double field_resistance = 400.0;     // ohm
  /// Open-circuit EMF per field volt at rated speed.
  double emf_per_field_volt = 400.0 / 220.0;

  double rated_speed() const { return rpm_to_rad_per_s(rated_speed_rpm); }
  Complex synchronous_impedance() const { return {stator_resistance, synchronous_reactance}; }
};

/// One prime-mover / alternator set on a common shaft.
struct MachineSetConfig {
  std::string id;          // "G1"
  std::string breaker_id;  // "B1"
  GeneratorParams generator;
  PrimeMoverParams prime_mover;
  double inertia = 0.05;   // kg m^2, whole shaft
  double damping = 0.01;   // N m s
  Complex line_impedance{0.5, 1.0}; // generator bus to load bus
};

/// DC supply rails feeding the buck converters.
///
/// The power pack rating lists 3.5 A, 220 V, 230 V and 10 A without saying
/// which rail carries which rating. 220 V / 10 A is taken as the excitation
/// rail (generator fields and motor fields); 230 V feeds the armatures.
struct SupplyRails {
  double excitation_voltage = 220.0;
  double excitation_current = 10.0;
  double armature_voltage = 230.0;
  double armature_current = 10.0;
};

/// Tachometer / torque meter ranges.
struct TorqueMeterRange {
  double max_speed_rpm = 3000.0;
  double max_power = 5500.0;  // W
  double max_torque = 17.5;   // N m
};

enum class LoadKind { resistive, inductive };

struct LoadElement {
  std::string id;
  LoadKind kind = LoadKind::resistive;
  Complex impedance{100.0, 0.0};
  int priority = 0;       // lower sheds first
  std::string relay_id;
};

struct LoadBank {
  std::vector<LoadElement> elements;

  const LoadElement *find(const std::string &id) const;
  LoadElement *find(const std::string &id);
};

struct PlantConfig {
  std::vector<MachineSetConfig> sets;
  LoadBank loads;
  SupplyRails rails;
  TorqueMeterRange torque_meter;
  double nominal_voltage = 220.0;          // V rms, single-phase equivalent
  double load_switch_current_limit = 16.0; // A
  double sensor_reference_voltage = 3.3;   // V

  /// Electrical frequency at the rated speed of the first set.
  double nominal_frequency() const;
  double rated_current() const;

  /// Two identical sets and four switchable loads totalling about half of
  /// the installed generation at nominal voltage.
  static PlantConfig defaults();

  /// Returns every violated invariant; empty when valid.
  std::vector<std::string> problems() const;
};

} // namespace gridloop::plant

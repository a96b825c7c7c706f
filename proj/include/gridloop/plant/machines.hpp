/* Prime mover, alternator and buck converter models.
 *
 * SPDX-License-Identifier: Apache-2.0
 */

#pragma once

#include <gridloop/plant/config.hpp>

#include <optional>

namespace gridloop::plant {

struct PrimeMoverState {
  double armature_voltage = 0.0; // V
  double armature_current = 0.0; // A
  double field_current = 0.0;    // A
  double shaft_torque = 0.0;     // N m, electromagnetic
  double shaft_speed = 0.0;      // rad/s
  double shaft_power = 0.0;      // W
};

struct GeneratorState {
  double rotor_angle = 0.0;   // electrical rad, against the synchronous frame
  double rotor_speed = 0.0;   // mechanical rad/s
  double field_voltage = 0.0; // V
  double internal_emf = 0.0;  // V, magnitude
  Complex terminal_voltage{}; // V
  Complex stator_current{};   // A

  Complex emf_phasor() const { return std::polar(internal_emf, rotor_angle); }
};

struct BuckConverter {
  double duty_cycle = 0.0;
  double input_voltage = 0.0;
  double output_voltage = 0.0;
};

/// Averaged buck converter output. Throws DomainError for duty outside [0, 1].
double buck_output(const BuckConverter &converter);

/// Back-EMF constant k*phi at the rated field current, derived from the motor
/// ratings and the rated shaft speed of the set.
double rated_flux_constant(const PrimeMoverParams &pm, double rated_speed);

/// k*phi for a given field supply voltage (linear magnetics).
double flux_constant(const PrimeMoverParams &pm, double rated_speed, double field_supply);

/// Steady-state open-circuit EMF for a field voltage at a shaft speed.
double excitation_emf(const GeneratorParams &gen, double field_voltage, double rotor_speed);

/// Time derivatives shared by the stand-alone steps and the coupled plant.
double armature_current_rate(const PrimeMoverParams &pm, double flux, double armature_voltage,
                             double armature_current, double speed);
double emf_rate(const GeneratorParams &gen, double field_voltage, double speed, double emf);

/// Advances a DC prime mover driving a pure torque load by one Heun step.
/// The shaft inertia is the set inertia; friction is carried by the alternator.
PrimeMoverState step_prime_mover(const MachineSetConfig &set, const PrimeMoverState &state,
                                 double armature_voltage, double field_supply,
                                 double load_torque, double dt);

/// Stator current, air-gap power and electrical torque of a machine against a
/// terminal voltage. `terminal` is empty when the breaker is open.
struct MachineElectrical {
  Complex terminal_voltage;
  Complex stator_current;
  double airgap_power = 0.0;
};
MachineElectrical machine_electrical(const GeneratorParams &gen, Complex emf,
                                     std::optional<Complex> terminal);

/// Electrical torque from air-gap power and mechanical speed. Zero when no
/// stator current flows; DegenerateSpeed when power flows at zero speed.
double electrical_torque(const GeneratorState &gen, const GeneratorParams &params);
double electrical_torque(double airgap_power, double rotor_speed);

/// Advances one alternator by one Heun step against a fixed terminal voltage
/// (or open breaker) and fixed mechanical torque.
GeneratorState step_generator(const MachineSetConfig &set, const GeneratorState &state,
                              double mech_torque, double field_voltage,
                              std::optional<Complex> network_interface, double dt);

/// Throws IntegrationDivergence if any listed quantity is non-finite.
void require_finite(const char *quantity, double value);

} // namespace gridloop::plant

/* SPDX-License-Identifier: Apache-2.0 */

#include <gridloop/plant/machines.hpp>

#include <algorithm>
#include <cmath>

#include <fmt/format.h>

namespace gridloop::plant {

void require_finite(const char *quantity, double value) {
  if (!std::isfinite(value))
    throw IntegrationDivergence(quantity, value);
}

double buck_output(const BuckConverter &converter) {
  if (!(converter.duty_cycle >= 0.0 && converter.duty_cycle <= 1.0))
    throw DomainError(fmt::format("buck duty cycle {} outside [0, 1]", converter.duty_cycle));
  return converter.duty_cycle * converter.input_voltage;
}

double rated_flux_constant(const PrimeMoverParams &pm, double rated_speed) {
  // V = k*w + R*T/k with T = P/w, larger root (low-loss operating point).
  const double v = pm.rated_voltage;
  const double disc = v * v - 4.0 * pm.armature_resistance * pm.rated_power;
  if (disc < 0.0)
    throw DomainError("prime mover ratings admit no operating point");
  return (v + std::sqrt(disc)) / (2.0 * rated_speed);
}

double flux_constant(const PrimeMoverParams &pm, double rated_speed, double field_supply) {
  const double field_current = std::max(field_supply, 0.0) / pm.field_resistance();
  return rated_flux_constant(pm, rated_speed) * field_current / pm.rated_field_current;
}

double excitation_emf(const GeneratorParams &gen, double field_voltage, double rotor_speed) {
  return gen.emf_per_field_volt * std::max(field_voltage, 0.0) * std::max(rotor_speed, 0.0) /
         gen.rated_speed();
}

double armature_current_rate(const PrimeMoverParams &pm, double flux, double armature_voltage,
                             double armature_current, double speed) {
  return (armature_voltage - flux * speed - pm.armature_resistance * armature_current) /
         pm.armature_inductance();
}

double emf_rate(const GeneratorParams &gen, double field_voltage, double speed, double emf) {
  return (excitation_emf(gen, field_voltage, speed) - emf) / gen.exciter_time_constant;
}

PrimeMoverState step_prime_mover(const MachineSetConfig &set, const PrimeMoverState &state,
                                 double armature_voltage, double field_supply,
                                 double load_torque, double dt) {
  if (!(dt > 0.0))
    throw DomainError("integration step must be positive");
  const auto &pm = set.prime_mover;
  const double flux = flux_constant(pm, set.generator.rated_speed(), field_supply);

  auto deriv = [&](double ia, double w) {
    return std::pair{armature_current_rate(pm, flux, armature_voltage, ia, w),
                     (flux * ia - load_torque) / set.inertia};
  };

  const auto [dia0, dw0] = deriv(state.armature_current, state.shaft_speed);
  const double ia1 = state.armature_current + dt * dia0;
  const double w1 = state.shaft_speed + dt * dw0;
  const auto [dia1, dw1] = deriv(ia1, w1);

  PrimeMoverState next;
  next.armature_voltage = armature_voltage;
  next.armature_current = state.armature_current + 0.5 * dt * (dia0 + dia1);
  next.shaft_speed = state.shaft_speed + 0.5 * dt * (dw0 + dw1);
  require_finite("armature_current", next.armature_current);
  require_finite("shaft_speed", next.shaft_speed);
  next.field_current = std::max(field_supply, 0.0) / pm.field_resistance();
  next.shaft_torque = flux * next.armature_current;
  next.shaft_power = next.shaft_torque * next.shaft_speed;
  return next;
}

MachineElectrical machine_electrical(const GeneratorParams &gen, Complex emf,
                                     std::optional<Complex> terminal) {
  MachineElectrical out;
  if (!terminal) {
    out.terminal_voltage = emf;
    return out;
  }
  out.terminal_voltage = *terminal;
  out.stator_current = (emf - *terminal) / gen.synchronous_impedance();
  out.airgap_power = (emf * std::conj(out.stator_current)).real();
  return out;
}

double electrical_torque(double airgap_power, double rotor_speed) {
  if (airgap_power == 0.0)
    return 0.0;
  if (!(rotor_speed > 0.0))
    throw DegenerateSpeed(
        fmt::format("air-gap power {} W at rotor speed {} rad/s", airgap_power, rotor_speed));
  return airgap_power / rotor_speed;
}

double electrical_torque(const GeneratorState &gen, const GeneratorParams &params) {
  (void)params;
  if (gen.stator_current == Complex{})
    return 0.0;
  const double p = (gen.emf_phasor() * std::conj(gen.stator_current)).real();
  return electrical_torque(p, gen.rotor_speed);
}

GeneratorState step_generator(const MachineSetConfig &set, const GeneratorState &state,
                              double mech_torque, double field_voltage,
                              std::optional<Complex> network_interface, double dt) {
  if (!(dt > 0.0))
    throw DomainError("integration step must be positive");
  if (!(field_voltage >= 0.0))
    throw DomainError(fmt::format("field voltage {} V is negative", field_voltage));
  const auto &gen = set.generator;
  const double w_sync = gen.rated_speed();

  struct Rates {
    double w, delta, emf;
  };
  auto deriv = [&](double w, double delta, double emf) {
    const auto el = machine_electrical(gen, std::polar(emf, delta), network_interface);
    const double te = electrical_torque(el.airgap_power, w);
    return Rates{(mech_torque - te - set.damping * w) / set.inertia,
                 gen.pole_pairs * (w - w_sync), emf_rate(gen, field_voltage, w, emf)};
  };

  const Rates k0 = deriv(state.rotor_speed, state.rotor_angle, state.internal_emf);
  const double w1 = state.rotor_speed + dt * k0.w;
  const double d1 = state.rotor_angle + dt * k0.delta;
  const double e1 = state.internal_emf + dt * k0.emf;
  const Rates k1 = deriv(w1, d1, e1);

  GeneratorState next;
  next.rotor_speed = std::max(0.0, state.rotor_speed + 0.5 * dt * (k0.w + k1.w));
  next.rotor_angle = state.rotor_angle + 0.5 * dt * (k0.delta + k1.delta);
  next.internal_emf = std::max(0.0, state.internal_emf + 0.5 * dt * (k0.emf + k1.emf));
  next.field_voltage = field_voltage;
  require_finite("rotor_speed", next.rotor_speed);
  require_finite("rotor_angle", next.rotor_angle);
  require_finite("internal_emf", next.internal_emf);

  const auto el = machine_electrical(gen, next.emf_phasor(), network_interface);
  next.terminal_voltage = el.terminal_voltage;
  next.stator_current = el.stator_current;
  return next;
}

} // namespace gridloop::plant

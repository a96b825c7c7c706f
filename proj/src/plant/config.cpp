/* SPDX-License-Identifier: Apache-2.0 */

#include <gridloop/plant/config.hpp>

#include <algorithm>
#include <cmath>
#include <set>

#include <fmt/format.h>

namespace gridloop::plant {

const LoadElement *LoadBank::find(const std::string &id) const {
  auto it = std::find_if(elements.begin(), elements.end(),
                         [&](const LoadElement &e) { return e.id == id; });
  return it == elements.end() ? nullptr : &*it;
}

LoadElement *LoadBank::find(const std::string &id) {
  auto it = std::find_if(elements.begin(), elements.end(),
                         [&](const LoadElement &e) { return e.id == id; });
  return it == elements.end() ? nullptr : &*it;
}

double PlantConfig::nominal_frequency() const {
  const auto &g = sets.front().generator;
  return g.pole_pairs * g.rated_speed_rpm / 60.0;
}

double PlantConfig::rated_current() const {
  double total = 0.0;
  for (const auto &s : sets)
    total += s.generator.rated_power;
  return total / nominal_voltage;
}

PlantConfig PlantConfig::defaults() {
  PlantConfig cfg;
  for (int i = 1; i <= 2; ++i) {
    MachineSetConfig set;
    set.id = fmt::format("G{}", i);
    set.breaker_id = fmt::format("B{}", i);
    cfg.sets.push_back(set);
  }
  auto load = [](std::string id, LoadKind kind, Complex z, int priority) {
    LoadElement e;
    e.relay_id = "R" + id.substr(1);
    e.id = std::move(id);
    e.kind = kind;
    e.impedance = z;
    e.priority = priority;
    return e;
  };
  cfg.loads.elements = {
      load("L1", LoadKind::resistive, {200.0, 0.0}, 1),
      load("L2", LoadKind::inductive, {150.0, 60.0}, 2),
      load("L3", LoadKind::resistive, {150.0, 0.0}, 3),
      load("L4", LoadKind::resistive, {130.0, 0.0}, 4),
  };
  return cfg;
}

std::vector<std::string> PlantConfig::problems() const {
  std::vector<std::string> out;
  auto positive = [&](double v, const std::string &what) {
    if (!(v > 0.0) || !std::isfinite(v))
      out.push_back(fmt::format("{} must be positive (got {})", what, v));
  };
  auto non_negative = [&](double v, const std::string &what) {
    if (!(v >= 0.0) || !std::isfinite(v))
      out.push_back(fmt::format("{} must be non-negative (got {})", what, v));
  };

  if (sets.empty())
    out.push_back("plant needs at least one machine set");
  std::set<std::string> ids;
  auto unique = [&](const std::string &id, const char *what) {
    if (id.empty())
      out.push_back(fmt::format("{} id must not be empty", what));
    else if (!ids.insert(id).second)
      out.push_back(fmt::format("duplicate device id '{}'", id));
  };

  for (const auto &s : sets) {
    unique(s.id, "machine set");
    unique(s.breaker_id, "breaker");
    const auto &g = s.generator;
    const auto &pm = s.prime_mover;
    positive(g.rated_power, s.id + ".generator.rated_power");
    positive(g.rated_speed_rpm, s.id + ".generator.rated_speed_rpm");
    if (g.pole_pairs < 1)
      out.push_back(s.id + ".generator.pole_pairs must be >= 1");
    positive(g.synchronous_reactance, s.id + ".generator.synchronous_reactance");
    non_negative(g.stator_resistance, s.id + ".generator.stator_resistance");
    positive(g.exciter_time_constant, s.id + ".generator.exciter_time_constant");
    positive(g.field_resistance, s.id + ".generator.field_resistance");
    positive(g.emf_per_field_volt, s.id + ".generator.emf_per_field_volt");
    positive(pm.rated_power, s.id + ".prime_mover.rated_power");
    positive(pm.rated_voltage, s.id + ".prime_mover.rated_voltage");
    positive(pm.rated_field_current, s.id + ".prime_mover.rated_field_current");
    positive(pm.armature_resistance, s.id + ".prime_mover.armature_resistance");
    positive(pm.armature_time_constant, s.id + ".prime_mover.armature_time_constant");
    if (pm.rated_voltage * pm.rated_voltage < 4.0 * pm.armature_resistance * pm.rated_power)
      out.push_back(s.id + ".prime_mover ratings admit no operating point "
                           "(V^2 < 4 R_a P)");
    positive(s.inertia, s.id + ".inertia");
    non_negative(s.damping, s.id + ".damping");
    non_negative(s.line_impedance.real(), s.id + ".line_impedance.real");
    if (std::abs(s.line_impedance) <= 0.0)
      out.push_back(s.id + ".line_impedance must be non-zero");
    if (s.generator.pole_pairs * s.generator.rated_speed_rpm !=
        sets.front().generator.pole_pairs * sets.front().generator.rated_speed_rpm)
      out.push_back(s.id + " synchronous frequency differs from " + sets.front().id);
  }

  std::set<int> priorities;
  for (const auto &e : loads.elements) {
    unique(e.id, "load");
    unique(e.relay_id, "relay");
    if (!priorities.insert(e.priority).second)
      out.push_back(fmt::format("load priority {} is not unique", e.priority));
    if (e.kind == LoadKind::resistive && !(e.impedance.real() > 0.0))
      out.push_back(e.id + ": resistive load needs a positive real part");
    if (e.kind == LoadKind::inductive && !(e.impedance.imag() > 0.0))
      out.push_back(e.id + ": inductive load needs a positive imaginary part");
    if (e.impedance.real() < 0.0)
      out.push_back(e.id + ": negative resistance");
  }

  positive(rails.excitation_voltage, "rails.excitation_voltage");
  positive(rails.excitation_current, "rails.excitation_current");
  positive(rails.armature_voltage, "rails.armature_voltage");
  positive(rails.armature_current, "rails.armature_current");
  positive(torque_meter.max_speed_rpm, "torque_meter.max_speed_rpm");
  positive(torque_meter.max_power, "torque_meter.max_power");
  positive(torque_meter.max_torque, "torque_meter.max_torque");
  positive(nominal_voltage, "nominal_voltage");
  non_negative(load_switch_current_limit, "load_switch_current_limit");
  positive(sensor_reference_voltage, "sensor_reference_voltage");
  return out;
}

} // namespace gridloop::plant

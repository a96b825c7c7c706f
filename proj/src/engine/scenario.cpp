/* SPDX-License-Identifier: Apache-2.0 */

#include <gridloop/engine/scenario.hpp>

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>

namespace gridloop::engine {

using devices::SwitchState;

const char *to_string(EventKind k) {
  switch (k) {
  case EventKind::load_step: return "load_step";
  case EventKind::relay_force: return "relay_force";
  case EventKind::generator_trip: return "generator_trip";
  case EventKind::sensor_bias: return "sensor_bias";
  case EventKind::operator_command: return "operator_command";
  }
  return "?";
}

std::optional<EventKind> event_kind_from_string(const std::string &s) {
  for (auto k : {EventKind::load_step, EventKind::relay_force, EventKind::generator_trip,
                 EventKind::sensor_bias, EventKind::operator_command})
    if (s == to_string(k))
      return k;
  return std::nullopt;
}

int Timing::ratio() const {
  if (!(plant_dt > 0.0) || !(control_period > 0.0))
    return 0;
  double r = control_period / plant_dt;
  double n = std::round(r);
  if (n < 1.0 || std::abs(r - n) > 1e-9 * n)
    return 0;
  return static_cast<int>(n);
}

std::size_t Scenario::frame_count() const {
  if (!(duration > 0.0) || !(timing.control_period > 0.0))
    return 0;
  return static_cast<std::size_t>(std::floor(duration / timing.control_period + 1e-9));
}

plant::Topology Scenario::initial_topology() const {
  auto t = plant::Topology::all_closed(plant);
  auto state = [&](const std::string &id) {
    auto it = initial.switches.find(id);
    return it == initial.switches.end() || it->second == SwitchState::closed;
  };
  for (std::size_t i = 0; i < plant.sets.size(); ++i)
    t.breaker_closed[i] = state(plant.sets[i].breaker_id);
  for (std::size_t j = 0; j < plant.loads.elements.size(); ++j)
    t.relay_closed[j] = state(plant.loads.elements[j].relay_id);
  return t;
}

InitialGenerator Scenario::initial_generator(std::size_t set) const {
  if (set < initial.generators.size())
    return initial.generators[set];
  InitialGenerator g;
  g.terminal_voltage = controller.nominal_voltage;
  g.speed_rpm = plant.sets.at(set).generator.rated_speed_rpm;
  return g;
}

namespace {

bool has_switch(const plant::PlantConfig &p, const std::string &id) {
  for (const auto &s : p.sets)
    if (s.breaker_id == id)
      return true;
  for (const auto &e : p.loads.elements)
    if (e.relay_id == id)
      return true;
  return false;
}

bool has_relay(const plant::PlantConfig &p, const std::string &id) {
  for (const auto &e : p.loads.elements)
    if (e.relay_id == id)
      return true;
  return false;
}

bool has_generator(const plant::PlantConfig &p, const std::string &id) {
  for (const auto &s : p.sets)
    if (s.id == id)
      return true;
  return false;
}

std::optional<SwitchState> parse_state(const json &v) {
  if (!v.is_string())
    return std::nullopt;
  auto s = v.get<std::string>();
  if (s == "open")
    return SwitchState::open;
  if (s == "closed")
    return SwitchState::closed;
  return std::nullopt;
}

std::optional<std::string> string_param(const json &p, const char *key) {
  if (!p.is_object() || !p.contains(key) || !p[key].is_string())
    return std::nullopt;
  return p[key].get<std::string>();
}

bool number_param(const json &p, const char *key) {
  return p.is_object() && p.contains(key) && p[key].is_number() &&
         std::isfinite(p[key].get<double>());
}

} // namespace

std::optional<std::string> event_problem(const Scenario &s, const ScenarioEvent &e) {
  const auto &p = e.params;
  if (!p.is_object())
    return "params must be an object";
  switch (e.kind) {
  case EventKind::load_step: {
    auto load = string_param(p, "load");
    if (!load)
      return "load_step needs a load id";
    if (!s.plant.loads.find(*load))
      return fmt::format("unknown load {}", *load);
    if (!number_param(p, "resistance") || p["resistance"].get<double>() <= 0.0)
      return "load_step needs a positive resistance";
    if (p.contains("reactance") && !number_param(p, "reactance"))
      return "load_step reactance must be a number";
    return std::nullopt;
  }
  case EventKind::relay_force: {
    auto id = string_param(p, "relay");
    if (!id)
      return "relay_force needs a relay id";
    if (!has_switch(s.plant, *id))
      return fmt::format("unknown relay {}", *id);
    if (!p.contains("state") || !parse_state(p["state"]))
      return "relay_force state must be open or closed";
    return std::nullopt;
  }
  case EventKind::generator_trip: {
    auto id = string_param(p, "generator");
    if (!id)
      return "generator_trip needs a generator id";
    if (!has_generator(s.plant, *id))
      return fmt::format("unknown generator {}", *id);
    return std::nullopt;
  }
  case EventKind::sensor_bias: {
    auto ch = string_param(p, "channel");
    if (!ch)
      return "sensor_bias needs a channel";
    auto channels = devices::telemetry_channels(s.plant);
    if (!std::binary_search(channels.begin(), channels.end(), *ch))
      return fmt::format("unknown channel {}", *ch);
    if (!number_param(p, "bias"))
      return "sensor_bias needs a numeric bias";
    return std::nullopt;
  }
  case EventKind::operator_command: {
    auto cmd = string_param(p, "command");
    auto target = string_param(p, "target");
    if (!cmd)
      return "operator_command needs a command";
    if (!target)
      return "operator_command needs a target";
    if (*cmd == "trip" || *cmd == "reset_trip" || *cmd == "sync_request" ||
        *cmd == "setpoint_change") {
      if (!has_generator(s.plant, *target))
        return fmt::format("unknown generator {}", *target);
      if (*cmd == "setpoint_change") {
        bool v = number_param(p, "voltage_setpoint"), n = number_param(p, "speed_setpoint_rpm");
        if (!v && !n)
          return "setpoint_change needs voltage_setpoint or speed_setpoint_rpm";
        if ((v && p["voltage_setpoint"].get<double>() <= 0.0) ||
            (n && p["speed_setpoint_rpm"].get<double>() <= 0.0))
          return "setpoints must be positive";
      }
      if (p.contains("auto_match") && !p["auto_match"].is_boolean())
        return "auto_match must be a boolean";
      return std::nullopt;
    }
    if (*cmd == "relay_command" || *cmd == "breaker_command") {
      bool known = *cmd == "relay_command" ? has_relay(s.plant, *target)
                                           : has_switch(s.plant, *target) &&
                                                 !has_relay(s.plant, *target);
      if (!known)
        return fmt::format("unknown {} {}", *cmd == "relay_command" ? "relay" : "breaker",
                           *target);
      if (!p.contains("state") || !parse_state(p["state"]))
        return "state must be open or closed";
      return std::nullopt;
    }
    return fmt::format("unknown command {}", *cmd);
  }
  }
  return "unknown event kind";
}

std::vector<std::string> Scenario::problems() const {
  std::vector<std::string> out;
  if (schema_version != kSchemaVersion)
    out.push_back(fmt::format("unsupported schema_version {}", schema_version));
  if (!(duration >= 0.0) || !std::isfinite(duration))
    out.push_back(fmt::format("duration must be non-negative (got {})", duration));
  if (timing.ratio() == 0)
    out.push_back(fmt::format("control_period {} is not an integer multiple of plant_dt {}",
                              timing.control_period, timing.plant_dt));
  for (auto &p : plant.problems())
    out.push_back("plant: " + p);
  for (auto &p : devices.problems())
    out.push_back("devices: " + p);
  for (auto &p : controller.problems(plant))
    out.push_back(p);
  if (std::abs(controller.control_period - timing.control_period) > 1e-12)
    out.push_back("controller.control_period must equal timing.control_period");
  for (const auto &[id, st] : initial.switches)
    if (!has_switch(plant, id))
      out.push_back(fmt::format("initial state names unknown switch {}", id));
  if (initial.generators.size() > plant.sets.size())
    out.push_back("initial state lists more generators than the plant has");
  for (const auto &g : initial.generators)
    if (!(g.terminal_voltage > 0.0) || !(g.speed_rpm > 0.0))
      out.push_back("initial terminal_voltage and speed_rpm must be positive");
  double prev = -1.0;
  for (std::size_t k = 0; k < events.size(); ++k) {
    const auto &e = events[k];
    if (!std::isfinite(e.t) || e.t < 0.0 || e.t > duration)
      out.push_back(fmt::format("event {} at t={} lies outside [0, {}]", k, e.t, duration));
    if (e.t < prev)
      out.push_back(fmt::format("event {} at t={} is out of order", k, e.t));
    prev = std::max(prev, e.t);
    if (auto p = event_problem(*this, e))
      out.push_back(fmt::format("event {} ({}): {}", k, to_string(e.kind), *p));
  }
  return out;
}

// ---------------------------------------------------------------------------
// JSON

namespace {

void problem(std::vector<std::string> &out, std::string s) { out.push_back(std::move(s)); }

void check_keys(const json &j, std::initializer_list<const char *> allowed, const std::string &where,
                std::vector<std::string> &out) {
  if (!j.is_object()) {
    problem(out, fmt::format("{} must be an object", where));
    return;
  }
  for (const auto &[k, v] : j.items())
    if (std::find_if(allowed.begin(), allowed.end(), [&](const char *a) { return k == a; }) ==
        allowed.end())
      problem(out, fmt::format("{}: unknown field {}", where, k));
}

template <typename T> void read(const json &j, const char *key, T &dst, const std::string &where,
                                std::vector<std::string> &out) {
  if (!j.is_object() || !j.contains(key))
    return;
  try {
    dst = j.at(key).get<T>();
  } catch (const json::exception &) {
    problem(out, fmt::format("{}.{} has the wrong type", where, key));
  }
}

void read_complex(const json &j, const char *key, Complex &dst, const std::string &where,
                  std::vector<std::string> &out) {
  if (!j.is_object() || !j.contains(key))
    return;
  const auto &v = j[key];
  if (v.is_array() && v.size() == 2 && v[0].is_number() && v[1].is_number())
    dst = {v[0].get<double>(), v[1].get<double>()};
  else
    problem(out, fmt::format("{}.{} must be [real, imag]", where, key));
}

json complex_json(Complex z) { return json::array({z.real(), z.imag()}); }

plant::MachineSetConfig parse_set(const json &j, plant::MachineSetConfig s, const std::string &w,
                                  std::vector<std::string> &out) {
  check_keys(j, {"id", "breaker_id", "generator", "prime_mover", "inertia", "damping",
                 "line_impedance"},
             w, out);
  read(j, "id", s.id, w, out);
  read(j, "breaker_id", s.breaker_id, w, out);
  read(j, "inertia", s.inertia, w, out);
  read(j, "damping", s.damping, w, out);
  read_complex(j, "line_impedance", s.line_impedance, w, out);
  if (j.contains("generator")) {
    const auto &g = j["generator"];
    auto gw = w + ".generator";
    check_keys(g, {"rated_power", "rated_speed_rpm", "pole_pairs", "synchronous_reactance",
                   "stator_resistance", "exciter_time_constant", "field_resistance",
                   "emf_per_field_volt"},
               gw, out);
    read(g, "rated_power", s.generator.rated_power, gw, out);
    read(g, "rated_speed_rpm", s.generator.rated_speed_rpm, gw, out);
    read(g, "pole_pairs", s.generator.pole_pairs, gw, out);
    read(g, "synchronous_reactance", s.generator.synchronous_reactance, gw, out);
    read(g, "stator_resistance", s.generator.stator_resistance, gw, out);
    read(g, "exciter_time_constant", s.generator.exciter_time_constant, gw, out);
    read(g, "field_resistance", s.generator.field_resistance, gw, out);
    read(g, "emf_per_field_volt", s.generator.emf_per_field_volt, gw, out);
  }
  if (j.contains("prime_mover")) {
    const auto &m = j["prime_mover"];
    auto mw = w + ".prime_mover";
    check_keys(m, {"rated_power", "rated_voltage", "rated_field_current", "armature_resistance",
                   "armature_time_constant"},
               mw, out);
    read(m, "rated_power", s.prime_mover.rated_power, mw, out);
    read(m, "rated_voltage", s.prime_mover.rated_voltage, mw, out);
    read(m, "rated_field_current", s.prime_mover.rated_field_current, mw, out);
    read(m, "armature_resistance", s.prime_mover.armature_resistance, mw, out);
    read(m, "armature_time_constant", s.prime_mover.armature_time_constant, mw, out);
  }
  return s;
}

plant::PlantConfig parse_plant(const json &j, std::vector<std::string> &out) {
  auto p = plant::PlantConfig::defaults();
  check_keys(j, {"sets", "loads", "rails", "nominal_voltage", "load_switch_current_limit",
                 "sensor_reference_voltage"},
             "plant", out);
  read(j, "nominal_voltage", p.nominal_voltage, "plant", out);
  read(j, "load_switch_current_limit", p.load_switch_current_limit, "plant", out);
  read(j, "sensor_reference_voltage", p.sensor_reference_voltage, "plant", out);
  if (j.contains("sets")) {
    if (!j["sets"].is_array()) {
      problem(out, "plant.sets must be an array");
    } else {
      std::vector<plant::MachineSetConfig> sets;
      for (std::size_t i = 0; i < j["sets"].size(); ++i) {
        plant::MachineSetConfig base = i < p.sets.size() ? p.sets[i] : p.sets.back();
        base.id = fmt::format("G{}", i + 1);
        base.breaker_id = fmt::format("B{}", i + 1);
        sets.push_back(parse_set(j["sets"][i], base, fmt::format("plant.sets[{}]", i), out));
      }
      p.sets = std::move(sets);
    }
  }
  if (j.contains("loads")) {
    if (!j["loads"].is_array()) {
      problem(out, "plant.loads must be an array");
    } else {
      std::vector<plant::LoadElement> loads;
      for (std::size_t i = 0; i < j["loads"].size(); ++i) {
        const auto &l = j["loads"][i];
        auto w = fmt::format("plant.loads[{}]", i);
        check_keys(l, {"id", "kind", "impedance", "priority", "relay_id"}, w, out);
        plant::LoadElement e;
        e.id = fmt::format("L{}", i + 1);
        e.relay_id = fmt::format("R{}", i + 1);
        e.priority = static_cast<int>(i + 1);
        read(l, "id", e.id, w, out);
        read(l, "relay_id", e.relay_id, w, out);
        read(l, "priority", e.priority, w, out);
        read_complex(l, "impedance", e.impedance, w, out);
        std::string kind = e.impedance.imag() != 0.0 ? "inductive" : "resistive";
        read(l, "kind", kind, w, out);
        if (kind == "resistive")
          e.kind = plant::LoadKind::resistive;
        else if (kind == "inductive")
          e.kind = plant::LoadKind::inductive;
        else
          problem(out, fmt::format("{}.kind must be resistive or inductive", w));
        loads.push_back(e);
      }
      p.loads.elements = std::move(loads);
    }
  }
  if (j.contains("rails")) {
    const auto &r = j["rails"];
    check_keys(r, {"excitation_voltage", "excitation_current", "armature_voltage",
                   "armature_current"},
               "plant.rails", out);
    read(r, "excitation_voltage", p.rails.excitation_voltage, "plant.rails", out);
    read(r, "excitation_current", p.rails.excitation_current, "plant.rails", out);
    read(r, "armature_voltage", p.rails.armature_voltage, "plant.rails", out);
    read(r, "armature_current", p.rails.armature_current, "plant.rails", out);
  }
  return p;
}

json plant_json(const plant::PlantConfig &p) {
  json sets = json::array();
  for (const auto &s : p.sets)
    sets.push_back({{"id", s.id},
                    {"breaker_id", s.breaker_id},
                    {"inertia", s.inertia},
                    {"damping", s.damping},
                    {"line_impedance", complex_json(s.line_impedance)},
                    {"generator",
                     {{"rated_power", s.generator.rated_power},
                      {"rated_speed_rpm", s.generator.rated_speed_rpm},
                      {"pole_pairs", s.generator.pole_pairs},
                      {"synchronous_reactance", s.generator.synchronous_reactance},
                      {"stator_resistance", s.generator.stator_resistance},
                      {"exciter_time_constant", s.generator.exciter_time_constant},
                      {"field_resistance", s.generator.field_resistance},
                      {"emf_per_field_volt", s.generator.emf_per_field_volt}}},
                    {"prime_mover",
                     {{"rated_power", s.prime_mover.rated_power},
                      {"rated_voltage", s.prime_mover.rated_voltage},
                      {"rated_field_current", s.prime_mover.rated_field_current},
                      {"armature_resistance", s.prime_mover.armature_resistance},
                      {"armature_time_constant", s.prime_mover.armature_time_constant}}}});
  json loads = json::array();
  for (const auto &e : p.loads.elements)
    loads.push_back({{"id", e.id},
                     {"kind", e.kind == plant::LoadKind::resistive ? "resistive" : "inductive"},
                     {"impedance", complex_json(e.impedance)},
                     {"priority", e.priority},
                     {"relay_id", e.relay_id}});
  return {{"sets", sets},
          {"loads", loads},
          {"rails",
           {{"excitation_voltage", p.rails.excitation_voltage},
            {"excitation_current", p.rails.excitation_current},
            {"armature_voltage", p.rails.armature_voltage},
            {"armature_current", p.rails.armature_current}}},
          {"nominal_voltage", p.nominal_voltage},
          {"load_switch_current_limit", p.load_switch_current_limit},
          {"sensor_reference_voltage", p.sensor_reference_voltage}};
}

devices::DeviceConfig parse_devices(const json &j, std::vector<std::string> &out) {
  devices::DeviceConfig d;
  const std::string w = "devices";
  check_keys(j, {"adc_bits", "noise_sigma", "relay_delay", "relay_rated_current",
                 "serial_bit_error_rate", "frequency_window", "load_voltage_full_scale", "load_current_full_scale",
                 "field_voltage_full_scale", "field_current_full_scale",
                 "armature_voltage_full_scale", "armature_current_full_scale"},
             w, out);
  read(j, "adc_bits", d.adc_bits, w, out);
  read(j, "noise_sigma", d.noise_sigma, w, out);
  read(j, "relay_delay", d.relay_delay, w, out);
  read(j, "relay_rated_current", d.relay_rated_current, w, out);
  read(j, "serial_bit_error_rate", d.serial_bit_error_rate, w, out);
  read(j, "frequency_window", d.frequency_window, w, out);
  read(j, "load_voltage_full_scale", d.load_voltage_full_scale, w, out);
  read(j, "load_current_full_scale", d.load_current_full_scale, w, out);
  read(j, "field_voltage_full_scale", d.field_voltage_full_scale, w, out);
  read(j, "field_current_full_scale", d.field_current_full_scale, w, out);
  read(j, "armature_voltage_full_scale", d.armature_voltage_full_scale, w, out);
  read(j, "armature_current_full_scale", d.armature_current_full_scale, w, out);
  return d;
}

json devices_json(const devices::DeviceConfig &d) {
  return {{"adc_bits", d.adc_bits},
          {"noise_sigma", d.noise_sigma},
          {"relay_delay", d.relay_delay},
          {"relay_rated_current", d.relay_rated_current},
          {"serial_bit_error_rate", d.serial_bit_error_rate},
          {"frequency_window", d.frequency_window},
          {"load_voltage_full_scale", d.load_voltage_full_scale},
          {"load_current_full_scale", d.load_current_full_scale},
          {"field_voltage_full_scale", d.field_voltage_full_scale},
          {"field_current_full_scale", d.field_current_full_scale},
          {"armature_voltage_full_scale", d.armature_voltage_full_scale},
          {"armature_current_full_scale", d.armature_current_full_scale}};
}

void parse_gains(const json &j, const char *key, controller::PiGains &g, const std::string &w,
                 std::vector<std::string> &out) {
  if (!j.contains(key))
    return;
  auto gw = w + "." + key;
  check_keys(j[key], {"kp", "ki", "bias"}, gw, out);
  read(j[key], "kp", g.kp, gw, out);
  read(j[key], "ki", g.ki, gw, out);
  read(j[key], "bias", g.bias, gw, out);
}

controller::ControllerConfig parse_controller(const json &j, const plant::PlantConfig &plant,
                                              double control_period,
                                              std::vector<std::string> &out) {
  auto c = controller::ControllerConfig::for_plant(plant);
  c.control_period = control_period;
  const std::string w = "controller";
  check_keys(j, {"nominal_voltage", "voltage_tolerance", "voltage_permissible",
                 "branch_current_limit", "permissible_band", "speed_setpoint_rpm",
                 "frequency_band", "frequency_permissible", "sync", "excitation", "speed",
                 "speed_droop", "sharing_time_constant", "trip_confirmation_periods",
                 "switch_retry_time", "shedding_order"},
             w, out);
  read(j, "nominal_voltage", c.nominal_voltage, w, out);
  read(j, "voltage_tolerance", c.voltage_tolerance, w, out);
  read(j, "voltage_permissible", c.voltage_permissible, w, out);
  read(j, "branch_current_limit", c.branch_current_limit, w, out);
  read(j, "permissible_band", c.permissible_band, w, out);
  read(j, "speed_setpoint_rpm", c.speed_setpoint_rpm, w, out);
  read(j, "frequency_band", c.frequency_band, w, out);
  read(j, "frequency_permissible", c.frequency_permissible, w, out);
  read(j, "speed_droop", c.speed_droop, w, out);
  read(j, "sharing_time_constant", c.sharing_time_constant, w, out);
  read(j, "trip_confirmation_periods", c.trip_confirmation_periods, w, out);
  read(j, "switch_retry_time", c.switch_retry_time, w, out);
  parse_gains(j, "excitation", c.excitation, w, out);
  parse_gains(j, "speed", c.speed, w, out);
  if (j.contains("sync")) {
    const auto &s = j["sync"];
    auto sw = w + ".sync";
    check_keys(s, {"voltage_tolerance", "frequency_tolerance", "phase_tolerance",
                   "confirmation_periods", "dead_bus_fraction", "dead_bus_close", "phase_gain",
                   "max_slip"},
               sw, out);
    read(s, "voltage_tolerance", c.sync.voltage_tolerance, sw, out);
    read(s, "frequency_tolerance", c.sync.frequency_tolerance, sw, out);
    read(s, "phase_tolerance", c.sync.phase_tolerance, sw, out);
    read(s, "confirmation_periods", c.sync.confirmation_periods, sw, out);
    read(s, "dead_bus_fraction", c.sync.dead_bus_fraction, sw, out);
    read(s, "dead_bus_close", c.sync.dead_bus_close, sw, out);
    read(s, "phase_gain", c.sync.phase_gain, sw, out);
    read(s, "max_slip", c.sync.max_slip, sw, out);
  }
  if (j.contains("shedding_order")) {
    std::vector<std::string> ids;
    read(j, "shedding_order", ids, w, out);
    std::vector<controller::ShedTarget> order;
    for (const auto &id : ids) {
      const auto *e = plant.loads.find(id);
      if (!e) {
        problem(out, fmt::format("controller.shedding_order names unknown load {}", id));
        continue;
      }
      order.push_back({e->id, e->relay_id, e->priority});
    }
    c.shedding_order = std::move(order);
  }
  return c;
}

json controller_json(const controller::ControllerConfig &c) {
  auto gains = [](const controller::PiGains &g) {
    return json{{"kp", g.kp}, {"ki", g.ki}, {"bias", g.bias}};
  };
  json order = json::array();
  for (const auto &t : c.shedding_order)
    order.push_back(t.load_id);
  return {{"nominal_voltage", c.nominal_voltage},
          {"voltage_tolerance", c.voltage_tolerance},
          {"voltage_permissible", c.voltage_permissible},
          {"branch_current_limit", c.branch_current_limit},
          {"permissible_band", c.permissible_band},
          {"speed_setpoint_rpm", c.speed_setpoint_rpm},
          {"frequency_band", c.frequency_band},
          {"frequency_permissible", c.frequency_permissible},
          {"speed_droop", c.speed_droop},
          {"sharing_time_constant", c.sharing_time_constant},
          {"trip_confirmation_periods", c.trip_confirmation_periods},
          {"switch_retry_time", c.switch_retry_time},
          {"excitation", gains(c.excitation)},
          {"speed", gains(c.speed)},
          {"sync",
           {{"voltage_tolerance", c.sync.voltage_tolerance},
            {"frequency_tolerance", c.sync.frequency_tolerance},
            {"phase_tolerance", c.sync.phase_tolerance},
            {"confirmation_periods", c.sync.confirmation_periods},
            {"dead_bus_fraction", c.sync.dead_bus_fraction},
            {"dead_bus_close", c.sync.dead_bus_close},
            {"phase_gain", c.sync.phase_gain},
            {"max_slip", c.sync.max_slip}}},
          {"shedding_order", order}};
}

ScenarioEvent parse_event_into(const json &j, const std::string &w, std::vector<std::string> &out) {
  ScenarioEvent e;
  check_keys(j, {"t", "kind", "params"}, w, out);
  if (!j.is_object())
    return e;
  if (!j.contains("t") || !j["t"].is_number())
    problem(out, w + ".t must be a number");
  else
    e.t = j["t"].get<double>();
  std::string kind;
  read(j, "kind", kind, w, out);
  if (auto k = event_kind_from_string(kind))
    e.kind = *k;
  else
    problem(out, fmt::format("{}.kind: unknown event kind '{}'", w, kind));
  if (j.contains("params"))
    e.params = j["params"];
  return e;
}

} // namespace

ScenarioEvent parse_event(const json &doc) {
  std::vector<std::string> out;
  auto e = parse_event_into(doc, "event", out);
  if (!out.empty())
    throw ValidationError(out);
  return e;
}

json to_json(const ScenarioEvent &e) {
  return {{"t", e.t}, {"kind", to_string(e.kind)}, {"params", e.params}};
}

Scenario parse_scenario(const json &doc) {
  std::vector<std::string> out;
  Scenario s;
  check_keys(doc, {"schema_version", "name", "seed", "duration", "timing", "plant", "devices",
                   "controller", "initial", "events"},
             "scenario", out);
  if (!doc.is_object())
    throw ValidationError(out);
  if (!doc.contains("schema_version"))
    problem(out, "scenario.schema_version is required");
  read(doc, "schema_version", s.schema_version, "scenario", out);
  read(doc, "name", s.name, "scenario", out);
  read(doc, "seed", s.seed, "scenario", out);
  read(doc, "duration", s.duration, "scenario", out);
  if (doc.contains("timing")) {
    check_keys(doc["timing"], {"plant_dt", "control_period"}, "timing", out);
    read(doc["timing"], "plant_dt", s.timing.plant_dt, "timing", out);
    read(doc["timing"], "control_period", s.timing.control_period, "timing", out);
  }
  s.plant = doc.contains("plant") ? parse_plant(doc["plant"], out) : plant::PlantConfig::defaults();
  if (doc.contains("devices"))
    s.devices = parse_devices(doc["devices"], out);
  s.controller = parse_controller(doc.contains("controller") ? doc["controller"] : json::object(),
                                  s.plant, s.timing.control_period, out);
  if (doc.contains("initial")) {
    const auto &ini = doc["initial"];
    check_keys(ini, {"switches", "generators"}, "initial", out);
    if (ini.contains("switches")) {
      if (!ini["switches"].is_object())
        problem(out, "initial.switches must map switch ids to open/closed");
      else
        for (const auto &[id, v] : ini["switches"].items()) {
          if (auto st = parse_state(v))
            s.initial.switches[id] = *st;
          else
            problem(out, fmt::format("initial.switches.{} must be open or closed", id));
        }
    }
    if (ini.contains("generators")) {
      if (!ini["generators"].is_array()) {
        problem(out, "initial.generators must be an array");
      } else {
        for (std::size_t i = 0; i < ini["generators"].size(); ++i) {
          const auto &g = ini["generators"][i];
          auto w = fmt::format("initial.generators[{}]", i);
          check_keys(g, {"terminal_voltage", "speed_rpm", "phase_offset_deg"}, w, out);
          InitialGenerator ig;
          ig.terminal_voltage = s.controller.nominal_voltage;
          if (i < s.plant.sets.size())
            ig.speed_rpm = s.plant.sets[i].generator.rated_speed_rpm;
          read(g, "terminal_voltage", ig.terminal_voltage, w, out);
          read(g, "speed_rpm", ig.speed_rpm, w, out);
          read(g, "phase_offset_deg", ig.phase_offset_deg, w, out);
          s.initial.generators.push_back(ig);
        }
      }
    }
  }
  if (doc.contains("events")) {
    if (!doc["events"].is_array())
      problem(out, "scenario.events must be an array");
    else
      for (std::size_t k = 0; k < doc["events"].size(); ++k)
        s.events.push_back(parse_event_into(doc["events"][k], fmt::format("events[{}]", k), out));
  }
  if (!out.empty())
    throw ValidationError(out);
  return s;
}

Scenario load_scenario(const std::filesystem::path &path) {
  std::ifstream in(path);
  if (!in)
    throw ValidationError({fmt::format("cannot open scenario file {}", path.string())});
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::parse_error &e) {
    throw ValidationError({fmt::format("{}: {}", path.string(), e.what())});
  }
  return parse_scenario(doc);
}

json to_json(const Scenario &s) {
  json switches = json::object();
  for (const auto &[id, st] : s.initial.switches)
    switches[id] = devices::to_string(st);
  json gens = json::array();
  for (const auto &g : s.initial.generators)
    gens.push_back({{"terminal_voltage", g.terminal_voltage},
                    {"speed_rpm", g.speed_rpm},
                    {"phase_offset_deg", g.phase_offset_deg}});
  json events = json::array();
  for (const auto &e : s.events)
    events.push_back(to_json(e));
  return {{"schema_version", s.schema_version},
          {"name", s.name},
          {"seed", s.seed},
          {"duration", s.duration},
          {"timing", {{"plant_dt", s.timing.plant_dt}, {"control_period", s.timing.control_period}}},
          {"plant", plant_json(s.plant)},
          {"devices", devices_json(s.devices)},
          {"controller", controller_json(s.controller)},
          {"initial", {{"switches", switches}, {"generators", gens}}},
          {"events", events}};
}

} // namespace gridloop::engine

/* SPDX-License-Identifier: Apache-2.0 */

#include <gridloop/engine/simulation.hpp>

#include <fmt/format.h>

#include <algorithm>
#include <fstream>

namespace gridloop::engine {

using devices::SwitchState;

namespace {

std::string num(double v) { return fmt::format("{}", v); }
std::string stamp(double t) { return fmt::format("{:.6f}", t); }

std::string quoted(const std::string &s) {
  std::string out = "\"";
  for (char c : s) {
    if (c == '"')
      out += '"';
    out += c;
  }
  return out + "\"";
}

std::string switch_list(const std::vector<controller::SwitchCommand> &v) {
  std::string out;
  for (const auto &c : v)
    out += fmt::format("{}{}:{}", out.empty() ? "" : " ", c.id, devices::to_string(c.state));
  return out;
}

constexpr const char *kGeneratorFields[] = {"terminal_voltage_rms", "stator_current_rms",
                                            "real_power",           "reactive_power",
                                            "speed_rpm",            "torque",
                                            "frequency",            "bus_voltage_rms",
                                            "phase_difference"};

std::string generators_csv(const SimulationRecord &r) {
  std::vector<std::string> header{"t"};
  for (const auto &id : r.generator_ids)
    for (const char *f : kGeneratorFields)
      header.push_back(id + "." + f);
  if (!r.frames.empty())
    for (const auto &b : r.frames.front().breakers)
      header.push_back(b.id + ".closed");
  std::string out = fmt::format("{}\n", fmt::join(header, ","));
  for (const auto &f : r.frames) {
    std::vector<std::string> row{stamp(f.timestamp)};
    for (const auto &g : f.generators)
      for (double v : {g.terminal_voltage_rms, g.stator_current_rms, g.real_power,
                       g.reactive_power, g.speed_rpm, g.torque, g.frequency, g.bus_voltage_rms,
                       g.phase_difference})
        row.push_back(num(v));
    for (const auto &b : f.breakers)
      row.push_back(b.state == SwitchState::closed ? "1" : "0");
    out += fmt::format("{}\n", fmt::join(row, ","));
  }
  return out;
}

std::string load_bus_csv(const SimulationRecord &r) {
  std::vector<std::string> header{"t", "load_bus.voltage_rms", "load_bus.current_rms",
                                  "load_bus.frequency"};
  if (!r.frames.empty())
    for (const auto &s : r.frames.front().relays)
      header.push_back(s.id + ".closed");
  std::string out = fmt::format("{}\n", fmt::join(header, ","));
  for (const auto &f : r.frames) {
    std::vector<std::string> row{stamp(f.timestamp), num(f.load_bus.voltage_rms),
                                 num(f.load_bus.current_rms), num(f.load_bus.frequency)};
    for (const auto &s : f.relays)
      row.push_back(s.state == SwitchState::closed ? "1" : "0");
    out += fmt::format("{}\n", fmt::join(row, ","));
  }
  return out;
}

std::string dc_csv(const SimulationRecord &r) {
  std::vector<std::string> header{"t"};
  for (const auto &id : r.generator_ids)
    for (const char *f : {"field_voltage", "field_current", "armature_voltage", "armature_current"})
      header.push_back(id + "." + f);
  std::string out = fmt::format("{}\n", fmt::join(header, ","));
  for (const auto &f : r.frames) {
    std::vector<std::string> row{stamp(f.timestamp)};
    for (const auto &d : f.dc)
      for (double v : {d.field_voltage, d.field_current, d.armature_voltage, d.armature_current})
        row.push_back(num(v));
    out += fmt::format("{}\n", fmt::join(row, ","));
  }
  return out;
}

std::string decisions_csv(const SimulationRecord &r) {
  std::vector<std::string> header{"t", "system_mode"};
  for (const auto &id : r.generator_ids)
    for (const char *f : {"mode", "excitation_duty", "armature_duty"})
      header.push_back(id + "." + f);
  for (const char *f : {"relay_commands", "breaker_commands", "sync_close", "annotations"})
    header.push_back(f);
  std::string out = fmt::format("{}\n", fmt::join(header, ","));
  for (const auto &d : r.decisions) {
    std::vector<std::string> row{stamp(d.timestamp), controller::to_string(d.system_mode)};
    for (std::size_t i = 0; i < d.modes.size(); ++i) {
      row.push_back(controller::to_string(d.modes[i]));
      row.push_back(num(d.excitation_duty[i]));
      row.push_back(num(d.armature_duty[i]));
    }
    row.push_back(switch_list(d.relay_commands));
    row.push_back(switch_list(d.breaker_commands));
    row.push_back(d.sync_close && *d.sync_close < r.generator_ids.size()
                      ? r.generator_ids[*d.sync_close]
                      : "");
    row.push_back(quoted(fmt::format("{}", fmt::join(d.annotations, "; "))));
    out += fmt::format("{}\n", fmt::join(row, ","));
  }
  return out;
}

} // namespace

const std::vector<std::string> &csv_groups() {
  static const std::vector<std::string> groups{"generators", "load_bus", "dc", "decisions"};
  return groups;
}

std::map<std::string, std::string> render_csv(const SimulationRecord &r,
                                              const std::vector<std::string> &groups) {
  const auto &valid = csv_groups();
  for (const auto &g : groups)
    if (std::ranges::find(valid, g) == valid.end())
      throw ValidationError({fmt::format("unknown channel group '{}'; valid groups: {}", g,
                                         fmt::join(valid, ", "))});
  std::map<std::string, std::string> out;
  for (const auto &g : groups) {
    if (g == "generators")
      out[g] = generators_csv(r);
    else if (g == "load_bus")
      out[g] = load_bus_csv(r);
    else if (g == "dc")
      out[g] = dc_csv(r);
    else
      out[g] = decisions_csv(r);
  }
  return out;
}

std::vector<std::filesystem::path> export_csv(const SimulationRecord &r,
                                              const std::vector<std::string> &groups,
                                              const std::filesystem::path &dir) {
  auto files = render_csv(r, groups);
  std::filesystem::create_directories(dir);
  std::vector<std::filesystem::path> paths;
  for (const auto &[group, text] : files) {
    auto path = dir / (group + ".csv");
    std::ofstream out(path, std::ios::binary);
    out << text;
    if (!out)
      throw Error(fmt::format("cannot write {}", path.string()));
    paths.push_back(path);
  }
  return paths;
}

json to_json(const devices::TelemetryFrame &f) {
  json gens = json::array();
  for (const auto &g : f.generators)
    gens.push_back({{"id", g.id},
                    {"terminal_voltage_rms", g.terminal_voltage_rms},
                    {"stator_current_rms", g.stator_current_rms},
                    {"real_power", g.real_power},
                    {"reactive_power", g.reactive_power},
                    {"speed_rpm", g.speed_rpm},
                    {"torque", g.torque},
                    {"frequency", g.frequency},
                    {"bus_voltage_rms", g.bus_voltage_rms},
                    {"phase_difference", g.phase_difference}});
  json dc = json::array();
  for (const auto &d : f.dc)
    dc.push_back({{"field_voltage", d.field_voltage},
                  {"field_current", d.field_current},
                  {"armature_voltage", d.armature_voltage},
                  {"armature_current", d.armature_current}});
  auto switches = [](const std::vector<devices::SwitchTelemetry> &v) {
    json a = json::array();
    for (const auto &s : v)
      a.push_back({{"id", s.id}, {"state", devices::to_string(s.state)}});
    return a;
  };
  return {{"timestamp", f.timestamp},
          {"generators", gens},
          {"load_bus",
           {{"voltage_rms", f.load_bus.voltage_rms},
            {"current_rms", f.load_bus.current_rms},
            {"frequency", f.load_bus.frequency}}},
          {"dc", dc},
          {"breakers", switches(f.breakers)},
          {"relays", switches(f.relays)}};
}

json to_json(const controller::ControllerDecision &d, const controller::ControllerConfig &cfg) {
  json modes = json::object();
  for (std::size_t i = 0; i < d.modes.size() && i < cfg.generators.size(); ++i)
    modes[cfg.generators[i].id] = controller::to_string(d.modes[i]);
  auto cmds = [](const std::vector<controller::SwitchCommand> &v) {
    json a = json::array();
    for (const auto &c : v)
      a.push_back({{"id", c.id}, {"state", devices::to_string(c.state)}});
    return a;
  };
  json sync = nullptr;
  if (d.sync_close && *d.sync_close < cfg.generators.size())
    sync = cfg.generators[*d.sync_close].id;
  return {{"timestamp", d.timestamp},
          {"system_mode", controller::to_string(d.system_mode)},
          {"modes", modes},
          {"excitation_duty", d.excitation_duty},
          {"armature_duty", d.armature_duty},
          {"relay_commands", cmds(d.relay_commands)},
          {"breaker_commands", cmds(d.breaker_commands)},
          {"sync_close", sync},
          {"annotations", d.annotations}};
}

json to_json(const EventLogEntry &e) {
  return {{"t", e.t}, {"kind", e.kind}, {"detail", e.detail}, {"source", e.source}};
}

json record_summary(const SimulationRecord &r, const Scenario &s) {
  json events = json::array();
  for (const auto &e : r.events)
    events.push_back(to_json(e));
  json diag = nullptr;
  if (r.diagnostic)
    diag = {{"kind", r.diagnostic->kind}, {"message", r.diagnostic->message}, {"t", r.diagnostic->t}};
  return {{"format", "gridloop-record"},
          {"version", 1},
          {"scenario", to_json(s)},
          {"digest", r.digest},
          {"frames", r.frames.size()},
          {"truncated", r.truncated()},
          {"diagnostic", diag},
          {"events", events},
          {"energy",
           {{"mechanical_in", r.energy.mechanical_in},
            {"load", r.energy.load},
            {"losses", r.energy.losses},
            {"kinetic_initial", r.energy.kinetic_initial},
            {"kinetic", r.energy.kinetic},
            {"relative_imbalance", r.energy.relative_imbalance()}}},
          {"max_kcl_residual", r.max_kcl_residual},
          {"stale_frames", r.stale_frames}};
}

} // namespace gridloop::engine

/* SPDX-License-Identifier: Apache-2.0 */

#include <gridloop/controller/controller.hpp>

#include <fmt/format.h>

#include <algorithm>
#include <cmath>

namespace gridloop::controller {

const char *to_string(GeneratorMode m) {
  switch (m) {
  case GeneratorMode::offline: return "offline";
  case GeneratorMode::running: return "running";
  case GeneratorMode::synchronizing: return "synchronizing";
  case GeneratorMode::tripped: return "tripped";
  }
  return "?";
}

const char *to_string(SystemMode m) {
  switch (m) {
  case SystemMode::normal: return "normal";
  case SystemMode::alert: return "alert";
  case SystemMode::shedding: return "shedding";
  case SystemMode::island: return "island";
  }
  return "?";
}

const char *to_string(RequestKind k) {
  switch (k) {
  case RequestKind::trip: return "trip";
  case RequestKind::reset_trip: return "reset_trip";
  case RequestKind::sync_request: return "sync_request";
  case RequestKind::setpoint_change: return "setpoint_change";
  case RequestKind::relay_command: return "relay_command";
  case RequestKind::breaker_command: return "breaker_command";
  }
  return "?";
}

std::string Violation::key() const {
  return quantity + (bound == Bound::high ? ".high" : ".low");
}

namespace {

bool is_closed(const TelemetryFrame &frame, const std::string &id) {
  auto s = frame.switch_state(id);
  return s && *s == SwitchState::closed;
}

bool breaker_closed(const TelemetryFrame &frame, const ControllerConfig &cfg, std::size_t i) {
  return is_closed(frame, cfg.generators[i].breaker_id);
}

bool any_breaker_closed(const TelemetryFrame &frame, const ControllerConfig &cfg) {
  for (std::size_t i = 0; i < cfg.generators.size(); ++i)
    if (breaker_closed(frame, cfg, i))
      return true;
  return false;
}

bool on_line(const TelemetryFrame &frame, const ControllerState &state,
             const ControllerConfig &cfg, std::size_t i) {
  return state.generators[i].mode == GeneratorMode::running && breaker_closed(frame, cfg, i);
}

double online_demand(const TelemetryFrame &frame, const ControllerState &state,
                     const ControllerConfig &cfg) {
  double p = 0.0;
  for (std::size_t i = 0; i < cfg.generators.size() && i < frame.generators.size(); ++i)
    if (on_line(frame, state, cfg, i))
      p += std::max(0.0, frame.generators[i].real_power);
  return p;
}

double online_capacity(const TelemetryFrame &frame, const ControllerState &state,
                       const ControllerConfig &cfg) {
  double c = 0.0;
  for (std::size_t i = 0; i < cfg.generators.size(); ++i)
    if (on_line(frame, state, cfg, i))
      c += cfg.generators[i].rated_power;
  return c;
}

void reset_regulators(GeneratorControl &g) {
  g.excitation_integrator = 0.0;
  g.speed_integrator = 0.0;
  g.sharing_error = 0.0;
  g.excitation_duty = 0.0;
  g.armature_duty = 0.0;
  g.sync_count = 0;
  g.close_pending = false;
  g.sync_block.clear();
}

} // namespace

std::vector<Violation> check_limits(const TelemetryFrame &frame, const ControllerConfig &cfg) {
  std::vector<Violation> out;
  auto over = [&](std::string quantity, double value, double limit,
                  std::optional<std::size_t> gen) {
    if (value <= limit)
      return;
    Band band = value > limit * cfg.permissible_band ? Band::beyond : Band::in_permissible;
    out.push_back({std::move(quantity), Bound::high, band, value, limit, gen});
  };
  auto deviation = [&](std::string quantity, double value, double centre, double tol,
                       double permissible, std::optional<std::size_t> gen) {
    double d = value - centre;
    if (std::abs(d) <= tol)
      return;
    Band band = std::abs(d) > permissible ? Band::beyond : Band::in_permissible;
    Bound bound = d > 0 ? Bound::high : Bound::low;
    out.push_back({std::move(quantity), bound, band, value,
                   bound == Bound::high ? centre + tol : centre - tol, gen});
  };

  const double v_nom = cfg.nominal_voltage;
  over("load_bus.current_rms", frame.load_bus.current_rms, cfg.branch_current_limit, {});
  for (std::size_t i = 0; i < cfg.generators.size() && i < frame.generators.size(); ++i) {
    if (!breaker_closed(frame, cfg, i))
      continue;
    const auto &g = frame.generators[i];
    const auto &id = cfg.generators[i].id;
    over(id + ".stator_current_rms", g.stator_current_rms, cfg.branch_current_limit, i);
    over(id + ".real_power", g.real_power, cfg.generators[i].rated_power, i);
    deviation(id + ".terminal_voltage_rms", g.terminal_voltage_rms, v_nom,
              cfg.voltage_tolerance * v_nom, cfg.voltage_permissible * v_nom, i);
  }
  if (any_breaker_closed(frame, cfg)) {
    deviation("load_bus.voltage_rms", frame.load_bus.voltage_rms, v_nom,
              cfg.voltage_tolerance * v_nom, cfg.voltage_permissible * v_nom, {});
    deviation("load_bus.frequency", frame.load_bus.frequency, cfg.nominal_frequency,
              cfg.frequency_band, cfg.frequency_permissible, {});
  }
  return out;
}

PiResult pi_step(const PiGains &gains, double integrator, double error, double dt) {
  double next = integrator + error * dt;
  double u = gains.bias + gains.kp * error + gains.ki * next;
  if (u >= 0.0 && u <= 1.0)
    return {u, next};
  return {std::clamp(gains.bias + gains.kp * error + gains.ki * integrator, 0.0, 1.0), integrator};
}

double integrator_for(const PiGains &gains, double duty) {
  return gains.ki > 0.0 ? (duty - gains.bias) / gains.ki : 0.0;
}

ControllerState initial_controller_state(const ControllerConfig &cfg,
                                         const std::vector<bool> &breaker_closed,
                                         const std::vector<double> &excitation_duty,
                                         const std::vector<double> &armature_duty) {
  ControllerState s;
  for (std::size_t i = 0; i < cfg.generators.size(); ++i) {
    GeneratorControl g;
    g.mode = i < breaker_closed.size() && breaker_closed[i] ? GeneratorMode::running
                                                            : GeneratorMode::offline;
    g.voltage_setpoint = cfg.nominal_voltage;
    g.speed_setpoint_rpm = cfg.speed_setpoint_rpm;
    g.excitation_duty = i < excitation_duty.size() ? excitation_duty[i] : cfg.excitation.bias;
    g.armature_duty = i < armature_duty.size() ? armature_duty[i] : cfg.speed.bias;
    g.excitation_integrator = integrator_for(cfg.excitation, g.excitation_duty);
    g.speed_integrator = integrator_for(cfg.speed, g.armature_duty);
    s.generators.push_back(g);
  }
  return s;
}

SyncCheck sync_check(const devices::GeneratorTelemetry &incoming,
                     const devices::LoadBusTelemetry &bus, const ControllerConfig &cfg) {
  SyncCheck r;
  const auto &tol = cfg.sync;
  const double v_nom = cfg.nominal_voltage;
  r.dead_bus = incoming.bus_voltage_rms < tol.dead_bus_fraction * v_nom;
  if (r.dead_bus) {
    r.voltage_residual = std::abs(incoming.terminal_voltage_rms - v_nom) / v_nom;
    r.frequency_residual = incoming.frequency - cfg.nominal_frequency;
    if (!tol.dead_bus_close)
      r.blocking = "dead bus";
  } else {
    r.voltage_residual = std::abs(incoming.terminal_voltage_rms - incoming.bus_voltage_rms) / v_nom;
    r.frequency_residual = incoming.frequency - bus.frequency;
    r.phase_residual = wrap_degrees(incoming.phase_difference);
  }
  if (r.blocking.empty()) {
    if (r.voltage_residual > tol.voltage_tolerance)
      r.blocking = "voltage residual";
    else if (std::abs(r.frequency_residual) > tol.frequency_tolerance)
      r.blocking = "frequency residual";
    else if (std::abs(r.phase_residual) > tol.phase_tolerance)
      r.blocking = "phase residual";
  }
  r.permissive = r.blocking.empty();
  return r;
}

IsolationResult isolate_generator(std::size_t generator, const std::string &evidence,
                                  const TelemetryFrame &frame, ControllerState &state,
                                  const ControllerConfig &cfg) {
  IsolationResult r;
  auto &g = state.generators.at(generator);
  const auto &rating = cfg.generators.at(generator);
  if (g.mode == GeneratorMode::tripped) {
    r.annotations.push_back(fmt::format("trip {} ignored: already tripped", rating.id));
    return r;
  }

  for (std::size_t j = 0; j < cfg.generators.size() && j < frame.generators.size(); ++j)
    if (breaker_closed(frame, cfg, j) && state.generators[j].mode != GeneratorMode::tripped)
      r.demand += std::max(0.0, frame.generators[j].real_power);

  g.mode = GeneratorMode::tripped;
  reset_regulators(g);
  g.breaker_open_sent = frame.timestamp;
  r.breaker_command = SwitchCommand{rating.breaker_id, SwitchState::open};
  r.annotations.push_back(fmt::format("isolate {}: {}", rating.id, evidence));

  std::vector<std::size_t> healthy;
  for (std::size_t j = 0; j < cfg.generators.size(); ++j)
    if (j != generator && on_line(frame, state, cfg, j)) {
      healthy.push_back(j);
      r.healthy_capacity += cfg.generators[j].rated_power;
    }
  if (healthy.empty()) {
    r.blackout = true;
    r.annotations.push_back("blackout: no healthy generator on line");
    return r;
  }
  for (auto j : healthy) {
    double share = cfg.generators[j].rated_power / r.healthy_capacity;
    r.annotations.push_back(fmt::format("redispatch {}: share {:.2f}, target {:.0f} W",
                                        cfg.generators[j].id, share, share * r.demand));
  }
  if (r.demand > r.healthy_capacity * cfg.permissible_band) {
    r.deficit = true;
    r.annotations.push_back(fmt::format("deficit: demand {:.0f} W exceeds healthy capacity {:.0f} W",
                                        r.demand, r.healthy_capacity));
  }
  return r;
}

ShedResult shed_load(const TelemetryFrame &frame, const ControllerConfig &cfg,
                     ControllerState &state) {
  ShedResult r;
  auto &ep = state.shedding;
  if (!ep.active())
    return r;
  if (ep.pending_relay) {
    if (is_closed(frame, *ep.pending_relay))
      return r; // contacts still moving
    ep.shed_relays.push_back(*ep.pending_relay);
    ep.pending_relay.reset();
  }

  const bool overcurrent = ep.reason == ShedEpisode::Reason::overcurrent;
  const double current = frame.load_bus.current_rms;
  const double demand = online_demand(frame, state, cfg);
  const double capacity = online_capacity(frame, state, cfg);
  const bool satisfied = overcurrent ? current <= cfg.branch_current_limit : demand <= capacity;
  if (satisfied) {
    r.annotations.push_back(
        overcurrent ? fmt::format("shedding complete: load current {:.2f} A", current)
                    : fmt::format("shedding complete: demand {:.0f} W", demand));
    ep = {};
    return r;
  }

  for (const auto &t : cfg.shedding_order) {
    if (!is_closed(frame, t.relay_id))
      continue;
    if (std::ranges::find(ep.shed_relays, t.relay_id) != ep.shed_relays.end())
      continue;
    r.relay_commands.push_back({t.relay_id, SwitchState::open});
    ep.pending_relay = t.relay_id;
    r.annotations.push_back(
        overcurrent
            ? fmt::format("shed {} ({}, priority {}): load current {:.2f} A > {:.2f} A", t.relay_id,
                          t.load_id, t.priority, current, cfg.branch_current_limit)
            : fmt::format("shed {} ({}, priority {}): demand {:.0f} W > capacity {:.0f} W",
                          t.relay_id, t.load_id, t.priority, demand, capacity));
    return r;
  }

  r.escalate = true;
  r.annotations.push_back(
      overcurrent ? fmt::format("escalation: no sheddable load left, load current {:.2f} A", current)
                  : fmt::format("escalation: no sheddable load left, demand {:.0f} W", demand));
  ep = {};
  return r;
}

namespace {

struct StepContext {
  const TelemetryFrame &frame;
  const ControllerConfig &cfg;
  ControllerState &state;
  ControllerDecision &decision;
  std::vector<std::pair<std::size_t, std::string>> trips;

  void note(std::string s) { decision.annotations.push_back(std::move(s)); }

  void breaker(const std::string &id, SwitchState s) {
    SwitchCommand c{id, s};
    auto &v = decision.breaker_commands;
    std::erase_if(v, [&](const SwitchCommand &x) { return x.id == id; });
    v.push_back(c);
  }

  void relay(const std::string &id, SwitchState s) {
    auto &v = decision.relay_commands;
    std::erase_if(v, [&](const SwitchCommand &x) { return x.id == id; });
    v.push_back({id, s});
  }
};

void begin_sync(StepContext &c, std::size_t i, bool auto_match) {
  auto &g = c.state.generators[i];
  const auto &id = c.cfg.generators[i].id;
  if (g.mode == GeneratorMode::tripped) {
    c.note(fmt::format("sync blocked: {} tripped", id));
    return;
  }
  if (g.mode == GeneratorMode::running) {
    c.note(fmt::format("sync request ignored: {} already on line", id));
    return;
  }
  g.mode = GeneratorMode::synchronizing;
  g.auto_match = auto_match;
  g.sync_count = 0;
  g.close_pending = false;
  g.sync_block.clear();
  c.note(fmt::format("sync request {} accepted{}", id, auto_match ? "" : " (manual matching)"));
}

void intake(StepContext &c) {
  auto requests = std::move(c.state.pending_requests);
  c.state.pending_requests.clear();
  const auto &cfg = c.cfg;
  for (const auto &rq : requests) {
    int gi = cfg.generator_index(rq.target);
    auto unknown = [&] {
      c.note(fmt::format("{} {} rejected: unknown target", to_string(rq.kind), rq.target));
    };
    switch (rq.kind) {
    case RequestKind::trip:
      if (gi < 0)
        unknown();
      else
        c.trips.emplace_back(gi, "commanded trip");
      break;
    case RequestKind::reset_trip:
      if (gi < 0) {
        unknown();
      } else if (c.state.generators[gi].mode == GeneratorMode::tripped) {
        auto &g = c.state.generators[gi];
        g.mode = GeneratorMode::offline;
        g.breaker_open_sent.reset();
        g.excitation_integrator = integrator_for(cfg.excitation, cfg.excitation.bias);
        g.speed_integrator = integrator_for(cfg.speed, cfg.speed.bias);
        c.note(fmt::format("reset {}: offline", rq.target));
      } else {
        c.note(fmt::format("reset {} ignored: not tripped", rq.target));
      }
      break;
    case RequestKind::sync_request:
      if (gi < 0)
        unknown();
      else
        begin_sync(c, gi, rq.auto_match);
      break;
    case RequestKind::setpoint_change:
      if (gi < 0) {
        unknown();
        break;
      }
      if (rq.voltage_setpoint)
        c.state.generators[gi].voltage_setpoint = *rq.voltage_setpoint;
      if (rq.speed_setpoint_rpm)
        c.state.generators[gi].speed_setpoint_rpm = *rq.speed_setpoint_rpm;
      c.note(fmt::format("setpoint {}: {:.1f} V, {:.1f} rpm", rq.target,
                         c.state.generators[gi].voltage_setpoint,
                         c.state.generators[gi].speed_setpoint_rpm));
      break;
    case RequestKind::relay_command:
      if (!rq.state || !c.frame.switch_state(rq.target)) {
        unknown();
        break;
      }
      c.relay(rq.target, *rq.state);
      c.note(fmt::format("operator: {} {}", rq.target, devices::to_string(*rq.state)));
      break;
    case RequestKind::breaker_command: {
      int bi = -1;
      for (std::size_t i = 0; i < cfg.generators.size(); ++i)
        if (cfg.generators[i].breaker_id == rq.target)
          bi = static_cast<int>(i);
      if (bi < 0 || !rq.state) {
        unknown();
        break;
      }
      auto &g = c.state.generators[bi];
      if (*rq.state == SwitchState::closed) {
        begin_sync(c, bi, true);
      } else if (g.mode != GeneratorMode::tripped) {
        g.mode = GeneratorMode::offline;
        g.close_pending = false;
        c.breaker(rq.target, SwitchState::open);
        c.note(fmt::format("operator: {} open", rq.target));
      }
      break;
    }
    }
  }
}

void reconcile(StepContext &c) {
  for (std::size_t i = 0; i < c.cfg.generators.size(); ++i) {
    auto &g = c.state.generators[i];
    const auto &rating = c.cfg.generators[i];
    bool closed = breaker_closed(c.frame, c.cfg, i);
    switch (g.mode) {
    case GeneratorMode::running:
      if (!closed) {
        g.mode = GeneratorMode::offline;
        c.note(fmt::format("{} breaker {} found open", rating.id, rating.breaker_id));
      }
      break;
    case GeneratorMode::synchronizing:
      if (closed) {
        g.mode = GeneratorMode::running;
        g.close_pending = false;
        c.note(fmt::format("{} synchronized", rating.id));
      }
      break;
    case GeneratorMode::offline:
      if (closed) {
        g.mode = GeneratorMode::running;
        c.note(fmt::format("{} breaker {} found closed", rating.id, rating.breaker_id));
      }
      break;
    case GeneratorMode::tripped:
      if (closed && (!g.breaker_open_sent ||
                     c.frame.timestamp - *g.breaker_open_sent >= c.cfg.switch_retry_time - 1e-9)) {
        g.breaker_open_sent = c.frame.timestamp;
        c.breaker(rating.breaker_id, SwitchState::open);
      }
      break;
    }
  }
}

void update_counters(StepContext &c, const std::vector<Violation> &violations) {
  std::map<std::string, int> next;
  for (const auto &v : violations) {
    if (v.band != Band::beyond)
      continue;
    auto it = c.state.violation_counters.find(v.key());
    next[v.key()] = (it == c.state.violation_counters.end() ? 0 : it->second) + 1;
  }
  c.state.violation_counters = std::move(next);
}

bool confirmed(const StepContext &c, const Violation &v) {
  if (v.band != Band::beyond)
    return false;
  auto it = c.state.violation_counters.find(v.key());
  return it != c.state.violation_counters.end() && it->second >= c.cfg.trip_confirmation_periods;
}

void start_shedding(StepContext &c, ShedEpisode::Reason reason) {
  if (c.state.shedding.active())
    return;
  c.state.shedding = {};
  c.state.shedding.reason = reason;
  c.state.shedding.started_at = c.frame.timestamp;
}

void protect(StepContext &c, const std::vector<Violation> &violations) {
  const auto &cfg = c.cfg;
  auto beyond = [&](const std::string &quantity) {
    for (const auto &v : violations)
      if (v.quantity == quantity && v.band == Band::beyond)
        return true;
    return false;
  };
  const bool load_overcurrent = beyond("load_bus.current_rms");
  const bool load_voltage = beyond("load_bus.voltage_rms");

  // A machine is faulted when its own measurement is beyond band while the
  // load bus is not; a load-side fault shows on both.
  for (const auto &v : violations) {
    if (!v.generator || !confirmed(c, v))
      continue;
    std::size_t i = *v.generator;
    if (c.state.generators[i].mode == GeneratorMode::tripped)
      continue;
    bool current = v.quantity.ends_with(".stator_current_rms") && !load_overcurrent;
    bool voltage = v.quantity.ends_with(".terminal_voltage_rms") && !load_voltage;
    if (current || voltage)
      c.trips.emplace_back(i, fmt::format("{} {:.2f} beyond band (limit {:.2f})", v.quantity,
                                          v.value, v.limit));
  }

  for (const auto &[i, evidence] : c.trips) {
    auto r = isolate_generator(i, evidence, c.frame, c.state, cfg);
    if (r.breaker_command)
      c.breaker(r.breaker_command->id, r.breaker_command->state);
    for (auto &a : r.annotations)
      c.note(std::move(a));
    if (r.deficit)
      start_shedding(c, ShedEpisode::Reason::deficit);
  }
}

void shed(StepContext &c, const std::vector<Violation> &violations) {
  for (const auto &v : violations) {
    if (!confirmed(c, v))
      continue;
    if (v.quantity == "load_bus.current_rms")
      start_shedding(c, ShedEpisode::Reason::overcurrent);
    else if (v.quantity.ends_with(".real_power") &&
             online_demand(c.frame, c.state, c.cfg) >
                 online_capacity(c.frame, c.state, c.cfg) * c.cfg.permissible_band)
      start_shedding(c, ShedEpisode::Reason::deficit);
  }
  const bool overcurrent = c.state.shedding.reason == ShedEpisode::Reason::overcurrent;
  auto r = shed_load(c.frame, c.cfg, c.state);
  for (const auto &cmd : r.relay_commands)
    c.relay(cmd.id, cmd.state);
  for (auto &a : r.annotations)
    c.note(std::move(a));
  if (r.escalate && overcurrent) {
    std::optional<std::size_t> worst;
    for (std::size_t i = 0; i < c.cfg.generators.size() && i < c.frame.generators.size(); ++i)
      if (on_line(c.frame, c.state, c.cfg, i) &&
          (!worst || c.frame.generators[i].stator_current_rms >
                         c.frame.generators[*worst].stator_current_rms))
        worst = i;
    if (worst) {
      auto iso = isolate_generator(*worst, "overcurrent persists with all loads shed", c.frame,
                                   c.state, c.cfg);
      if (iso.breaker_command)
        c.breaker(iso.breaker_command->id, iso.breaker_command->state);
      for (auto &a : iso.annotations)
        c.note(std::move(a));
    }
  }
}

void regulate(StepContext &c) {
  const auto &cfg = c.cfg;
  const double dt = cfg.control_period;
  double total_p = 0.0, running_rating = 0.0;
  for (std::size_t i = 0; i < cfg.generators.size() && i < c.frame.generators.size(); ++i)
    if (on_line(c.frame, c.state, cfg, i)) {
      total_p += c.frame.generators[i].real_power;
      running_rating += cfg.generators[i].rated_power;
    }

  for (std::size_t i = 0; i < cfg.generators.size(); ++i) {
    auto &g = c.state.generators[i];
    const auto &rating = cfg.generators[i];
    if (g.mode == GeneratorMode::tripped || i >= c.frame.generators.size()) {
      reset_regulators(g);
      continue;
    }
    const auto &m = c.frame.generators[i];
    double v_target = g.voltage_setpoint;
    double n_target = g.speed_setpoint_rpm;
    double sharing_raw = 0.0;

    if (g.mode == GeneratorMode::synchronizing) {
      bool live = m.bus_voltage_rms >= cfg.sync.dead_bus_fraction * cfg.nominal_voltage;
      if (live) {
        v_target = m.bus_voltage_rms;
        if (g.auto_match) {
          double slip = std::clamp(cfg.sync.phase_gain * wrap_degrees(m.phase_difference),
                                   -cfg.sync.max_slip, cfg.sync.max_slip);
          n_target = 60.0 * (c.frame.load_bus.frequency - slip) / rating.pole_pairs;
        }
      }
    } else if (g.mode == GeneratorMode::running && running_rating > 0.0 &&
               breaker_closed(c.frame, cfg, i)) {
      double share = rating.rated_power / running_rating;
      sharing_raw = (m.real_power - share * total_p) / rating.rated_power;
    }
    // Filtered so the sharing loop stays well below the electromechanical
    // swing mode between the machines.
    double alpha = cfg.sharing_time_constant > 0.0 ? std::min(1.0, dt / cfg.sharing_time_constant) : 1.0;
    g.sharing_error += alpha * (sharing_raw - g.sharing_error);
    const double sharing = cfg.speed_droop * g.sharing_error;

    auto exc = pi_step(cfg.excitation, g.excitation_integrator, v_target - m.terminal_voltage_rms, dt);
    double speed_error = (n_target - m.speed_rpm) / rating.rated_speed_rpm - sharing;
    auto arm = pi_step(cfg.speed, g.speed_integrator, speed_error, dt);
    g.excitation_integrator = exc.integrator;
    g.excitation_duty = exc.output;
    g.speed_integrator = arm.integrator;
    g.armature_duty = arm.output;
  }
}

void supervise_sync(StepContext &c) {
  const auto &cfg = c.cfg;
  for (std::size_t i = 0; i < cfg.generators.size() && i < c.frame.generators.size(); ++i) {
    auto &g = c.state.generators[i];
    if (g.mode != GeneratorMode::synchronizing || g.close_pending)
      continue;
    const auto &rating = cfg.generators[i];
    auto r = sync_check(c.frame.generators[i], c.frame.load_bus, cfg);
    if (!r.permissive) {
      g.sync_count = 0;
      if (r.blocking != g.sync_block) {
        g.sync_block = r.blocking;
        c.note(fmt::format("sync blocked: {} {} (dV {:.3f}, df {:+.3f} Hz, dphase {:+.1f} deg)",
                           rating.id, r.blocking, r.voltage_residual, r.frequency_residual,
                           r.phase_residual));
      }
      continue;
    }
    g.sync_block.clear();
    if (++g.sync_count < cfg.sync.confirmation_periods)
      continue;
    if (c.decision.sync_close)
      continue; // one closing per period
    g.close_pending = true;
    c.decision.sync_close = i;
    c.breaker(rating.breaker_id, SwitchState::closed);
    c.note(r.dead_bus
               ? fmt::format("sync close {}: dead bus, dV {:.3f}", rating.id, r.voltage_residual)
               : fmt::format("sync close {}: dV {:.3f}, df {:+.3f} Hz, dphase {:+.1f} deg",
                             rating.id, r.voltage_residual, r.frequency_residual,
                             r.phase_residual));
  }
}

} // namespace

ControllerStep controller_step(const TelemetryFrame &frame, ControllerState state,
                               const ControllerConfig &cfg) {
  ControllerDecision decision;
  decision.timestamp = frame.timestamp;
  if (state.generators.size() != cfg.generators.size())
    throw Error(fmt::format("controller state has {} generators, config has {}",
                            state.generators.size(), cfg.generators.size()));

  auto finish = [&](ControllerState &s, ControllerDecision &d) {
    d.modes.clear();
    d.excitation_duty.clear();
    d.armature_duty.clear();
    for (const auto &g : s.generators) {
      d.modes.push_back(g.mode);
      d.excitation_duty.push_back(g.excitation_duty);
      d.armature_duty.push_back(g.armature_duty);
    }
    d.system_mode = s.system_mode;
  };

  if (state.last_timestamp && frame.timestamp <= *state.last_timestamp) {
    ++state.stale_frames;
    decision.annotations.push_back(fmt::format("stale frame t={:.6f} ignored", frame.timestamp));
    finish(state, decision);
    return {std::move(state), std::move(decision)};
  }
  state.last_timestamp = frame.timestamp;

  StepContext c{frame, cfg, state, decision, {}};
  intake(c);
  reconcile(c);
  auto violations = check_limits(frame, cfg);
  update_counters(c, violations);
  protect(c, violations);
  shed(c, violations);
  regulate(c);
  supervise_sync(c);

  // Every confirmed beyond-band violation is either acted on this period or
  // reported.
  if (decision.relay_commands.empty() && decision.breaker_commands.empty()) {
    for (const auto &v : violations) {
      if (!confirmed(c, v))
        continue;
      const char *status = state.shedding.active() ? "shedding in progress"
                           : v.generator && state.generators[*v.generator].mode ==
                                                GeneratorMode::tripped
                               ? "machine isolated"
                               : "no mitigation available";
      decision.annotations.push_back(fmt::format("escalation: {} beyond band ({:.2f}), {}",
                                                 v.key(), v.value, status));
    }
  }

  bool connected = any_breaker_closed(frame, cfg);
  for (const auto &b : decision.breaker_commands)
    connected |= b.state == SwitchState::closed;
  bool any_live = false;
  for (const auto &g : state.generators)
    any_live |= g.mode == GeneratorMode::running;
  if (!any_live || !connected)
    state.system_mode = SystemMode::island;
  else if (state.shedding.active())
    state.system_mode = SystemMode::shedding;
  else if (!violations.empty())
    state.system_mode = SystemMode::alert;
  else
    state.system_mode = SystemMode::normal;

  finish(state, decision);
  return {std::move(state), std::move(decision)};
}

std::string format_decision(const ControllerDecision &d, const ControllerConfig &cfg) {
  std::string out = fmt::format("t={:.6f} sys={}", d.timestamp, to_string(d.system_mode));
  out += " gen=";
  for (std::size_t i = 0; i < d.modes.size(); ++i) {
    if (i)
      out += ',';
    out += i < cfg.generators.size() ? cfg.generators[i].id : fmt::format("#{}", i);
    out += ':';
    out += to_string(d.modes[i]);
  }
  out += fmt::format(" exc={:.4f}", fmt::join(d.excitation_duty, ","));
  out += fmt::format(" arm={:.4f}", fmt::join(d.armature_duty, ","));
  auto switches = [&](const char *name, const std::vector<SwitchCommand> &v) {
    if (v.empty())
      return;
    out += fmt::format(" {}=", name);
    for (std::size_t i = 0; i < v.size(); ++i)
      out += fmt::format("{}{}:{}", i ? "," : "", v[i].id, devices::to_string(v[i].state));
  };
  switches("relay", d.relay_commands);
  switches("breaker", d.breaker_commands);
  if (d.sync_close && *d.sync_close < cfg.generators.size())
    out += " sync=" + cfg.generators[*d.sync_close].id;
  if (!d.annotations.empty())
    out += fmt::format(" note=\"{}\"", fmt::join(d.annotations, "; "));
  return out;
}

} // namespace gridloop::controller

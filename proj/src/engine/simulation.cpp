/* SPDX-License-Identifier: Apache-2.0 */

#include <gridloop/engine/simulation.hpp>

#include <fmt/format.h>

#include <cmath>

namespace gridloop::engine {

using controller::Request;
using controller::RequestKind;
using devices::SwitchState;

namespace {

SwitchState state_param(const json &p) {
  return p.at("state").get<std::string>() == "closed" ? SwitchState::closed : SwitchState::open;
}

std::optional<RequestKind> request_kind(const std::string &command) {
  for (auto k : {RequestKind::trip, RequestKind::reset_trip, RequestKind::sync_request,
                 RequestKind::setpoint_change, RequestKind::relay_command,
                 RequestKind::breaker_command})
    if (command == controller::to_string(k))
      return k;
  return std::nullopt;
}

} // namespace

std::optional<Request> operator_request(const ScenarioEvent &e, double t,
                                        const std::string &fallback_id) {
  const auto &p = e.params;
  Request rq;
  rq.timestamp = t;
  if (e.kind == EventKind::generator_trip) {
    rq.request_id = fallback_id;
    rq.kind = RequestKind::trip;
    rq.target = p.at("generator").get<std::string>();
    return rq;
  }
  if (e.kind != EventKind::operator_command)
    return std::nullopt;
  rq.request_id = p.value("request_id", fallback_id);
  rq.kind = *request_kind(p.at("command").get<std::string>());
  rq.target = p.at("target").get<std::string>();
  if (p.contains("state"))
    rq.state = state_param(p);
  if (p.contains("voltage_setpoint"))
    rq.voltage_setpoint = p["voltage_setpoint"].get<double>();
  if (p.contains("speed_setpoint_rpm"))
    rq.speed_setpoint_rpm = p["speed_setpoint_rpm"].get<double>();
  rq.auto_match = p.value("auto_match", true);
  return rq;
}

Simulation::Simulation(Scenario scenario) : scenario_(std::move(scenario)) {
  if (auto p = scenario_.problems(); !p.empty())
    throw ValidationError(std::move(p));
  ratio_ = scenario_.timing.ratio();
  frames_total_ = scenario_.frame_count();

  const auto &pc = scenario_.plant;
  auto topology = scenario_.initial_topology();
  plant::EquilibriumRequest req;
  req.topology = topology;
  for (std::size_t i = 0; i < pc.sets.size(); ++i) {
    auto g = scenario_.initial_generator(i);
    req.terminal_voltage.push_back(g.terminal_voltage);
    req.speed_rpm.push_back(g.speed_rpm);
    req.phase_offset_deg.push_back(g.phase_offset_deg);
  }
  plant::Equilibrium eq;
  try {
    eq = plant::solve_equilibrium(pc, req);
  } catch (const Error &e) {
    throw ValidationError({fmt::format("initial operating point is not reachable: {}", e.what())});
  }
  plant_ = std::make_unique<plant::Plant>(pc, eq.sets, topology);
  devices_ = std::make_unique<devices::DeviceBank>(pc, scenario_.devices, scenario_.seed, *plant_,
                                                   topology);
  std::vector<bool> breakers(topology.breaker_closed.begin(), topology.breaker_closed.end());
  ctrl_ = controller::initial_controller_state(scenario_.controller, breakers,
                                               eq.actuation.excitation_duty,
                                               eq.actuation.armature_duty);
  for (std::size_t i = 0; i < pc.sets.size(); ++i) {
    auto g = scenario_.initial_generator(i);
    ctrl_.generators[i].voltage_setpoint = g.terminal_voltage;
  }
  actuation_ = eq.actuation;
}

Simulation::~Simulation() = default;

const plant::Plant &Simulation::plant() const { return *plant_; }

bool Simulation::finished() const { return diagnostic_ || period_ >= frames_total_; }

double Simulation::time() const { return static_cast<double>(period_) * scenario_.timing.control_period; }

InjectResult Simulation::inject(const ScenarioEvent &event, std::string source) {
  if (auto p = event_problem(scenario_, event))
    return {false, *p};
  std::lock_guard lock(inbox_mutex_);
  inbox_.emplace_back(event, std::move(source));
  return {true, {}};
}

EventLogEntry Simulation::describe(const ScenarioEvent &e, const std::string &source) const {
  return {time(), to_string(e.kind), e.params.dump(), source};
}

void Simulation::apply(const ScenarioEvent &e, const std::string &source) {
  const auto &p = e.params;
  auto &pc = scenario_.plant;
  switch (e.kind) {
  case EventKind::load_step: {
    const auto id = p.at("load").get<std::string>();
    for (std::size_t j = 0; j < pc.loads.elements.size(); ++j)
      if (pc.loads.elements[j].id == id)
        plant_->set_load_impedance(j, {p.at("resistance").get<double>(), p.value("reactance", 0.0)});
    break;
  }
  case EventKind::relay_force:
    devices_->force(p.at("relay").get<std::string>(), state_param(p));
    plant_->set_topology(devices_->topology());
    break;
  case EventKind::generator_trip:
    ctrl_.pending_requests.push_back(
        *operator_request(e, time(), fmt::format("{}-{}", source, ++request_counter_)));
    break;
  case EventKind::sensor_bias:
    devices_->set_bias(p.at("channel").get<std::string>(), p.at("bias").get<double>());
    break;
  case EventKind::operator_command:
    ctrl_.pending_requests.push_back(
        *operator_request(e, time(), fmt::format("{}-{}", source, ++request_counter_)));
    break;
  }
  events_.push_back(describe(e, source));
  if (on_event)
    on_event(events_.back());
}

bool Simulation::step() {
  if (finished())
    return false;
  const double t = time();
  const double dt = scenario_.timing.plant_dt;
  try {
    auto frame = devices_->sample(*plant_, t);

    const double guard = 1e-9 * scenario_.timing.control_period;
    while (next_event_ < scenario_.events.size() && scenario_.events[next_event_].t <= t + guard)
      apply(scenario_.events[next_event_++], "scenario");
    std::deque<std::pair<ScenarioEvent, std::string>> inbox;
    {
      std::lock_guard lock(inbox_mutex_);
      inbox.swap(inbox_);
    }
    for (const auto &[e, source] : inbox)
      apply(e, source);

    auto result = controller::controller_step(frame, std::move(ctrl_), scenario_.controller);
    ctrl_ = std::move(result.state);
    const auto &decision = result.decision;
    for (const auto *cmds : {&decision.relay_commands, &decision.breaker_commands})
      for (const auto &c : *cmds)
        devices_->command(c.id, c.state, t, dt);
    actuation_.excitation_duty = decision.excitation_duty;
    actuation_.armature_duty = decision.armature_duty;

    frames_.push_back(frame);
    decisions_.push_back(decision);
    decision_log_.push_back(controller::format_decision(decision, scenario_.controller));
    if (on_period)
      on_period(frames_.back(), decisions_.back());

    for (int k = 0; k < ratio_; ++k) {
      plant_->step(actuation_, dt);
      if (devices_->advance())
        plant_->set_topology(devices_->topology());
    }
  } catch (const IntegrationDivergence &e) {
    diagnostic_ = Diagnostic{"divergence", e.what(), t};
  } catch (const NetworkSingularity &e) {
    diagnostic_ = Diagnostic{"singular_network", e.what(), t};
  } catch (const DegenerateSpeed &e) {
    diagnostic_ = Diagnostic{"degenerate_speed", e.what(), t};
  } catch (const Error &e) {
    diagnostic_ = Diagnostic{"runtime_error", e.what(), t};
  }
  ++period_;
  return !diagnostic_;
}

SimulationRecord Simulation::run() {
  while (step()) {
  }
  return record();
}

SimulationRecord Simulation::record() const {
  SimulationRecord r;
  r.scenario_name = scenario_.name;
  r.seed = scenario_.seed;
  r.control_period = scenario_.timing.control_period;
  for (const auto &s : scenario_.plant.sets)
    r.generator_ids.push_back(s.id);
  r.frames = frames_;
  r.decisions = decisions_;
  r.decision_log = decision_log_;
  r.events = events_;
  r.diagnostic = diagnostic_;
  r.final_sets = plant_->sets();
  r.final_topology = plant_->topology();
  r.final_time = plant_->time();
  r.energy = plant_->energy();
  r.max_kcl_residual = plant_->max_kcl_residual();
  r.stale_frames = ctrl_.stale_frames;
  r.digest = record_digest(r);
  return r;
}

SimulationRecord run_scenario(const Scenario &scenario) {
  Simulation sim(scenario);
  return sim.run();
}

} // namespace gridloop::engine

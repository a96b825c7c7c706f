/* SPDX-License-Identifier: Apache-2.0 */

#include <gridloop/service/control_service.hpp>

#include <fmt/format.h>

namespace gridloop::service {

json reject_message(const std::string &request_id, const std::string &reason) {
  return {{"kind", "reject"},
          {"request_id", request_id.empty() ? json(nullptr) : json(request_id)},
          {"reason", reason}};
}

namespace {

Payload encode(const json &msg) { return std::make_shared<const std::string>(frame_message(msg.dump())); }

json ack_message(const std::string &request_id) { return {{"kind", "ack"}, {"request_id", request_id}}; }

json event_message(const std::string &event) { return {{"kind", "event"}, {"event", event}}; }

bool notable(const controller::ControllerDecision &d) {
  return !d.relay_commands.empty() || !d.breaker_commands.empty() || d.sync_close.has_value() ||
         !d.annotations.empty();
}

} // namespace

ControlService::ControlService(engine::Simulation &sim, ServiceOptions options)
    : sim_(sim), options_(std::move(options)) {
  if (options_.decimation < 1)
    throw DomainError("decimation must be at least 1");
  if (options_.backlog < 1)
    throw DomainError("backlog must be at least 1");
}

void ControlService::attach() {
  sim_.on_period = [this](const devices::TelemetryFrame &f, const controller::ControllerDecision &d) {
    publish(f, d, sim_.controller_state());
  };
  sim_.on_event = [this](const engine::EventLogEntry &e) { publish_event(e); };
}

SessionId ControlService::open_session() {
  std::lock_guard lock(mutex_);
  SessionId id = next_id_++;
  sessions_[id];
  return id;
}

void ControlService::close_session(SessionId id) {
  std::lock_guard lock(mutex_);
  sessions_.erase(id);
}

std::size_t ControlService::session_count() const {
  std::lock_guard lock(mutex_);
  return sessions_.size();
}

std::size_t ControlService::subscriber_count() const {
  std::lock_guard lock(mutex_);
  std::size_t n = 0;
  for (const auto &[id, s] : sessions_)
    n += s.subscribed && !s.closing;
  return n;
}

bool ControlService::closing(SessionId id) const {
  std::lock_guard lock(mutex_);
  auto it = sessions_.find(id);
  return it == sessions_.end() || it->second.closing;
}

std::vector<Payload> ControlService::take(SessionId id) {
  std::lock_guard lock(mutex_);
  auto it = sessions_.find(id);
  if (it == sessions_.end())
    return {};
  return std::exchange(it->second.outbox, {});
}

void ControlService::notify() {
  if (on_output)
    on_output();
}

void ControlService::send(Session &s, const Payload &p) {
  if (s.closing)
    return;
  if (s.outbox.size() >= options_.backlog) {
    auto msg = event_message("dropped");
    msg["reason"] = fmt::format("backlog exceeded {} messages", options_.backlog);
    s.outbox.push_back(encode(msg));
    s.closing = true;
    s.subscribed = false;
    return;
  }
  s.outbox.push_back(p);
}

void ControlService::reply(Session &s, const json &msg) { send(s, encode(msg)); }

void ControlService::receive(SessionId id, std::string_view text) {
  auto parsed = parse_client_message(text);
  // What-if evaluation runs a controller step; keep it outside the lock.
  std::optional<json> whatif_result;
  if (parsed.message && parsed.message->kind == ClientKind::whatif)
    whatif_result = whatif(*parsed.message);
  {
    std::lock_guard lock(mutex_);
    auto it = sessions_.find(id);
    if (it == sessions_.end() || it->second.closing)
      return;
    auto &s = it->second;
    if (!parsed.message) {
      reply(s, reject_message(parsed.request_id, parsed.reason));
      if (!s.authenticated)
        s.closing = true;
    } else if (!s.authenticated && parsed.message->kind != ClientKind::hello) {
      reply(s, reject_message(parsed.request_id, "handshake required"));
      s.closing = true;
    } else if (whatif_result) {
      if (whatif_result->contains("reason"))
        reply(s, reject_message(parsed.request_id, (*whatif_result)["reason"]));
      else {
        auto msg = ack_message(parsed.request_id);
        msg["whatif"] = std::move(*whatif_result);
        reply(s, msg);
      }
    } else {
      handle(s, id, *parsed.message);
    }
  }
  notify();
}

void ControlService::handle(Session &s, SessionId id, const ClientMessage &m) {
  switch (m.kind) {
  case ClientKind::hello: {
    if (s.authenticated) {
      reply(s, reject_message(m.request_id, "already authenticated"));
      return;
    }
    if (m.proto_version != kProtoVersion) {
      reply(s, reject_message(m.request_id, fmt::format("unsupported proto_version {}; expected {}",
                                                        m.proto_version, kProtoVersion)));
      s.closing = true;
      return;
    }
    if (!options_.token.empty() && m.token != options_.token) {
      reply(s, reject_message(m.request_id, "authentication failed"));
      s.closing = true;
      return;
    }
    s.authenticated = true;
    const auto &sc = sim_.scenario();
    auto msg = event_message("welcome");
    msg["proto_version"] = kProtoVersion;
    msg["session"] = id;
    msg["scenario"] = sc.name;
    msg["duration"] = sc.duration;
    msg["control_period"] = sc.timing.control_period;
    msg["decimation"] = options_.decimation;
    msg["channels"] = devices::telemetry_channels(sc.plant);
    msg["commands"] = command_names();
    reply(s, msg);
    return;
  }
  case ClientKind::subscribe:
    s.subscribed = true;
    s.decimation = m.decimation > 0 ? m.decimation : options_.decimation;
    reply(s, ack_message(m.request_id));
    return;
  case ClientKind::command: {
    auto r = sim_.inject(m.event, fmt::format("session-{}", id));
    if (r.accepted)
      reply(s, ack_message(m.request_id));
    else
      reply(s, reject_message(m.request_id, r.reason));
    return;
  }
  case ClientKind::whatif:
    return; // answered in receive()
  }
}

json ControlService::whatif(const ClientMessage &m) {
  if (auto p = engine::event_problem(sim_.scenario(), m.event))
    return {{"reason", *p}};
  devices::TelemetryFrame frame;
  controller::ControllerState state;
  {
    std::lock_guard lock(mutex_);
    if (!last_frame_)
      return {{"reason", "no telemetry yet"}};
    frame = *last_frame_;
    state = last_state_;
  }
  const auto &cfg = sim_.scenario().controller;
  frame.timestamp += cfg.control_period;
  auto rq = engine::operator_request(m.event, frame.timestamp, m.request_id);
  if (!rq)
    return {{"reason", fmt::format("{} acts on the plant; what-if covers controller requests only",
                                   m.command)}};
  state.pending_requests.push_back(*rq);
  auto step = controller::controller_step(frame, std::move(state), cfg);
  return {{"decision", engine::to_json(step.decision, cfg)},
          {"log", controller::format_decision(step.decision, cfg)}};
}

void ControlService::publish(const devices::TelemetryFrame &frame,
                             const controller::ControllerDecision &decision,
                             const controller::ControllerState &state) {
  const auto &cfg = sim_.scenario().controller;
  bool any = false;
  {
    std::lock_guard lock(mutex_);
    const std::size_t period = period_++;
    last_frame_ = frame;
    last_state_ = state;
    bool wanted = false, every = notable(decision);
    for (const auto &[id, s] : sessions_)
      wanted |= s.subscribed && !s.closing;
    if (!wanted)
      return;
    Payload telemetry, decided;
    for (auto &[id, s] : sessions_) {
      if (!s.subscribed || s.closing)
        continue;
      const bool due = period % static_cast<std::size_t>(s.decimation) == 0;
      if (due) {
        if (!telemetry)
          telemetry = encode({{"kind", "telemetry"}, {"period", period}, {"frame", engine::to_json(frame)}});
        send(s, telemetry);
      }
      if (due || every) {
        if (!decided)
          decided = encode({{"kind", "decision"},
                            {"period", period},
                            {"decision", engine::to_json(decision, cfg)},
                            {"log", controller::format_decision(decision, cfg)}});
        send(s, decided);
      }
      any = true;
    }
  }
  if (any)
    notify();
}

void ControlService::publish_event(const engine::EventLogEntry &entry) {
  {
    std::lock_guard lock(mutex_);
    Payload p;
    for (auto &[id, s] : sessions_) {
      if (!s.subscribed || s.closing)
        continue;
      if (!p) {
        auto msg = event_message("applied");
        msg["entry"] = engine::to_json(entry);
        p = encode(msg);
      }
      send(s, p);
    }
  }
  notify();
}

void ControlService::finish(const engine::SimulationRecord &record) {
  {
    std::lock_guard lock(mutex_);
    auto msg = event_message(record.diagnostic ? "diverged" : "finished");
    msg["frames"] = record.frames.size();
    msg["final_time"] = record.final_time;
    msg["digest"] = record.digest;
    if (record.diagnostic)
      msg["diagnostic"] = {{"kind", record.diagnostic->kind},
                           {"message", record.diagnostic->message},
                           {"t", record.diagnostic->t}};
    auto p = encode(msg);
    for (auto &[id, s] : sessions_) {
      if (s.authenticated && !s.closing) {
        s.outbox.push_back(p);
        s.closing = true;
      }
    }
  }
  notify();
}

} // namespace gridloop::service

/* Transport-independent control service.
 *
 * Sessions hand in whole message texts and take out length-prefixed frames.
 * The engine side only ever appends to bounded in-memory queues, so a slow
 * client can not stall a run; a session whose backlog overflows gets a
 * terminal "dropped" event and is closed.
 *
 * SPDX-License-Identifier: Apache-2.0
 */

#pragma once

#include <gridloop/engine/simulation.hpp>
#include <gridloop/service/protocol.hpp>

#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

namespace gridloop::service {

struct ServiceOptions {
  std::string token;          // empty: any token accepted
  int decimation = 20;        // control periods per streamed frame
  std::size_t backlog = 1024; // queued messages per session before it is dropped
};

using SessionId = std::uint64_t;
using Payload = std::shared_ptr<const std::string>; // one framed message

class ControlService {
public:
  ControlService(engine::Simulation &sim, ServiceOptions options);

  /// Installs the publish hooks on the simulation.
  void attach();

  SessionId open_session();
  /// Feeds one complete client message.
  void receive(SessionId id, std::string_view text);
  /// Queued outbound frames, oldest first.
  std::vector<Payload> take(SessionId id);
  /// True once the session should be closed after its queue is flushed.
  bool closing(SessionId id) const;
  void close_session(SessionId id);
  std::size_t session_count() const;
  std::size_t subscriber_count() const;

  /// Engine side.
  void publish(const devices::TelemetryFrame &frame, const controller::ControllerDecision &decision,
               const controller::ControllerState &state);
  void publish_event(const engine::EventLogEntry &entry);
  void finish(const engine::SimulationRecord &record);

  /// Called (from any thread) after output is queued for some session.
  std::function<void()> on_output;

private:
  struct Session {
    bool authenticated = false;
    bool subscribed = false;
    bool closing = false;
    int decimation = 0;
    std::vector<Payload> outbox;
  };

  void send(Session &s, const Payload &p);
  void reply(Session &s, const json &msg);
  void handle(Session &s, SessionId id, const ClientMessage &m);
  json whatif(const ClientMessage &m);
  void notify();

  engine::Simulation &sim_;
  ServiceOptions options_;
  mutable std::mutex mutex_;
  std::map<SessionId, Session> sessions_;
  SessionId next_id_ = 1;

  // Latest snapshot for what-if evaluation.
  std::optional<devices::TelemetryFrame> last_frame_;
  controller::ControllerState last_state_;
  std::size_t period_ = 0;
};

json reject_message(const std::string &request_id, const std::string &reason);

} // namespace gridloop::service

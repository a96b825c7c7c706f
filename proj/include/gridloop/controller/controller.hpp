/* Supervisory controller: limit supervision, fault isolation, load shedding,
 * excitation and speed regulation, synchronism check.
 *
 * controller_step evaluates, in this order:
 *   0. intake of operator/scenario requests and breaker-state reconciliation
 *   1. limit check
 *   2. fault confirmation and generator isolation
 *   3. load shedding
 *   4. excitation and speed regulation
 *   5. synchronization supervision
 *
 * SPDX-License-Identifier: Apache-2.0
 */

#pragma once

#include <gridloop/controller/config.hpp>
#include <gridloop/devices/telemetry.hpp>

#include <map>
#include <optional>
#include <string>
#include <vector>

namespace gridloop::controller {

using devices::SwitchState;
using devices::TelemetryFrame;

enum class GeneratorMode { offline, running, synchronizing, tripped };
enum class SystemMode { normal, alert, shedding, island };

const char *to_string(GeneratorMode m);
const char *to_string(SystemMode m);

// ---------------------------------------------------------------------------
// Limit supervision

enum class Bound { high, low };
enum class Band { in_permissible, beyond };

struct Violation {
  std::string quantity; // telemetry path, e.g. "load_bus.current_rms"
  Bound bound = Bound::high;
  Band band = Band::in_permissible;
  double value = 0.0;
  double limit = 0.0;
  std::optional<std::size_t> generator;

  std::string key() const; // "<quantity>.<high|low>"
};

std::vector<Violation> check_limits(const TelemetryFrame &frame, const ControllerConfig &cfg);

// ---------------------------------------------------------------------------
// Regulation

struct PiResult {
  double output = 0.0;
  double integrator = 0.0;
};

/// One PI update; the integrator is held while the output would saturate.
PiResult pi_step(const PiGains &gains, double integrator, double error, double dt);

/// Integrator value that makes a PI at zero error output `duty`.
double integrator_for(const PiGains &gains, double duty);

// ---------------------------------------------------------------------------
// Requests from the operator console or the scenario script

enum class RequestKind { trip, reset_trip, sync_request, setpoint_change, relay_command, breaker_command };

const char *to_string(RequestKind k);

struct Request {
  std::string request_id;
  double timestamp = 0.0;
  RequestKind kind = RequestKind::trip;
  std::string target; // generator, relay or breaker id
  std::optional<SwitchState> state;
  std::optional<double> voltage_setpoint;
  std::optional<double> speed_setpoint_rpm;
  bool auto_match = true;
};

// ---------------------------------------------------------------------------
// State and decision

struct GeneratorControl {
  GeneratorMode mode = GeneratorMode::offline;
  double excitation_integrator = 0.0;
  double speed_integrator = 0.0;
  double sharing_error = 0.0; // filtered (P - share * total) / rating
  double voltage_setpoint = 0.0;
  double speed_setpoint_rpm = 0.0;
  double excitation_duty = 0.0;
  double armature_duty = 0.0;
  bool auto_match = true;
  int sync_count = 0;
  bool close_pending = false;
  std::string sync_block;
  std::optional<double> breaker_open_sent; // last open command to a tripped machine's breaker
};

struct ShedEpisode {
  enum class Reason { none, overcurrent, deficit };
  Reason reason = Reason::none;
  std::vector<std::string> shed_relays;
  std::optional<std::string> pending_relay;
  double started_at = 0.0;

  bool active() const { return reason != Reason::none; }
};

struct ControllerState {
  std::vector<GeneratorControl> generators;
  SystemMode system_mode = SystemMode::normal;
  std::map<std::string, int> violation_counters;
  ShedEpisode shedding;
  std::vector<Request> pending_requests;
  std::optional<double> last_timestamp;
  std::uint64_t stale_frames = 0;
};

struct SwitchCommand {
  std::string id;
  SwitchState state = SwitchState::open;
  bool operator==(const SwitchCommand &) const = default;
};

struct ControllerDecision {
  double timestamp = 0.0;
  std::vector<GeneratorMode> modes;
  SystemMode system_mode = SystemMode::normal;
  std::vector<double> excitation_duty;
  std::vector<double> armature_duty;
  std::vector<SwitchCommand> relay_commands;
  std::vector<SwitchCommand> breaker_commands;
  std::optional<std::size_t> sync_close;
  std::vector<std::string> annotations;

  bool operator==(const ControllerDecision &) const = default;
};

/// Initial state for machines sitting on their operating point.
ControllerState initial_controller_state(const ControllerConfig &cfg,
                                         const std::vector<bool> &breaker_closed,
                                         const std::vector<double> &excitation_duty,
                                         const std::vector<double> &armature_duty);

// ---------------------------------------------------------------------------
// Synchronism check

struct SyncCheck {
  bool permissive = false; // all residuals inside tolerance at this instant
  bool dead_bus = false;
  double voltage_residual = 0.0;   // |dV| / V_nominal
  double frequency_residual = 0.0; // Hz, generator minus bus
  double phase_residual = 0.0;     // deg, wrapped
  std::string blocking;            // first failing criterion, empty when permissive
};

SyncCheck sync_check(const devices::GeneratorTelemetry &incoming,
                     const devices::LoadBusTelemetry &bus, const ControllerConfig &cfg);

// ---------------------------------------------------------------------------
// Protection

struct IsolationResult {
  std::optional<SwitchCommand> breaker_command;
  bool deficit = false;      // demand exceeds healthy capacity
  bool blackout = false;
  double demand = 0.0;       // W
  double healthy_capacity = 0.0; // W
  std::vector<std::string> annotations;
};

/// Opens the faulted machine's breaker, latches it tripped and raises the
/// healthy machines' dispatch. `evidence` is the reason shown in the log.
IsolationResult isolate_generator(std::size_t generator, const std::string &evidence,
                                  const TelemetryFrame &frame, ControllerState &state,
                                  const ControllerConfig &cfg);

struct ShedResult {
  std::vector<SwitchCommand> relay_commands;
  std::vector<std::string> annotations;
  bool escalate = false;
};

/// Advances the shedding episode by at most one relay.
ShedResult shed_load(const TelemetryFrame &frame, const ControllerConfig &cfg,
                     ControllerState &state);

// ---------------------------------------------------------------------------

struct ControllerStep {
  ControllerState state;
  ControllerDecision decision;
};

/// Pure: the result depends only on the arguments.
ControllerStep controller_step(const TelemetryFrame &frame, ControllerState state,
                               const ControllerConfig &cfg);

/// One line of the decision log.
std::string format_decision(const ControllerDecision &decision, const ControllerConfig &cfg);

} // namespace gridloop::controller

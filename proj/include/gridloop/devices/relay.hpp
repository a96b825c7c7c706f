/* Relays and breakers with a fixed actuation delay.
 *
 * SPDX-License-Identifier: Apache-2.0
 */

#pragma once

#include <string>

namespace gridloop::devices {

enum class SwitchState { open, closed };

const char *to_string(SwitchState s);

struct RelayDevice {
  std::string id;
  SwitchState state = SwitchState::closed;
  SwitchState commanded_state = SwitchState::closed;
  double actuation_delay = 0.010; // s
  double rated_current = 16.0;    // A
  double commanded_at = 0.0;      // s
  int steps_remaining = 0;        // plant steps until the contacts move

  bool closed() const { return state == SwitchState::closed; }
  bool pending() const { return commanded_state != state; }
};

/// Records a command. The contacts move after ceil(delay / dt) plant steps;
/// a later command inside the window replaces the earlier one.
RelayDevice command_relay(RelayDevice device, SwitchState target, double now, double dt);

/// Advances by one plant step. Returns true if the contacts moved.
bool advance_relay(RelayDevice &device);

/// Forces both contacts and command (manual switching, no delay).
void force_relay(RelayDevice &device, SwitchState target);

} // namespace gridloop::devices

/* SPDX-License-Identifier: Apache-2.0 */

#include <gridloop/devices/relay.hpp>

#include <cmath>

namespace gridloop::devices {

const char *to_string(SwitchState s) { return s == SwitchState::closed ? "closed" : "open"; }

RelayDevice command_relay(RelayDevice device, SwitchState target, double now, double dt) {
  if (target == device.commanded_state)
    return device;
  device.commanded_state = target;
  device.commanded_at = now;
  if (target == device.state) {
    device.steps_remaining = 0;
    return device;
  }
  const int steps = static_cast<int>(std::ceil(device.actuation_delay / dt - 1e-9));
  device.steps_remaining = steps;
  if (steps <= 0)
    device.state = target;
  return device;
}

bool advance_relay(RelayDevice &device) {
  if (!device.pending())
    return false;
  if (--device.steps_remaining > 0)
    return false;
  device.steps_remaining = 0;
  device.state = device.commanded_state;
  return true;
}

void force_relay(RelayDevice &device, SwitchState target) {
  device.state = device.commanded_state = target;
  device.steps_remaining = 0;
}

} // namespace gridloop::devices

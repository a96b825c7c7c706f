/* SPDX-License-Identifier: Apache-2.0 */

#include <gridloop/devices/sensor.hpp>

#include <algorithm>
#include <cmath>

namespace gridloop::devices {

double NoiseStream::uniform() {
  return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
}

double NoiseStream::gaussian() {
  if (has_spare_) {
    has_spare_ = false;
    return spare_;
  }
  double u1 = uniform();
  while (u1 <= 0.0)
    u1 = uniform();
  const double u2 = uniform();
  const double r = std::sqrt(-2.0 * std::log(u1));
  spare_ = r * std::sin(kTwoPi * u2);
  has_spare_ = true;
  return r * std::cos(kTwoPi * u2);
}

std::uint64_t derive_seed(std::uint64_t scenario_seed, std::string_view label) {
  // FNV-1a over the label, folded into the seed and finished with splitmix64.
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char c : label) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  std::uint64_t z = scenario_seed ^ h;
  z += 0x9e3779b97f4a7c15ull;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
  return z ^ (z >> 31);
}

std::uint32_t sample_sensor(SensorChannel &channel, double true_value, NoiseStream &rng) {
  double x = std::clamp(true_value, channel.range_min, channel.full_scale);
  if (channel.noise_sigma > 0.0)
    x += channel.noise_sigma * channel.span() * rng.gaussian();
  // Analog front end scales the range onto [0, reference_voltage].
  const double pin = (x - channel.range_min) / channel.span() * channel.reference_voltage;
  const double code = std::round(pin / channel.reference_voltage * channel.max_code());
  channel.last_raw =
      static_cast<std::uint32_t>(std::clamp(code, 0.0, static_cast<double>(channel.max_code())));
  return channel.last_raw;
}

double decode_sensor(const SensorChannel &channel, std::uint32_t code) {
  return channel.range_min + code * channel.lsb();
}

TorqueMeterReading read_torque_meter(const plant::PrimeMoverState &pm,
                                     const plant::TorqueMeterRange &range) {
  TorqueMeterReading r;
  const double speed_rpm = rad_per_s_to_rpm(pm.shaft_speed);
  r.speed_rpm = std::clamp(speed_rpm, -range.max_speed_rpm, range.max_speed_rpm);
  r.torque = std::clamp(pm.shaft_torque, -range.max_torque, range.max_torque);
  r.power = std::clamp(r.torque * rpm_to_rad_per_s(r.speed_rpm), -range.max_power,
                       range.max_power);
  return r;
}

} // namespace gridloop::devices

/* ADC-quantized sensor channels, torque meter and seeded noise streams.
 *
 * SPDX-License-Identifier: Apache-2.0
 */

#pragma once

#include <gridloop/plant/config.hpp>
#include <gridloop/plant/machines.hpp>

#include <cstdint>
#include <random>
#include <string_view>

namespace gridloop::devices {

/// Deterministic Gaussian/uniform stream. The normal deviates come from a
/// Box-Muller transform over mt19937_64 so that the sequence does not depend
/// on the standard library's distribution implementation.
class NoiseStream {
public:
  explicit NoiseStream(std::uint64_t seed = 0) : engine_(seed) {}

  double uniform();  // [0, 1)
  double gaussian(); // N(0, 1)

private:
  std::mt19937_64 engine_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

/// Seed for the stream called `label` under a scenario seed. Streams are
/// independent of one another, so adding a consumer leaves others untouched.
std::uint64_t derive_seed(std::uint64_t scenario_seed, std::string_view label);

enum class SensorKind { voltage, current, other };

struct SensorChannel {
  SensorKind kind = SensorKind::voltage;
  double range_min = 0.0;          // SI value mapped to code 0
  double full_scale = 1.0;         // SI value mapped to the top code
  double reference_voltage = 3.3;  // V at the ADC pin for full scale
  int resolution_bits = 10;
  double noise_sigma = 0.0;        // fraction of span
  std::uint32_t last_raw = 0;

  std::uint32_t max_code() const { return (1u << resolution_bits) - 1u; }
  double span() const { return full_scale - range_min; }
  double lsb() const { return span() / max_code(); }
};

/// Clamps to the channel range, adds noise, quantizes. Updates last_raw.
std::uint32_t sample_sensor(SensorChannel &channel, double true_value, NoiseStream &rng);
/// SI value represented by a code.
double decode_sensor(const SensorChannel &channel, std::uint32_t code);

struct TorqueMeterReading {
  double speed_rpm = 0.0;
  double torque = 0.0; // N m
  double power = 0.0;  // W
};

/// Tachometer / torque transducer with range clipping.
TorqueMeterReading read_torque_meter(const plant::PrimeMoverState &pm,
                                     const plant::TorqueMeterRange &range);

} // namespace gridloop::devices

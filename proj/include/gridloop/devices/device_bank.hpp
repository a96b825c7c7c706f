/* The emulated measurement and switching hardware around the plant.
 *
 * Each control period the meters push one frame apiece onto a serial byte
 * queue; the supervisor side reframes the queue and merges the register
 * values with the ADC channels into a TelemetryFrame.
 *
 * SPDX-License-Identifier: Apache-2.0
 */

#pragma once

#include <gridloop/devices/meter_frame.hpp>
#include <gridloop/devices/relay.hpp>
#include <gridloop/devices/sensor.hpp>
#include <gridloop/devices/telemetry.hpp>
#include <gridloop/plant/plant.hpp>

#include <cstdint>
#include <deque>
#include <map>
#include <string>
#include <vector>

namespace gridloop::devices {

struct DeviceConfig {
  int adc_bits = 10;
  double noise_sigma = 0.002;   // fraction of full scale
  double relay_delay = 0.010;   // s
  double relay_rated_current = 16.0;
  double serial_bit_error_rate = 0.0;
  double frequency_window = 0.020; // s, frequency meter averaging

  double load_voltage_full_scale = 400.0;
  double load_current_full_scale = 30.0;
  double field_voltage_full_scale = 250.0;
  double field_current_full_scale = 1.0;
  double armature_voltage_full_scale = 250.0;
  double armature_current_full_scale = 20.0; // bipolar

  std::vector<std::string> problems() const;
};

/// Meter device ids on the serial channel.
inline std::uint8_t generator_meter_id(std::size_t set) { return static_cast<std::uint8_t>(1 + set); }
inline std::uint8_t load_meter_id(std::size_t sets) { return static_cast<std::uint8_t>(1 + sets); }
inline std::uint8_t torque_meter_id(std::size_t set) { return static_cast<std::uint8_t>(0x11 + set); }

/// Every measured channel, sorted; these are the names set_bias accepts.
std::vector<std::string> telemetry_channels(const plant::PlantConfig &plant);

class DeviceBank {
public:
  DeviceBank(const plant::PlantConfig &plant_config, DeviceConfig config, std::uint64_t seed,
             const plant::Plant &plant, const plant::Topology &topology);

  /// Samples the plant at `now` (one control period after the last sample).
  TelemetryFrame sample(const plant::Plant &plant, double now);

  plant::Topology topology() const;
  bool has_switch(const std::string &id) const;
  const RelayDevice *find_switch(const std::string &id) const;
  /// Commands a relay or breaker. Returns false for an unknown id.
  bool command(const std::string &id, SwitchState target, double now, double dt);
  bool force(const std::string &id, SwitchState target);
  /// One plant step of every switch. True if any contacts moved.
  bool advance();

  /// Channel names accepted by set_bias, e.g. "G1.terminal_voltage_rms".
  const std::vector<std::string> &channel_names() const { return channel_names_; }
  bool set_bias(const std::string &channel, double bias);

  const std::vector<RelayDevice> &breakers() const { return breakers_; }
  const std::vector<RelayDevice> &relays() const { return relays_; }
  const MeterStreamDecoder::Stats &serial_stats() const { return decoder_.stats(); }
  std::uint8_t next_sequence(std::uint8_t device) const;

private:
  struct Adc {
    SensorChannel channel;
    NoiseStream noise;
  };
  Adc make_adc(const std::string &label, SensorKind kind, double lo, double hi) const;
  double read_adc(const std::string &label, double true_value);
  double biased(const std::string &channel, double value) const;
  void emit(std::uint8_t device, std::span<const MeterReading> readings);
  void drain();
  double meter_value(std::uint8_t device, MeterRegister reg) const;

  plant::PlantConfig plant_config_;
  DeviceConfig config_;
  std::vector<RelayDevice> breakers_;
  std::vector<RelayDevice> relays_;
  std::map<std::string, Adc> adcs_;
  std::map<std::string, double> bias_;
  std::vector<std::string> channel_names_;

  std::vector<std::uint8_t> serial_;
  NoiseStream serial_noise_;
  MeterStreamDecoder decoder_;
  std::map<std::uint8_t, std::uint8_t> sequence_;
  std::map<std::pair<std::uint8_t, std::uint8_t>, double> registers_;

  struct PhaseSample {
    double t;
    double load;
    std::vector<double> terminal;
  };
  void remember_phases(const plant::Plant &plant, double now);
  std::deque<PhaseSample> phase_history_;
};

} // namespace gridloop::devices

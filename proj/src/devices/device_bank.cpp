/* SPDX-License-Identifier: Apache-2.0 */

#include <gridloop/devices/device_bank.hpp>

#include <algorithm>
#include <cmath>

#include <fmt/format.h>

namespace gridloop::devices {

std::optional<SwitchState> TelemetryFrame::switch_state(const std::string &id) const {
  for (const auto *list : {&breakers, &relays})
    for (const auto &s : *list)
      if (s.id == id)
        return s.state;
  return std::nullopt;
}

std::vector<std::string> DeviceConfig::problems() const {
  std::vector<std::string> out;
  if (adc_bits < 2 || adc_bits > 24)
    out.push_back(fmt::format("devices.adc_bits {} outside [2, 24]", adc_bits));
  if (!(noise_sigma >= 0.0))
    out.push_back("devices.noise_sigma must be non-negative");
  if (!(relay_delay >= 0.0))
    out.push_back("devices.relay_delay must be non-negative");
  if (!(relay_rated_current > 0.0))
    out.push_back("devices.relay_rated_current must be positive");
  if (!(serial_bit_error_rate >= 0.0 && serial_bit_error_rate < 1.0))
    out.push_back("devices.serial_bit_error_rate must be in [0, 1)");
  if (!(frequency_window >= 0.0))
    out.push_back("devices.frequency_window must be non-negative");
  for (double fs : {load_voltage_full_scale, load_current_full_scale, field_voltage_full_scale,
                    field_current_full_scale, armature_voltage_full_scale,
                    armature_current_full_scale})
    if (!(fs > 0.0)) {
      out.push_back("devices full-scale ranges must be positive");
      break;
    }
  return out;
}

namespace {

RelayDevice make_switch(const std::string &id, bool closed, const DeviceConfig &cfg) {
  RelayDevice r;
  r.id = id;
  r.state = r.commanded_state = closed ? SwitchState::closed : SwitchState::open;
  r.actuation_delay = cfg.relay_delay;
  r.rated_current = cfg.relay_rated_current;
  return r;
}

} // namespace

std::vector<std::string> telemetry_channels(const plant::PlantConfig &plant) {
  std::vector<std::string> out{"load_bus.current_rms", "load_bus.frequency",
                               "load_bus.voltage_rms"};
  for (const auto &set : plant.sets) {
    for (const char *field : {"terminal_voltage_rms", "stator_current_rms", "real_power",
                              "reactive_power", "speed_rpm", "torque", "frequency",
                              "bus_voltage_rms", "phase_difference", "field_voltage",
                              "field_current", "armature_voltage", "armature_current"})
      out.push_back(set.id + "." + field);
  }
  std::sort(out.begin(), out.end());
  return out;
}

DeviceBank::DeviceBank(const plant::PlantConfig &plant_config, DeviceConfig config,
                       std::uint64_t seed, const plant::Plant &plant,
                       const plant::Topology &topology)
    : plant_config_(plant_config), config_(std::move(config)),
      serial_noise_(derive_seed(seed, "serial.channel")) {
  for (std::size_t i = 0; i < plant_config_.sets.size(); ++i)
    breakers_.push_back(
        make_switch(plant_config_.sets[i].breaker_id, topology.breaker_closed[i], config_));
  for (std::size_t j = 0; j < plant_config_.loads.elements.size(); ++j)
    relays_.push_back(
        make_switch(plant_config_.loads.elements[j].relay_id, topology.relay_closed[j], config_));

  auto adc = [&](const std::string &label, SensorKind kind, double lo, double hi) {
    auto a = make_adc(label, kind, lo, hi);
    a.noise = NoiseStream(derive_seed(seed, "adc." + label));
    adcs_.emplace(label, std::move(a));
  };
  adc("load_bus.voltage_rms", SensorKind::voltage, 0.0, config_.load_voltage_full_scale);
  adc("load_bus.current_rms", SensorKind::current, 0.0, config_.load_current_full_scale);
  for (const auto &set : plant_config_.sets) {
    adc(set.id + ".field_voltage", SensorKind::voltage, 0.0, config_.field_voltage_full_scale);
    adc(set.id + ".field_current", SensorKind::current, 0.0, config_.field_current_full_scale);
    adc(set.id + ".armature_voltage", SensorKind::voltage, 0.0,
        config_.armature_voltage_full_scale);
    adc(set.id + ".armature_current", SensorKind::current, -config_.armature_current_full_scale,
        config_.armature_current_full_scale);
  }

  channel_names_ = telemetry_channels(plant_config_);

  remember_phases(plant, plant.time());
}

DeviceBank::Adc DeviceBank::make_adc(const std::string &, SensorKind kind, double lo,
                                     double hi) const {
  Adc a;
  a.channel.kind = kind;
  a.channel.range_min = lo;
  a.channel.full_scale = hi;
  a.channel.reference_voltage = plant_config_.sensor_reference_voltage;
  a.channel.resolution_bits = config_.adc_bits;
  a.channel.noise_sigma = config_.noise_sigma;
  return a;
}

double DeviceBank::biased(const std::string &channel, double value) const {
  auto it = bias_.find(channel);
  return it == bias_.end() ? value : value + it->second;
}

double DeviceBank::read_adc(const std::string &label, double true_value) {
  auto &a = adcs_.at(label);
  const auto code = sample_sensor(a.channel, biased(label, true_value), a.noise);
  return decode_sensor(a.channel, code);
}

bool DeviceBank::set_bias(const std::string &channel, double bias) {
  if (!std::binary_search(channel_names_.begin(), channel_names_.end(), channel))
    return false;
  bias_[channel] = bias;
  return true;
}

std::uint8_t DeviceBank::next_sequence(std::uint8_t device) const {
  auto it = sequence_.find(device);
  return it == sequence_.end() ? 0 : it->second;
}

void DeviceBank::emit(std::uint8_t device, std::span<const MeterReading> readings) {
  std::vector<MeterReading> saturated(readings.begin(), readings.end());
  for (auto &r : saturated)
    r.value = saturate_reading(r.reg, r.value);
  auto bytes = encode_meter_frame(saturated, device, sequence_[device]++);
  if (config_.serial_bit_error_rate > 0.0)
    for (auto &b : bytes)
      for (int bit = 0; bit < 8; ++bit)
        if (serial_noise_.uniform() < config_.serial_bit_error_rate)
          b ^= static_cast<std::uint8_t>(1u << bit);
  serial_.insert(serial_.end(), bytes.begin(), bytes.end());
}

void DeviceBank::drain() {
  decoder_.push(serial_);
  serial_.clear();
  while (auto f = decoder_.next())
    for (const auto &e : f->payload)
      registers_[{f->device_id, e.register_id}] = register_to_si(e.register_id, e.value);
}

double DeviceBank::meter_value(std::uint8_t device, MeterRegister reg) const {
  auto it = registers_.find({device, static_cast<std::uint8_t>(reg)});
  return it == registers_.end() ? 0.0 : it->second;
}

TelemetryFrame DeviceBank::sample(const plant::Plant &plant, double now) {
  const auto &net = plant.network();
  const auto &sets = plant.sets();
  const std::size_t n = sets.size();
  const double f_nom = plant_config_.nominal_frequency();
  const double live = 0.05 * plant_config_.nominal_voltage;
  // Frequency meters average the phase advance over the trailing window.
  while (phase_history_.size() > 1 &&
         now - phase_history_.front().t > config_.frequency_window * (1.0 + 1e-9))
    phase_history_.pop_front();
  const PhaseSample *ref = phase_history_.empty() ? nullptr : &phase_history_.front();
  const double window = ref ? now - ref->t : 0.0;

  auto measured_frequency = [&](double phase, double ref_phase, double magnitude) {
    if (magnitude < live)
      return 0.0;
    if (window <= 0.0)
      return f_nom;
    return f_nom + (phase - ref_phase) / (kTwoPi * window);
  };

  // Device side: meters push their frames.
  for (std::size_t i = 0; i < n; ++i) {
    const auto &id = plant_config_.sets[i].id;
    const auto &g = sets[i].generator;
    const Complex s = g.terminal_voltage * std::conj(g.stator_current);
    const Complex vbus = net.bus_voltages[i];
    double phase = 0.0;
    if (std::abs(g.terminal_voltage) > live && std::abs(vbus) > live)
      phase = wrap_degrees(rad_to_deg(std::arg(g.terminal_voltage) - std::arg(vbus)));
    const double f = measured_frequency(plant.terminal_phase(i), ref ? ref->terminal[i] : 0.0,
                                        std::abs(g.terminal_voltage));
    const MeterReading readings[] = {
        {MeterRegister::voltage_rms, biased(id + ".terminal_voltage_rms", std::abs(g.terminal_voltage))},
        {MeterRegister::current_rms, biased(id + ".stator_current_rms", std::abs(g.stator_current))},
        {MeterRegister::real_power, biased(id + ".real_power", s.real())},
        {MeterRegister::reactive_power, biased(id + ".reactive_power", s.imag())},
        {MeterRegister::frequency, biased(id + ".frequency", f)},
        {MeterRegister::phase_difference, biased(id + ".phase_difference", phase)},
        {MeterRegister::bus_voltage_rms, biased(id + ".bus_voltage_rms", std::abs(vbus))},
    };
    emit(generator_meter_id(i), readings);

    const auto tm = read_torque_meter(sets[i].prime_mover, plant_config_.torque_meter);
    const MeterReading shaft[] = {
        {MeterRegister::speed, biased(id + ".speed_rpm", tm.speed_rpm)},
        {MeterRegister::torque, biased(id + ".torque", tm.torque)},
        {MeterRegister::real_power, tm.power},
    };
    emit(torque_meter_id(i), shaft);
  }
  {
    const Complex v = net.load_bus_voltage();
    const Complex i = net.load_bus_current();
    const Complex s = v * std::conj(i);
    const MeterReading readings[] = {
        {MeterRegister::voltage_rms, std::abs(v)},
        {MeterRegister::current_rms, std::abs(i)},
        {MeterRegister::real_power, s.real()},
        {MeterRegister::reactive_power, s.imag()},
        {MeterRegister::frequency,
         biased("load_bus.frequency",
                measured_frequency(plant.load_bus_phase(), ref ? ref->load : 0.0, std::abs(v)))},
    };
    emit(load_meter_id(n), readings);
  }

  // Supervisor side.
  drain();
  TelemetryFrame frame;
  frame.timestamp = now;
  for (std::size_t i = 0; i < n; ++i) {
    const auto &set = plant_config_.sets[i];
    const std::uint8_t gm = generator_meter_id(i), tm = torque_meter_id(i);
    GeneratorTelemetry g;
    g.id = set.id;
    g.terminal_voltage_rms = meter_value(gm, MeterRegister::voltage_rms);
    g.stator_current_rms = meter_value(gm, MeterRegister::current_rms);
    g.real_power = meter_value(gm, MeterRegister::real_power);
    g.reactive_power = meter_value(gm, MeterRegister::reactive_power);
    g.frequency = meter_value(gm, MeterRegister::frequency);
    g.phase_difference = meter_value(gm, MeterRegister::phase_difference);
    g.bus_voltage_rms = meter_value(gm, MeterRegister::bus_voltage_rms);
    g.speed_rpm = meter_value(tm, MeterRegister::speed);
    g.torque = meter_value(tm, MeterRegister::torque);
    frame.generators.push_back(std::move(g));

    const auto &gs = sets[i].generator;
    const auto &pm = sets[i].prime_mover;
    DcTelemetry dc;
    dc.field_voltage = read_adc(set.id + ".field_voltage", gs.field_voltage);
    dc.field_current = read_adc(set.id + ".field_current",
                                gs.field_voltage / set.generator.field_resistance);
    dc.armature_voltage = read_adc(set.id + ".armature_voltage", pm.armature_voltage);
    dc.armature_current = read_adc(set.id + ".armature_current", pm.armature_current);
    frame.dc.push_back(dc);
  }
  frame.load_bus.voltage_rms =
      read_adc("load_bus.voltage_rms", std::abs(net.load_bus_voltage()));
  frame.load_bus.current_rms =
      read_adc("load_bus.current_rms", std::abs(net.load_bus_current()));
  frame.load_bus.frequency = meter_value(load_meter_id(n), MeterRegister::frequency);
  for (const auto &b : breakers_)
    frame.breakers.push_back({b.id, b.state});
  for (const auto &r : relays_)
    frame.relays.push_back({r.id, r.state});

  remember_phases(plant, now);
  return frame;
}

void DeviceBank::remember_phases(const plant::Plant &plant, double now) {
  PhaseSample p{now, plant.load_bus_phase(), {}};
  for (std::size_t i = 0; i < plant_config_.sets.size(); ++i)
    p.terminal.push_back(plant.terminal_phase(i));
  phase_history_.push_back(std::move(p));
}

plant::Topology DeviceBank::topology() const {
  plant::Topology t;
  for (const auto &b : breakers_)
    t.breaker_closed.push_back(b.closed());
  for (const auto &r : relays_)
    t.relay_closed.push_back(r.closed());
  return t;
}

bool DeviceBank::has_switch(const std::string &id) const { return find_switch(id) != nullptr; }

const RelayDevice *DeviceBank::find_switch(const std::string &id) const {
  for (const auto *list : {&breakers_, &relays_})
    for (const auto &r : *list)
      if (r.id == id)
        return &r;
  return nullptr;
}

bool DeviceBank::command(const std::string &id, SwitchState target, double now, double dt) {
  for (auto *list : {&breakers_, &relays_})
    for (auto &r : *list)
      if (r.id == id) {
        r = command_relay(r, target, now, dt);
        return true;
      }
  return false;
}

bool DeviceBank::force(const std::string &id, SwitchState target) {
  for (auto *list : {&breakers_, &relays_})
    for (auto &r : *list)
      if (r.id == id) {
        force_relay(r, target);
        return true;
      }
  return false;
}

bool DeviceBank::advance() {
  bool moved = false;
  for (auto *list : {&breakers_, &relays_})
    for (auto &r : *list)
      moved = advance_relay(r) || moved;
  return moved;
}

} // namespace gridloop::devices

/* SPDX-License-Identifier: Apache-2.0 */

#include <gridloop/devices/meter_frame.hpp>

#include <gridloop/common.hpp>

#include <algorithm>
#include <cmath>

#include <boost/crc.hpp>
#include <fmt/format.h>

namespace gridloop::devices {

std::optional<RegisterInfo> register_info(std::uint8_t id) {
  switch (static_cast<MeterRegister>(id)) {
  case MeterRegister::voltage_rms:
    return RegisterInfo{"V_rms", 0.1, false};
  case MeterRegister::current_rms:
    return RegisterInfo{"I_rms", 0.01, false};
  case MeterRegister::real_power:
    return RegisterInfo{"P", 1.0, false};
  case MeterRegister::reactive_power:
    return RegisterInfo{"Q", 1.0, false};
  case MeterRegister::frequency:
    return RegisterInfo{"f", 0.01, false};
  case MeterRegister::speed:
    return RegisterInfo{"speed", 1.0, false};
  case MeterRegister::torque:
    return RegisterInfo{"torque", 0.01, true};
  case MeterRegister::phase_difference:
    return RegisterInfo{"phase", 0.01, true};
  case MeterRegister::bus_voltage_rms:
    return RegisterInfo{"V_bus", 0.1, false};
  }
  return std::nullopt;
}

std::uint16_t crc16_ccitt_false(std::span<const std::uint8_t> bytes) {
  boost::crc_ccitt_type crc; // 0x1021, init 0xFFFF, unreflected, no final xor
  crc.process_bytes(bytes.data(), bytes.size());
  return static_cast<std::uint16_t>(crc.checksum());
}

namespace {

RegisterInfo known(MeterRegister reg) {
  auto info = register_info(static_cast<std::uint8_t>(reg));
  if (!info)
    throw DomainError(fmt::format("unknown meter register 0x{:02x}", static_cast<int>(reg)));
  return *info;
}

double raw_of(const RegisterInfo &info, double value) {
  return std::round(value / info.scale) + (info.offset_binary ? 0x8000 : 0);
}

} // namespace

double saturate_reading(MeterRegister reg, double value) {
  const auto info = known(reg);
  const double lo = info.offset_binary ? -0x8000 * info.scale : 0.0;
  const double hi = (info.offset_binary ? 0x7fff : 0xffff) * info.scale;
  return std::clamp(value, lo, hi);
}

double register_to_si(std::uint8_t register_id, std::uint16_t raw) {
  const auto info = register_info(register_id);
  if (!info)
    return static_cast<double>(raw);
  return (static_cast<double>(raw) - (info->offset_binary ? 0x8000 : 0)) * info->scale;
}

MeterFrame make_meter_frame(std::uint8_t device_id, std::uint8_t sequence,
                            std::span<const MeterReading> readings) {
  if (readings.size() > 255)
    throw DomainError("a meter frame carries at most 255 registers");
  MeterFrame frame;
  frame.device_id = device_id;
  frame.sequence = sequence;
  for (const auto &r : readings) {
    const auto info = known(r.reg);
    const double raw = raw_of(info, r.value);
    if (!std::isfinite(raw) || raw < 0.0 || raw > 0xffff)
      throw EncodingRangeError(std::string(info.name), r.value);
    frame.payload.push_back({static_cast<std::uint8_t>(r.reg), static_cast<std::uint16_t>(raw)});
  }
  return frame;
}

std::vector<std::uint8_t> encode_meter_frame(const MeterFrame &frame) {
  if (frame.payload.size() > 255)
    throw DomainError("a meter frame carries at most 255 registers");
  std::vector<std::uint8_t> out;
  out.reserve(kMeterHeaderSize + kMeterEntrySize * frame.payload.size() + kMeterCrcSize);
  out.push_back(kMeterSync);
  out.push_back(frame.device_id);
  out.push_back(frame.sequence);
  out.push_back(static_cast<std::uint8_t>(frame.payload.size()));
  for (const auto &e : frame.payload) {
    out.push_back(e.register_id);
    out.push_back(static_cast<std::uint8_t>(e.value >> 8));
    out.push_back(static_cast<std::uint8_t>(e.value & 0xff));
    out.push_back(0x00);
  }
  const std::uint16_t crc = crc16_ccitt_false(out);
  out.push_back(static_cast<std::uint8_t>(crc & 0xff));
  out.push_back(static_cast<std::uint8_t>(crc >> 8));
  return out;
}

std::vector<std::uint8_t> encode_meter_frame(std::span<const MeterReading> readings,
                                             std::uint8_t device_id, std::uint8_t sequence) {
  return encode_meter_frame(make_meter_frame(device_id, sequence, readings));
}

namespace {

std::size_t frame_size(std::uint8_t count) {
  return kMeterHeaderSize + kMeterEntrySize * count + kMeterCrcSize;
}

// Parses a frame known to be complete; checks the CRC only.
std::optional<MeterFrame> parse(std::span<const std::uint8_t> b) {
  const std::size_t body = b.size() - kMeterCrcSize;
  const std::uint16_t crc = static_cast<std::uint16_t>(b[body] | (b[body + 1] << 8));
  if (crc16_ccitt_false(b.first(body)) != crc)
    return std::nullopt;
  MeterFrame f;
  f.device_id = b[1];
  f.sequence = b[2];
  f.crc = crc;
  for (std::size_t k = 0; k < b[3]; ++k) {
    const std::size_t o = kMeterHeaderSize + kMeterEntrySize * k;
    f.payload.push_back({b[o], static_cast<std::uint16_t>((b[o + 1] << 8) | b[o + 2])});
  }
  return f;
}

} // namespace

DecodeResult decode_meter_frame(std::span<const std::uint8_t> bytes) {
  if (bytes.empty())
    return {DecodeStatus::truncated, std::nullopt};
  if (bytes[0] != kMeterSync)
    return {DecodeStatus::bad_sync, std::nullopt};
  if (bytes.size() < kMeterHeaderSize)
    return {DecodeStatus::truncated, std::nullopt};
  const std::size_t n = frame_size(bytes[3]);
  if (bytes.size() < n)
    return {DecodeStatus::truncated, std::nullopt};
  if (bytes.size() > n)
    return {DecodeStatus::trailing_bytes, std::nullopt};
  auto f = parse(bytes);
  if (!f)
    return {DecodeStatus::bad_crc, std::nullopt};
  return {DecodeStatus::ok, std::move(f)};
}

void MeterStreamDecoder::push(std::span<const std::uint8_t> bytes) {
  buffer_.insert(buffer_.end(), bytes.begin(), bytes.end());
}

std::optional<MeterFrame> MeterStreamDecoder::next() {
  std::vector<std::uint8_t> candidate;
  for (;;) {
    while (!buffer_.empty() && buffer_.front() != kMeterSync) {
      buffer_.pop_front();
      ++stats_.resync_bytes;
    }
    if (buffer_.size() < kMeterHeaderSize)
      return std::nullopt;
    const std::size_t n = frame_size(buffer_[3]);
    if (buffer_.size() < n)
      return std::nullopt;
    candidate.assign(buffer_.begin(), buffer_.begin() + static_cast<std::ptrdiff_t>(n));
    auto f = parse(candidate);
    if (!f) {
      // Frame boundary unknown: drop the sync byte and rescan.
      ++stats_.crc_rejects;
      buffer_.pop_front();
      continue;
    }
    buffer_.erase(buffer_.begin(), buffer_.begin() + static_cast<std::ptrdiff_t>(n));
    ++stats_.frames;
    auto last = last_sequence_.find(f->device_id);
    if (last != last_sequence_.end()) {
      const std::uint8_t expected = static_cast<std::uint8_t>(last->second + 1);
      stats_.sequence_gaps += static_cast<std::uint8_t>(f->sequence - expected);
    }
    last_sequence_[f->device_id] = f->sequence;
    return f;
  }
}

} // namespace gridloop::devices

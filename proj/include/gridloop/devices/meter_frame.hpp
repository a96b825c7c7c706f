/* Serial power-meter frame codec.
 *
 * Layout (byte-exact):
 *   [0]      sync 0xA5
 *   [1]      device id
 *   [2]      sequence (mod 256)
 *   [3]      register count N
 *   [4..]    N x { register id, value hi, value lo, 0x00 }
 *   [4+4N..] CRC-16/CCITT-FALSE over bytes 0 .. 3+4N, little-endian
 *
 * SPDX-License-Identifier: Apache-2.0
 */

#pragma once

#include <cstdint>
#include <deque>
#include <map>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

namespace gridloop::devices {

inline constexpr std::uint8_t kMeterSync = 0xA5;
inline constexpr std::size_t kMeterHeaderSize = 4;
inline constexpr std::size_t kMeterEntrySize = 4;
inline constexpr std::size_t kMeterCrcSize = 2;

enum class MeterRegister : std::uint8_t {
  voltage_rms = 0x01,   // 0.1 V
  current_rms = 0x02,   // 0.01 A
  real_power = 0x03,    // 1 W
  reactive_power = 0x04, // 1 var
  frequency = 0x05,     // 0.01 Hz
  speed = 0x06,         // 1 RPM
  torque = 0x07,        // 0.01 N m, offset binary around 0x8000
  phase_difference = 0x08, // 0.01 deg, offset binary around 0x8000
  bus_voltage_rms = 0x09,  // 0.1 V, line side of the breaker
};

struct RegisterInfo {
  std::string_view name;
  double scale;        // SI units per LSB
  bool offset_binary;  // value = (raw - 0x8000) * scale
};

/// Scaling for a known register; nullopt for an unknown id.
std::optional<RegisterInfo> register_info(std::uint8_t id);

struct MeterEntry {
  std::uint8_t register_id = 0;
  std::uint16_t value = 0;
  bool operator==(const MeterEntry &) const = default;
};

struct MeterFrame {
  std::uint8_t device_id = 0;
  std::uint8_t sequence = 0;
  std::vector<MeterEntry> payload;
  std::uint16_t crc = 0;
  bool operator==(const MeterFrame &) const = default;
};

struct MeterReading {
  MeterRegister reg;
  double value; // SI
};

/// CRC-16/CCITT-FALSE (poly 0x1021, init 0xFFFF).
std::uint16_t crc16_ccitt_false(std::span<const std::uint8_t> bytes);

/// Scales SI readings into raw register values. Throws EncodingRangeError
/// naming the register when a value does not fit.
MeterFrame make_meter_frame(std::uint8_t device_id, std::uint8_t sequence,
                            std::span<const MeterReading> readings);
/// Clamps an SI value into the representable range of a register.
double saturate_reading(MeterRegister reg, double value);
double register_to_si(std::uint8_t register_id, std::uint16_t raw);

std::vector<std::uint8_t> encode_meter_frame(const MeterFrame &frame);
std::vector<std::uint8_t> encode_meter_frame(std::span<const MeterReading> readings,
                                             std::uint8_t device_id, std::uint8_t sequence);

enum class DecodeStatus { ok, bad_sync, truncated, bad_crc, trailing_bytes };

struct DecodeResult {
  DecodeStatus status = DecodeStatus::truncated;
  std::optional<MeterFrame> frame;
};

/// Decodes exactly one frame occupying the whole buffer.
DecodeResult decode_meter_frame(std::span<const std::uint8_t> bytes);

/// Stream-side framer: resynchronizes on the sync byte, rejects bad CRCs and
/// tracks sequence gaps per device.
class MeterStreamDecoder {
public:
  struct Stats {
    std::uint64_t frames = 0;
    std::uint64_t crc_rejects = 0;
    std::uint64_t resync_bytes = 0;
    std::uint64_t sequence_gaps = 0;
  };

  void push(std::span<const std::uint8_t> bytes);
  /// Next complete, verified frame, if any.
  std::optional<MeterFrame> next();

  const Stats &stats() const { return stats_; }
  std::size_t buffered() const { return buffer_.size(); }

private:
  std::deque<std::uint8_t> buffer_;
  std::map<std::uint8_t, std::uint8_t> last_sequence_;
  Stats stats_;
};

} // namespace gridloop::devices

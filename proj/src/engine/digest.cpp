/* SPDX-License-Identifier: Apache-2.0 */

#include <gridloop/engine/simulation.hpp>

#include <fmt/format.h>
#include <openssl/evp.h>

#include <bit>
#include <memory>

namespace gridloop::engine {

namespace {

class Sha256 {
public:
  Sha256() : ctx_(EVP_MD_CTX_new(), EVP_MD_CTX_free) {
    if (!ctx_ || EVP_DigestInit_ex(ctx_.get(), EVP_sha256(), nullptr) != 1)
      throw Error("SHA-256 initialisation failed");
  }

  void bytes(const void *p, std::size_t n) { EVP_DigestUpdate(ctx_.get(), p, n); }

  void u64(std::uint64_t v) {
    unsigned char b[8];
    for (int i = 0; i < 8; ++i)
      b[i] = static_cast<unsigned char>(v >> (8 * i));
    bytes(b, 8);
  }

  void real(double v) { u64(std::bit_cast<std::uint64_t>(v)); }

  void text(const std::string &s) {
    u64(s.size());
    bytes(s.data(), s.size());
  }

  std::string hex() {
    unsigned char md[EVP_MAX_MD_SIZE];
    unsigned int n = 0;
    EVP_DigestFinal_ex(ctx_.get(), md, &n);
    std::string out;
    for (unsigned int i = 0; i < n; ++i)
      out += fmt::format("{:02x}", md[i]);
    return out;
  }

private:
  std::unique_ptr<EVP_MD_CTX, decltype(&EVP_MD_CTX_free)> ctx_;
};

} // namespace

std::string record_digest(const SimulationRecord &r) {
  Sha256 h;
  h.text("gridloop-record-v1");
  h.u64(r.frames.size());
  for (const auto &f : r.frames) {
    h.real(f.timestamp);
    for (const auto &g : f.generators) {
      h.text(g.id);
      for (double v : {g.terminal_voltage_rms, g.stator_current_rms, g.real_power,
                       g.reactive_power, g.speed_rpm, g.torque, g.frequency, g.bus_voltage_rms,
                       g.phase_difference})
        h.real(v);
    }
    h.real(f.load_bus.voltage_rms);
    h.real(f.load_bus.current_rms);
    h.real(f.load_bus.frequency);
    for (const auto &d : f.dc)
      for (double v : {d.field_voltage, d.field_current, d.armature_voltage, d.armature_current})
        h.real(v);
    for (const auto *group : {&f.breakers, &f.relays})
      for (const auto &s : *group) {
        h.text(s.id);
        h.u64(s.state == devices::SwitchState::closed);
      }
  }
  h.u64(r.decision_log.size());
  for (const auto &line : r.decision_log)
    h.text(line);
  h.u64(r.events.size());
  for (const auto &e : r.events) {
    h.real(e.t);
    h.text(e.kind);
    h.text(e.detail);
    h.text(e.source);
  }
  h.text(r.diagnostic ? r.diagnostic->kind + ": " + r.diagnostic->message : "");
  h.real(r.final_time);
  for (const auto &s : r.final_sets)
    for (double v : {s.prime_mover.armature_current, s.prime_mover.shaft_speed,
                     s.generator.rotor_speed, s.generator.rotor_angle, s.generator.internal_emf})
      h.real(v);
  for (bool b : r.final_topology.breaker_closed)
    h.u64(b);
  for (bool b : r.final_topology.relay_closed)
    h.u64(b);
  return h.hex();
}

} // namespace gridloop::engine

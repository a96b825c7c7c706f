/* Acceptance suite: one PASS/FAIL line per criterion, exit status 1 if any
 * criterion fails.
 *
 * SPDX-License-Identifier: Apache-2.0
 */

#include <gridloop/devices/meter_frame.hpp>
#include <gridloop/engine/simulation.hpp>

#include "oracles/phasor.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <random>

using namespace gridloop;

namespace {

// Pinned tolerances.
constexpr double kEnergyTolerance = 0.01;      // relative
constexpr double kKclFraction = 1e-6;          // of rated current
constexpr double kRuntimeLimit = 30.0;         // s wall for 10 s simulated
constexpr double kOrderRatio = 3.5;
constexpr double kOracleTolerance = 0.02;      // relative
constexpr int kOracleConfigs = 8;
constexpr double kRecoveryLimit = 5.0;         // s after the trip
constexpr double kShedWindow = 0.200;          // s after confirmation
constexpr long kSyncSteps = 10000;
constexpr int kSyncRuns = 60;
constexpr int kCodecFrames = 10000;
constexpr double kCorruptionRejection = 0.999;

const char *const kReference[] = {"nominal", "gen1-trip", "overcurrent-shed", "sync-auto", "sync-sweep"};

int failures = 0;

void report(bool ok, const std::string &name, const std::string &detail) {
  fmt::print("{} {}: {}\n", ok ? "PASS" : "FAIL", name, detail);
  std::fflush(stdout);
  failures += !ok;
}

engine::Scenario load(const std::string &name) {
  return engine::load_scenario(std::string(GRIDLOOP_SCENARIO_DIR) + "/" + name + ".json");
}

// ---------------------------------------------------------------------------

void physics_sanity() {
  auto s = load("nominal");
  auto start = std::chrono::steady_clock::now();
  auto r = engine::run_scenario(s);
  const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  const double imbalance = std::abs(r.energy.relative_imbalance());
  const double kcl_limit = kKclFraction * s.plant.rated_current();
  const bool ok = !r.diagnostic && s.duration >= 10.0 && imbalance < kEnergyTolerance &&
                  r.max_kcl_residual < kcl_limit && wall < kRuntimeLimit;
  report(ok, "physics-sanity",
         fmt::format("{} s nominal run: energy imbalance {:.2e} (< {}), max KCL residual {:.2e} A "
                     "(< {:.2e} A), wall {:.2f} s (< {} s)",
                     s.duration, imbalance, kEnergyTolerance, r.max_kcl_residual, kcl_limit, wall,
                     kRuntimeLimit));
}

// ---------------------------------------------------------------------------

plant::Equilibrium equilibrium(const plant::PlantConfig &cfg, const plant::Topology &topo,
                               double v0, double v1) {
  plant::EquilibriumRequest rq;
  rq.topology = topo;
  rq.terminal_voltage = {v0, v1};
  rq.speed_rpm = {cfg.sets[0].generator.rated_speed_rpm, cfg.sets[1].generator.rated_speed_rpm};
  rq.phase_offset_deg = {0.0, 0.0};
  return plant::solve_equilibrium(cfg, rq);
}

double relative_angle_after(double dt) {
  auto cfg = plant::PlantConfig::defaults();
  auto topo = plant::Topology::all_closed(cfg);
  auto eq = equilibrium(cfg, topo, 220.0, 220.0);
  auto sets = eq.sets;
  sets[0].generator.rotor_angle += 0.2; // smooth swing from a displaced rotor
  plant::Plant p(cfg, sets, topo);
  const int n = static_cast<int>(std::lround(0.2 / dt));
  for (int k = 0; k < n; ++k)
    p.step(eq.actuation, dt);
  return p.sets()[0].generator.rotor_angle;
}

void integrator_order() {
  const double dt = 1e-4;
  const double ref = relative_angle_after(dt / 32.0);
  const double e1 = std::abs(relative_angle_after(dt) - ref);
  const double e2 = std::abs(relative_angle_after(dt / 2.0) - ref);
  const double ratio = e1 / e2;
  report(ratio >= kOrderRatio, "integrator-order",
         fmt::format("rotor-angle error {:.3e} rad at dt={} s, {:.3e} rad at dt/2, ratio {:.2f} "
                     "(>= {})",
                     e1, dt, e2, ratio, kOrderRatio));
}

// ---------------------------------------------------------------------------

double rel(std::complex<double> a, std::complex<double> b) {
  return std::abs(a - b) / std::max(std::abs(b), 1e-9);
}

void oracle_equivalence() {
  std::mt19937_64 rng(20240611);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  double worst = 0.0;
  int solved = 0;
  for (int c = 0; c < kOracleConfigs; ++c) {
    auto cfg = plant::PlantConfig::defaults();
    for (auto &s : cfg.sets)
      s.line_impedance = {0.2 + 1.5 * u(rng), 0.5 + 2.5 * u(rng)};
    for (auto &l : cfg.loads.elements)
      l.impedance = {80.0 + 200.0 * u(rng), 80.0 * u(rng)};
    auto topo = plant::Topology::all_closed(cfg);
    for (std::size_t j = 1; j < topo.relay_closed.size(); ++j)
      topo.relay_closed[j] = u(rng) > 0.25;
    const double v0 = 212.0 + 16.0 * u(rng), v1 = 212.0 + 16.0 * u(rng);

    auto eq = equilibrium(cfg, topo, v0, v1);
    plant::Plant p(cfg, eq.sets, topo);
    for (int k = 0; k < 2000; ++k) // 0.2 s at the held operating point
      p.step(eq.actuation, 1e-4);
    const auto &net = p.network();

    oracle::PowerFlowCase pf;
    pf.line0 = cfg.sets[0].line_impedance;
    pf.line1 = cfg.sets[1].line_impedance;
    std::complex<double> y = 0.0;
    for (std::size_t j = 0; j < topo.relay_closed.size(); ++j)
      if (topo.relay_closed[j])
        y += 1.0 / cfg.loads.elements[j].impedance;
    pf.load = 1.0 / y;
    pf.v0 = std::abs(net.bus_voltages[0]);
    pf.v1 = std::abs(net.bus_voltages[1]);
    const auto s1 = net.bus_voltages[1] * std::conj(net.branch_currents[1]);
    pf.p1 = s1.real();
    auto o = oracle::power_flow(pf);
    solved += o.iterations < 50;

    // The plant's phasors share the oracle's reference once rotated onto bus 0.
    const auto rot = std::polar(1.0, -std::arg(net.bus_voltages[0]));
    const auto s0 = net.bus_voltages[0] * std::conj(net.branch_currents[0]);
    for (double e : {rel(net.load_bus_voltage() * rot, o.vl), rel(net.bus_voltages[1] * rot, o.v1),
                     rel(net.branch_currents[0] * rot, o.i0), rel(net.branch_currents[1] * rot, o.i1),
                     rel(s0, o.s0), rel(s1, o.s1)})
      worst = std::max(worst, e);
  }
  report(solved == kOracleConfigs && worst < kOracleTolerance, "oracle-equivalence",
         fmt::format("{} randomized configurations, worst relative deviation from the power-flow "
                     "oracle {:.2e} (< {})",
                     kOracleConfigs, worst, kOracleTolerance));
}

// ---------------------------------------------------------------------------

void self_healing() {
  auto s = load("gen1-trip");
  double trip_t = -1.0;
  for (const auto &e : s.events)
    if (e.kind == engine::EventKind::generator_trip)
      trip_t = e.t;
  auto r = engine::run_scenario(s);
  const auto &cfg = s.controller;
  const double band = cfg.voltage_tolerance * cfg.nominal_voltage;

  double pre_load = 0.0, capacity = 0.0;
  int pre_n = 0;
  double last_out = trip_t, g2_end = 0.0, g1_end = 0.0, total_end = 0.0;
  int end_n = 0;
  bool shed = false;
  for (std::size_t k = 0; k < r.frames.size(); ++k) {
    const auto &f = r.frames[k];
    shed |= !r.decisions[k].relay_commands.empty();
    if (f.timestamp >= trip_t - 0.5 && f.timestamp < trip_t) {
      pre_load += f.generators[0].real_power + f.generators[1].real_power;
      ++pre_n;
    }
    if (f.timestamp >= trip_t && std::abs(f.load_bus.voltage_rms - cfg.nominal_voltage) > band)
      last_out = f.timestamp;
    if (f.timestamp >= s.duration - 0.5) {
      g1_end += f.generators[0].real_power;
      g2_end += f.generators[1].real_power;
      total_end += f.generators[0].real_power + f.generators[1].real_power;
      ++end_n;
    }
  }
  for (const auto &g : cfg.generators)
    capacity += g.rated_power;
  pre_load /= std::max(pre_n, 1);
  g1_end /= std::max(end_n, 1);
  g2_end /= std::max(end_n, 1);
  total_end /= std::max(end_n, 1);
  const double loading = pre_load / capacity;
  const double recovery = last_out - trip_t;
  const bool tripped = r.decisions.back().modes[0] == controller::GeneratorMode::tripped;
  const bool ok = !r.diagnostic && tripped && std::abs(loading - 0.5) < 0.05 &&
                  recovery <= kRecoveryLimit && !shed && g1_end < 1.0 &&
                  g2_end > 0.95 * total_end && g2_end > 0.9 * pre_load;
  report(ok, "self-healing",
         fmt::format("G1 tripped at {:.1f} s from {:.0f}% load; load-bus voltage back inside "
                     "+/-{:.0f} V after {:.3f} s (<= {} s); G2 carries {:.0f} W of {:.0f} W "
                     "pre-trip; relays shed: {}",
                     trip_t, 100.0 * loading, band, recovery, kRecoveryLimit, g2_end, pre_load,
                     shed ? "yes" : "none"));
}

// ---------------------------------------------------------------------------

void overcurrent_shedding() {
  auto s = load("overcurrent-shed");
  const auto &cfg = s.controller;
  const double confirm_level = cfg.branch_current_limit * cfg.permissible_band;
  engine::Simulation sim(s);

  int run = 0;
  std::optional<double> confirmed_at;
  std::vector<plant::GeneratorState> frozen;
  plant::Topology frozen_topology;
  plant::LoadBank frozen_loads;
  double step_current = 0.0;
  sim.on_period = [&](const devices::TelemetryFrame &f, const controller::ControllerDecision &) {
    run = f.load_bus.current_rms > confirm_level ? run + 1 : 0;
    if (run > 0)
      step_current = std::max(step_current, f.load_bus.current_rms);
    if (!confirmed_at && run == cfg.trip_confirmation_periods) {
      confirmed_at = f.timestamp;
      frozen = sim.plant().generator_states();
      frozen_topology = sim.plant().topology();
      frozen_loads = sim.plant().config().loads;
    }
  };
  while (sim.step()) {
  }
  auto r = sim.record();
  if (!confirmed_at) {
    report(false, "overcurrent-shedding", "load current never confirmed beyond band");
    return;
  }

  // Oracle: frozen EMFs behind their impedances, every relay subset solved by
  // Millman; the minimal prefix is the shortest priority prefix that brings
  // the load current under the limit.
  const auto &pc = s.plant;
  std::vector<std::string> order;
  for (const auto &t : cfg.shedding_order)
    order.push_back(t.relay_id);
  const std::size_t nloads = frozen_loads.elements.size();
  std::vector<double> subset_current(std::size_t{1} << nloads);
  for (std::size_t mask = 0; mask < subset_current.size(); ++mask) {
    oracle::Radial g;
    for (std::size_t i = 0; i < pc.sets.size(); ++i)
      if (frozen_topology.breaker_closed[i]) {
        g.emf.push_back(frozen[i].emf_phasor());
        g.series.push_back(pc.sets[i].generator.synchronous_impedance() + pc.sets[i].line_impedance);
      }
    for (std::size_t j = 0; j < nloads; ++j)
      if (frozen_topology.relay_closed[j] && !(mask >> j & 1))
        g.loads.push_back(frozen_loads.elements[j].impedance);
    subset_current[mask] = oracle::load_current(g);
  }
  auto mask_of = [&](const std::vector<std::string> &relays) {
    std::size_t m = 0;
    for (const auto &id : relays)
      for (std::size_t j = 0; j < nloads; ++j)
        if (frozen_loads.elements[j].relay_id == id)
          m |= std::size_t{1} << j;
    return m;
  };
  std::vector<std::string> expected;
  for (const auto &id : order) {
    if (subset_current[mask_of(expected)] <= cfg.branch_current_limit)
      break;
    expected.push_back(id);
  }

  std::vector<std::string> shed;
  for (const auto &d : r.decisions)
    for (const auto &c : d.relay_commands)
      if (c.state == devices::SwitchState::open)
        shed.push_back(c.id);
  // Latest contact-open time over the shed relays: first frame each shows open.
  double last_open = -1.0;
  for (const auto &id : shed)
    for (const auto &f : r.frames)
      if (f.switch_state(id) == devices::SwitchState::open) {
        last_open = std::max(last_open, f.timestamp);
        break;
      }
  const double elapsed = last_open - *confirmed_at;
  const double overload = step_current / cfg.branch_current_limit;
  const bool ok = !r.diagnostic && shed == expected && !shed.empty() && elapsed <= kShedWindow &&
                  overload > 1.15 && overload < 1.35;
  report(ok, "overcurrent-shedding",
         fmt::format("load current {:.2f} A ({:.0f}% of {:.0f} A) confirmed at {:.3f} s; shed [{}], "
                     "oracle minimal prefix [{}]; contacts open {:.0f} ms after confirmation "
                     "(<= {:.0f} ms)",
                     step_current, 100.0 * overload, cfg.branch_current_limit, *confirmed_at,
                     fmt::join(shed, ","), fmt::join(expected, ","), 1e3 * elapsed, 1e3 * kShedWindow));
}

// ---------------------------------------------------------------------------

struct SyncTally {
  long steps = 0;
  long closes = 0;
  long violations = 0;
};

void audit_close(SyncTally &t, const devices::TelemetryFrame &f,
                 const controller::ControllerDecision &d, const controller::ControllerConfig &cfg) {
  if (!d.sync_close)
    return;
  ++t.closes;
  auto chk = controller::sync_check(f.generators[*d.sync_close], f.load_bus, cfg);
  const bool within = chk.voltage_residual <= cfg.sync.voltage_tolerance &&
                      std::abs(chk.frequency_residual) <= cfg.sync.frequency_tolerance &&
                      std::abs(chk.phase_residual) <= cfg.sync.phase_tolerance;
  t.violations += !within;
}

devices::TelemetryFrame synchronizing_frame(const controller::ControllerConfig &cfg, double t) {
  devices::TelemetryFrame f;
  f.timestamp = t;
  for (std::size_t i = 0; i < cfg.generators.size(); ++i) {
    devices::GeneratorTelemetry g;
    g.id = cfg.generators[i].id;
    g.terminal_voltage_rms = cfg.nominal_voltage;
    g.stator_current_rms = i == 0 ? 5.5 : 0.0;
    g.real_power = i == 0 ? 1200.0 : 0.0;
    g.speed_rpm = 60.0 * cfg.nominal_frequency / cfg.generators[i].pole_pairs;
    g.frequency = cfg.nominal_frequency;
    g.bus_voltage_rms = cfg.nominal_voltage;
    f.generators.push_back(g);
    f.dc.push_back({});
    f.breakers.push_back({cfg.generators[i].breaker_id,
                          i == 0 ? devices::SwitchState::closed : devices::SwitchState::open});
  }
  f.load_bus = {cfg.nominal_voltage, 5.5, cfg.nominal_frequency};
  for (const auto &t : cfg.shedding_order)
    f.relays.push_back({t.relay_id, devices::SwitchState::closed});
  return f;
}

void sync_safety() {
  // Closed loop: the operator sweeps the incoming machine's speed setpoint.
  auto s = load("sync-sweep");
  const auto &cfg = s.controller;
  SyncTally loop;
  double df_min = 1e9, df_max = -1e9;
  engine::Simulation sim(s);
  sim.on_period = [&](const devices::TelemetryFrame &f, const controller::ControllerDecision &d) {
    ++loop.steps;
    audit_close(loop, f, d, cfg);
  };
  while (sim.step()) {
  }
  auto r = sim.record();
  for (const auto &e : s.events)
    if (e.params.value("command", "") == "setpoint_change" && e.params.contains("speed_setpoint_rpm")) {
      double f = e.params["speed_setpoint_rpm"].get<double>() * s.plant.sets[1].generator.pole_pairs / 60.0;
      df_min = std::min(df_min, f - s.plant.nominal_frequency());
      df_max = std::max(df_max, f - s.plant.nominal_frequency());
    }

  // Open loop: synthetic frames of a synchronizing machine with jitter.
  SyncTally synth;
  std::mt19937_64 rng(77);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  auto state0 = controller::initial_controller_state(cfg, {true, false}, {0.58, 0.58}, {0.95, 0.95});
  for (int run = 0; run < kSyncRuns; ++run) {
    auto st = state0;
    controller::Request rq;
    rq.request_id = "sweep";
    rq.kind = controller::RequestKind::sync_request;
    rq.target = cfg.generators[1].id;
    st.pending_requests.push_back(rq);
    // Constant slip per run so the phase rotates through the window; slips
    // beyond the frequency tolerance must never close.
    double phase = 180.0 * u(rng);
    const double slip = 0.4 * u(rng);
    const int n = 10000;
    for (int k = 0; k < n; ++k) {
      auto f = synchronizing_frame(cfg, k * cfg.control_period);
      phase += 360.0 * slip * cfg.control_period;
      phase = std::remainder(phase, 360.0);
      auto &g = f.generators[1];
      g.frequency = f.load_bus.frequency + slip + 0.02 * u(rng);
      g.phase_difference = phase + 2.0 * u(rng);
      g.terminal_voltage_rms = f.load_bus.voltage_rms + 6.0 * u(rng);
      g.bus_voltage_rms = f.load_bus.voltage_rms;
      auto step = controller::controller_step(f, std::move(st), cfg);
      st = std::move(step.state);
      ++synth.steps;
      audit_close(synth, f, step.decision, cfg);
      if (step.decision.sync_close)
        break;
    }
  }
  const bool ok = !r.diagnostic && loop.violations == 0 && synth.violations == 0 &&
                  synth.steps >= kSyncSteps && synth.closes > 0 && df_min <= -1.0 + 1e-6 &&
                  df_max >= 1.0 - 1e-6;
  report(ok, "sync-safety",
         fmt::format("closed-loop sweep {:+.2f}..{:+.2f} Hz: {} steps, {} closes, {} outside "
                     "tolerance; synthetic sweep: {} runs, {} steps, {} closes, {} outside tolerance",
                     df_min, df_max, loop.steps, loop.closes, loop.violations, kSyncRuns, synth.steps,
                     synth.closes, synth.violations));
}

// ---------------------------------------------------------------------------

void determinism() {
  int digest_mismatch = 0, csv_mismatch = 0;
  for (auto name : kReference) {
    auto s = load(name);
    auto a = engine::run_scenario(s);
    auto b = engine::run_scenario(s);
    digest_mismatch += a.digest != b.digest;
    csv_mismatch += engine::render_csv(a, engine::csv_groups()) != engine::render_csv(b, engine::csv_groups());
  }

  std::mt19937_64 rng(99);
  const std::uint8_t regs[] = {0x01, 0x02, 0x03, 0x04, 0x05, 0x06, 0x07, 0x08, 0x09};
  int roundtrip_mismatch = 0;
  long corrupted = 0, rejected = 0;
  for (int k = 0; k < kCodecFrames; ++k) {
    devices::MeterFrame f;
    f.device_id = static_cast<std::uint8_t>(rng());
    f.sequence = static_cast<std::uint8_t>(rng());
    const int n = 1 + static_cast<int>(rng() % 9);
    for (int j = 0; j < n; ++j)
      f.payload.push_back({regs[rng() % 9], static_cast<std::uint16_t>(rng())});
    auto wire = devices::encode_meter_frame(f);
    auto back = devices::decode_meter_frame(wire);
    f.crc = static_cast<std::uint16_t>(wire[wire.size() - 2] | (wire.back() << 8));
    roundtrip_mismatch += back.status != devices::DecodeStatus::ok || !back.frame || !(*back.frame == f);

    auto bad = wire;
    const std::size_t bit = rng() % (bad.size() * 8);
    bad[bit / 8] ^= static_cast<std::uint8_t>(1u << (bit % 8));
    ++corrupted;
    rejected += devices::decode_meter_frame(bad).status != devices::DecodeStatus::ok;
  }
  const double rejection = static_cast<double>(rejected) / static_cast<double>(corrupted);
  const bool ok = digest_mismatch == 0 && csv_mismatch == 0 && roundtrip_mismatch == 0 &&
                  rejection >= kCorruptionRejection;
  report(ok, "determinism",
         fmt::format("{} reference scenarios run twice: {} digest and {} CSV mismatches; {} random "
                     "frames: {} round-trip mismatches, single-bit corruption rejected {:.2f}% "
                     "(>= {:.1f}%)",
                     std::size(kReference), digest_mismatch, csv_mismatch, kCodecFrames,
                     roundtrip_mismatch, 100.0 * rejection, 100.0 * kCorruptionRejection));
}

// ---------------------------------------------------------------------------

void control_period() {
  int bad = 0;
  std::string detail;
  for (auto name : kReference) {
    auto s = load(name);
    auto r = engine::run_scenario(s);
    const auto expected = static_cast<std::size_t>(std::floor(s.duration / 1e-3 + 1e-9));
    bool ok = s.timing.control_period == 1e-3 && r.frames.size() == expected &&
              r.decisions.size() == expected;
    for (std::size_t k = 0; ok && k < r.frames.size(); ++k)
      ok = std::abs(r.frames[k].timestamp - static_cast<double>(k) * 1e-3) < 1e-12 &&
           r.decisions[k].timestamp == r.frames[k].timestamp;
    bad += !ok;
    detail += fmt::format("{}{} {}/{}", detail.empty() ? "" : ", ", name, r.decisions.size(), expected);
  }
  report(bad == 0, "control-period",
         fmt::format("controller evaluations / (duration / 1 ms): {}", detail));
}

} // namespace

int main() {
  physics_sanity();
  integrator_order();
  oracle_equivalence();
  self_healing();
  overcurrent_shedding();
  sync_safety();
  determinism();
  control_period();
  fmt::print("{} criteria, {} failed\n", 8, failures);
  return failures ? 1 : 0;
}

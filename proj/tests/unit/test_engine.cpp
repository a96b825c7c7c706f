/* SPDX-License-Identifier: Apache-2.0 */

#include <gridloop/engine/simulation.hpp>

#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <fstream>
#include <random>
#include <sstream>

using namespace gridloop;
using namespace gridloop::engine;
using Catch::Approx;

namespace {

std::string scenario_path(const std::string &name) {
  return std::string(GRIDLOOP_SCENARIO_DIR) + "/" + name + ".json";
}

std::string read_file(const std::string &path) {
  std::ifstream in(path);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

Scenario short_scenario(double duration = 0.5) {
  auto s = load_scenario(scenario_path("nominal"));
  s.duration = duration;
  s.events.clear();
  return s;
}

json minimal() { return {{"schema_version", 1}, {"name", "t"}, {"seed", 1}, {"duration", 0.1}}; }

std::vector<std::string> problems_of(const json &doc) {
  try {
    auto s = parse_scenario(doc);
    return s.problems();
  } catch (const ValidationError &e) {
    return e.problems();
  }
}

bool mentions(const std::vector<std::string> &v, std::string_view needle) {
  for (const auto &p : v)
    if (p.find(needle) != std::string::npos)
      return true;
  return false;
}

} // namespace

TEST_CASE("reference scenarios validate") {
  for (auto name : {"nominal", "gen1-trip", "overcurrent-shed", "sync-auto", "sync-sweep"}) {
    INFO(name);
    auto s = load_scenario(scenario_path(name));
    CHECK(s.problems().empty());
  }
}

TEST_CASE("scenario validation names the problem") {
  CHECK(problems_of(minimal()).empty());

  auto doc = minimal();
  doc["colour"] = "blue";
  CHECK(mentions(problems_of(doc), "unknown field colour"));

  doc = minimal();
  doc["schema_version"] = 2;
  CHECK(mentions(problems_of(doc), "schema_version"));

  doc = minimal();
  doc["timing"] = {{"plant_dt", 3e-4}, {"control_period", 1e-3}};
  CHECK_FALSE(problems_of(doc).empty());

  doc = minimal();
  doc["events"] = json::array({{{"t", 0.05}, {"kind", "relay_force"}, {"params", {{"relay", "R9"}, {"state", "open"}}}}});
  CHECK(mentions(problems_of(doc), "unknown relay R9"));

  doc = minimal();
  doc["events"] = json::array({{{"t", 0.05}, {"kind", "meteor"}, {"params", json::object()}}});
  CHECK_FALSE(problems_of(doc).empty());

  doc = minimal();
  doc["events"] = json::array({{{"t", 0.05}, {"kind", "operator_command"},
                                {"params", {{"command", "setpoint_change"}, {"target", "G1"}}}}});
  CHECK(mentions(problems_of(doc), "setpoint_change needs"));
}

TEST_CASE("scenario JSON round-trips") {
  auto s = load_scenario(scenario_path("sync-sweep"));
  auto again = parse_scenario(to_json(s));
  CHECK(to_json(again) == to_json(s));
  CHECK(again.events.size() == s.events.size());
}

TEST_CASE("frame count is duration over the control period") {
  auto s = short_scenario();
  for (double d : {0.5, 0.0105, 1.0, 2.345}) {
    s.duration = d;
    CHECK(s.frame_count() == static_cast<std::size_t>(std::floor(d / 1e-3 + 1e-9)));
  }
  s.duration = 0.25;
  auto r = run_scenario(s);
  REQUIRE(r.frames.size() == 250);
  for (std::size_t k = 0; k < r.frames.size(); ++k)
    CHECK(r.frames[k].timestamp == Approx(k * 1e-3).margin(1e-12));
  CHECK(r.decisions.size() == 250);
  CHECK(r.decision_log.size() == 250);
}

TEST_CASE("runs are deterministic and depend on the seed") {
  auto s = short_scenario();
  auto a = run_scenario(s);
  auto b = run_scenario(s);
  CHECK(a.digest == b.digest);
  CHECK(render_csv(a, csv_groups()) == render_csv(b, csv_groups()));
  s.seed += 1;
  CHECK(run_scenario(s).digest != a.digest);
}

TEST_CASE("reference runs reproduce the frozen digests and actions") {
  auto golden = json::parse(read_file(std::string(GRIDLOOP_GOLDEN_DIR) + "/digests.json"));
  for (auto name : {"gen1-trip", "overcurrent-shed", "sync-auto"}) {
    INFO(name);
    auto r = run_scenario(load_scenario(scenario_path(name)));
    CHECK(r.digest == golden.at(name).get<std::string>());
    std::string actions;
    for (const auto &line : r.decision_log)
      if (line.find("note=") != std::string::npos || line.find("relay=") != std::string::npos ||
          line.find("breaker=") != std::string::npos || line.find(" sync=") != std::string::npos)
        actions += line + "\n";
    CHECK(actions == read_file(std::string(GRIDLOOP_GOLDEN_DIR) + "/" + name + ".actions.log"));
  }
}

TEST_CASE("live events are validated and applied at the next boundary") {
  Simulation sim(short_scenario(0.1));
  for (int k = 0; k < 10; ++k)
    sim.step();
  ScenarioEvent bad{0.0, EventKind::relay_force, {{"relay", "R9"}, {"state", "open"}}};
  auto r = sim.inject(bad);
  CHECK_FALSE(r.accepted);
  CHECK(r.reason == "unknown relay R9");

  ScenarioEvent ok{0.0, EventKind::operator_command,
                   {{"command", "relay_command"}, {"target", "R4"}, {"state", "open"}, {"request_id", "r1"}}};
  REQUIRE(sim.inject(ok, "console").accepted);
  sim.step();
  auto rec = sim.record();
  REQUIRE(rec.events.size() == 1);
  CHECK(rec.events[0].t == Approx(0.010));
  CHECK(rec.events[0].source == "console");
  CHECK(rec.decision_log.back().find("relay=R4:open") != std::string::npos);
  for (int k = 0; k < 30; ++k)
    sim.step();
  CHECK(sim.record().frames.back().switch_state("R4") == devices::SwitchState::open);
}

TEST_CASE("event time ties apply in file order before the controller runs") {
  auto s = short_scenario(0.01);
  s.events = {
      {0.005, EventKind::operator_command, {{"command", "setpoint_change"}, {"target", "G1"}, {"voltage_setpoint", 225.0}}},
      {0.005, EventKind::operator_command, {{"command", "setpoint_change"}, {"target", "G1"}, {"voltage_setpoint", 215.0}}},
  };
  auto r = run_scenario(s);
  REQUIRE(r.events.size() == 2);
  CHECK(r.decision_log[5].find("setpoint G1: 225.0 V") != std::string::npos);
  CHECK(r.decision_log[5].find("setpoint G1: 215.0 V") != std::string::npos);
  CHECK(r.decision_log[5].find("225.0") < r.decision_log[5].find("215.0"));
}

TEST_CASE("numerical divergence ends the run with a diagnostic") {
  auto doc = minimal();
  doc["duration"] = 1.0;
  doc["timing"] = {{"plant_dt", 1e-3}, {"control_period", 1e-3}};
  json fragile = {{"inertia", 1e-5}, {"prime_mover", {{"armature_time_constant", 1e-5}}}};
  doc["plant"] = {{"sets", json::array({fragile, fragile})}};
  doc["events"] = json::array({{{"t", 0.1}, {"kind", "load_step"}, {"params", {{"load", "L1"}, {"resistance", 20.0}}}}});
  auto r = run_scenario(parse_scenario(doc));
  REQUIRE(r.diagnostic);
  CHECK(r.truncated());
  CHECK(r.frames.size() < 1000);
  CHECK_FALSE(r.digest.empty());
}

TEST_CASE("CSV export") {
  auto r = run_scenario(short_scenario(0.01));
  auto csv = render_csv(r, {"load_bus", "decisions"});
  REQUIRE(csv.size() == 2);
  auto &lb = csv.at("load_bus");
  CHECK(lb.rfind("t,load_bus.voltage_rms,load_bus.current_rms,load_bus.frequency", 0) == 0);
  CHECK(std::count(lb.begin(), lb.end(), '\n') == 11);
  CHECK(lb.find("\n0.001000,") != std::string::npos);
  try {
    render_csv(r, {"weather"});
    FAIL("expected ValidationError");
  } catch (const ValidationError &e) {
    CHECK(mentions(e.problems(), "valid groups: generators, load_bus, dc, decisions"));
  }
}

TEST_CASE("physics bookkeeping on a short nominal run") {
  auto r = run_scenario(short_scenario(1.0));
  CHECK(std::abs(r.energy.relative_imbalance()) < 0.01);
  CHECK(r.max_kcl_residual < 1e-6 * plant::PlantConfig::defaults().rated_current());
  CHECK(r.stale_frames == 0);
  CHECK_FALSE(r.diagnostic);
}

TEST_CASE("property: randomized scenarios complete or end with a diagnostic") {
  std::mt19937_64 rng(4242);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  auto pick = [&](std::initializer_list<const char *> v) {
    return std::string(*(v.begin() + static_cast<std::ptrdiff_t>(rng() % v.size())));
  };
  int diverged = 0;
  for (int run = 0; run < 40; ++run) {
    auto s = short_scenario(0.3);
    s.seed = rng();
    for (auto &set : s.plant.sets) {
      set.line_impedance = {0.1 + 2.0 * u(rng), 0.2 + 3.0 * u(rng)};
      set.inertia = std::pow(10.0, -3.0 + 2.0 * u(rng));
    }
    for (auto &l : s.plant.loads.elements)
      l.impedance = {40.0 + 400.0 * u(rng), 100.0 * u(rng)};
    s.devices.noise_sigma = 0.01 * u(rng);
    s.devices.serial_bit_error_rate = 1e-4 * u(rng);
    const int events = static_cast<int>(rng() % 6);
    double t = 0.0;
    for (int k = 0; k < events; ++k) {
      t = std::min(s.duration, t + 0.05 * u(rng));
      ScenarioEvent e;
      e.t = std::round(t * 1e3) / 1e3;
      switch (rng() % 5) {
      case 0:
        e.kind = EventKind::load_step;
        e.params = {{"load", pick({"L1", "L2", "L3", "L4"})},
                    {"resistance", 5.0 + 300.0 * u(rng)},
                    {"reactance", 50.0 * u(rng)}};
        break;
      case 1:
        e.kind = EventKind::relay_force;
        e.params = {{"relay", pick({"R1", "R2", "R3", "R4", "B1", "B2"})},
                    {"state", pick({"open", "closed"})}};
        break;
      case 2:
        e.kind = EventKind::generator_trip;
        e.params = {{"generator", pick({"G1", "G2"})}};
        break;
      case 3:
        e.kind = EventKind::sensor_bias;
        e.params = {{"channel", pick({"load_bus.current_rms", "G1.speed_rpm", "G2.frequency"})},
                    {"bias", 20.0 * (u(rng) - 0.5)}};
        break;
      default:
        e.kind = EventKind::operator_command;
        e.params = {{"command", pick({"reset_trip", "sync_request", "setpoint_change"})},
                    {"target", pick({"G1", "G2"})},
                    {"voltage_setpoint", 180.0 + 80.0 * u(rng)}};
        break;
      }
      s.events.push_back(e);
    }
    INFO("run " << run);
    REQUIRE(s.problems().empty());
    auto r = run_scenario(s);
    CHECK(r.frames.size() == r.decisions.size());
    CHECK(r.decision_log.size() == r.frames.size());
    CHECK(r.digest.size() == 64);
    if (r.diagnostic) {
      ++diverged;
      CHECK_FALSE(r.diagnostic->kind.empty());
      CHECK_FALSE(r.diagnostic->message.empty());
      CHECK(r.frames.size() <= s.frame_count());
    } else {
      CHECK(r.frames.size() == s.frame_count());
      for (const auto &f : r.frames)
        CHECK(std::isfinite(f.load_bus.voltage_rms));
    }
  }
  CHECK(diverged < 40);
}

/* SPDX-License-Identifier: Apache-2.0 */

#include <gridloop/plant/plant.hpp>

#include "oracles/phasor.hpp"

#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <random>

using namespace gridloop;
using namespace gridloop::plant;
using Catch::Approx;

namespace {

Equilibrium nominal_equilibrium(const PlantConfig &cfg) {
  EquilibriumRequest rq;
  rq.topology = Topology::all_closed(cfg);
  rq.terminal_voltage = {220.0, 220.0};
  rq.speed_rpm = {1400.0, 1400.0};
  rq.phase_offset_deg = {0.0, 0.0};
  return solve_equilibrium(cfg, rq);
}

double rotor_angle_after(const PlantConfig &cfg, const Equilibrium &eq, double kick, double dt,
                         double duration) {
  auto sets = eq.sets;
  sets[0].generator.rotor_angle += kick;
  Plant p(cfg, sets, Topology::all_closed(cfg));
  const int n = static_cast<int>(std::lround(duration / dt));
  for (int k = 0; k < n; ++k)
    p.step(eq.actuation, dt);
  return p.sets()[0].generator.rotor_angle - p.sets()[1].generator.rotor_angle;
}

} // namespace

TEST_CASE("buck converter output is duty times input") {
  CHECK(buck_output({0.5, 230.0, 0.0}) == Approx(115.0));
  CHECK(buck_output({1.0, 220.0, 0.0}) == Approx(220.0));
  CHECK_THROWS_AS(buck_output({1.2, 220.0, 0.0}), DomainError);
  CHECK_THROWS_AS(buck_output({-0.1, 220.0, 0.0}), DomainError);
}

TEST_CASE("prime mover flux constant satisfies the rated operating point") {
  PrimeMoverParams pm;
  const double w = rpm_to_rad_per_s(1400.0);
  const double k = rated_flux_constant(pm, w);
  // V = k w + R I with I = P / (k w)
  const double ia = pm.rated_power / (k * w);
  CHECK(k * w + pm.armature_resistance * ia == Approx(pm.rated_voltage).epsilon(1e-12));
  CHECK(flux_constant(pm, w, pm.rated_voltage) == Approx(k));
  CHECK(flux_constant(pm, w, 0.5 * pm.rated_voltage) == Approx(0.5 * k));
}

TEST_CASE("unloaded prime mover settles at armature voltage over flux") {
  auto set = PlantConfig::defaults().sets[0];
  const double w = set.generator.rated_speed();
  const double flux = flux_constant(set.prime_mover, w, 220.0);
  PrimeMoverState s;
  for (int k = 0; k < 200000; ++k)
    s = step_prime_mover(set, s, 200.0, 220.0, 0.0, 1e-4);
  CHECK(s.shaft_speed == Approx(200.0 / flux).epsilon(1e-6));
  CHECK(s.armature_current == Approx(0.0).margin(1e-6));
}

TEST_CASE("open-circuit EMF scales with field voltage and speed") {
  GeneratorParams g;
  CHECK(excitation_emf(g, 110.0, g.rated_speed()) == Approx(200.0));
  CHECK(excitation_emf(g, 110.0, 0.5 * g.rated_speed()) == Approx(100.0));
  CHECK(excitation_emf(g, -5.0, g.rated_speed()) == 0.0);
}

TEST_CASE("network solution matches Millman's theorem on random radial cases") {
  std::mt19937_64 rng(42);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int trial = 0; trial < 50; ++trial) {
    auto cfg = PlantConfig::defaults();
    for (auto &s : cfg.sets)
      s.line_impedance = {0.1 + u(rng), 0.2 + 2.0 * u(rng)};
    for (auto &l : cfg.loads.elements)
      l.impedance = {50.0 + 200.0 * u(rng), 100.0 * u(rng)};
    auto topo = Topology::all_closed(cfg);
    for (std::size_t j = 0; j < topo.relay_closed.size(); ++j)
      topo.relay_closed[j] = u(rng) > 0.3;
    std::vector<GeneratorState> gens(2);
    oracle::Radial radial;
    for (std::size_t i = 0; i < 2; ++i) {
      gens[i].internal_emf = 220.0 + 60.0 * u(rng);
      gens[i].rotor_angle = 0.4 * (u(rng) - 0.5);
      gens[i].rotor_speed = cfg.sets[i].generator.rated_speed();
      radial.emf.push_back(std::polar(gens[i].internal_emf, gens[i].rotor_angle));
      radial.series.push_back(cfg.sets[i].generator.synchronous_impedance() +
                              cfg.sets[i].line_impedance);
    }
    for (std::size_t j = 0; j < topo.relay_closed.size(); ++j)
      if (topo.relay_closed[j])
        radial.loads.push_back(cfg.loads.elements[j].impedance);

    auto net = solve_network(cfg, gens, cfg.loads, topo);
    auto expected = oracle::millman(radial);
    CHECK(std::abs(net.load_bus_voltage() - expected) < 1e-9 * std::abs(expected) + 1e-9);
    CHECK(std::abs(net.load_bus_current()) == Approx(oracle::load_current(radial)).epsilon(1e-9));
    for (double r : kcl_residuals(cfg, gens, cfg.loads, topo, net))
      CHECK(r < 1e-9);
  }
}

TEST_CASE("an open breaker isolates its machine") {
  auto cfg = PlantConfig::defaults();
  auto topo = Topology::all_closed(cfg);
  topo.breaker_closed[1] = false;
  std::vector<GeneratorState> gens(2);
  for (auto &g : gens) {
    g.internal_emf = 250.0;
    g.rotor_speed = cfg.sets[0].generator.rated_speed();
  }
  auto net = solve_network(cfg, gens, cfg.loads, topo);
  CHECK(std::abs(net.stator_currents[1]) == 0.0);
  CHECK(std::abs(net.branch_currents[1]) < 1e-9);
  CHECK(std::abs(net.stator_currents[0]) > 1.0);

  topo.breaker_closed[0] = false;
  net = solve_network(cfg, gens, cfg.loads, topo);
  CHECK(std::abs(net.load_bus_voltage()) == 0.0);
}

TEST_CASE("equilibrium holds terminal voltages and shares power equally") {
  auto cfg = PlantConfig::defaults();
  auto eq = nominal_equilibrium(cfg);
  Plant p(cfg, eq.sets, Topology::all_closed(cfg));
  const auto &net = p.network();
  for (std::size_t i = 0; i < 2; ++i)
    CHECK(std::abs(net.bus_voltages[i]) == Approx(220.0).epsilon(1e-6));
  auto s0 = net.bus_voltages[0] * std::conj(net.stator_currents[0]);
  auto s1 = net.bus_voltages[1] * std::conj(net.stator_currents[1]);
  CHECK(s0.real() == Approx(s1.real()).epsilon(1e-6));

  for (int k = 0; k < 5000; ++k)
    p.step(eq.actuation, 1e-4);
  for (const auto &s : p.sets())
    CHECK(s.generator.rotor_speed == Approx(cfg.sets[0].generator.rated_speed()).epsilon(1e-6));
}

TEST_CASE("halving the step cuts the rotor-angle error by about four") {
  auto cfg = PlantConfig::defaults();
  auto eq = nominal_equilibrium(cfg);
  const double T = 0.2, kick = 0.2;
  const double ref = rotor_angle_after(cfg, eq, kick, 1e-4 / 32.0, T);
  const double e1 = std::abs(rotor_angle_after(cfg, eq, kick, 1e-4, T) - ref);
  const double e2 = std::abs(rotor_angle_after(cfg, eq, kick, 0.5e-4, T) - ref);
  REQUIRE(e2 > 0.0);
  CHECK(e1 / e2 >= 3.5);
}

TEST_CASE("energy balance closes during a swing") {
  auto cfg = PlantConfig::defaults();
  auto eq = nominal_equilibrium(cfg);
  auto sets = eq.sets;
  sets[0].generator.rotor_angle += 0.3;
  Plant p(cfg, sets, Topology::all_closed(cfg));
  for (int k = 0; k < 20000; ++k)
    p.step(eq.actuation, 1e-4);
  CHECK(std::abs(p.energy().relative_imbalance()) < 0.01);
  CHECK(p.max_kcl_residual() < 1e-6 * cfg.rated_current());
}

TEST_CASE("invalid plant configurations are reported") {
  auto cfg = PlantConfig::defaults();
  CHECK(cfg.problems().empty());
  cfg.sets[1].id = "G1";
  cfg.sets[0].inertia = -1.0;
  auto p = cfg.problems();
  CHECK(p.size() >= 2);
  PlantConfig empty;
  CHECK_FALSE(empty.problems().empty());
}

TEST_CASE("nominal frequency follows rated speed and pole pairs") {
  auto cfg = PlantConfig::defaults();
  CHECK(cfg.nominal_frequency() == Approx(1400.0 * 2 / 60.0));
}

/* Coupled plant: machine sets on their shafts plus the quasi-static network.
 *
 * SPDX-License-Identifier: Apache-2.0
 */

#pragma once

#include <gridloop/plant/network.hpp>

#include <vector>

namespace gridloop::plant {

struct SetState {
  PrimeMoverState prime_mover;
  GeneratorState generator;
};

/// Buck converter duties applied over a step (zero-order hold).
struct Actuation {
  std::vector<double> excitation_duty; // generator field converter, per set
  std::vector<double> armature_duty;   // prime-mover armature converter, per set
};

/// Running integrals for the energy-balance check.
struct EnergyLedger {
  double mechanical_in = 0.0; // J, motor air-gap power into the shafts
  double load = 0.0;          // J, dissipated in load elements
  double losses = 0.0;        // J, friction + line + stator copper
  double kinetic_initial = 0.0;
  double kinetic = 0.0;

  /// (in - out - stored) / in
  double relative_imbalance() const;
};

class Plant {
public:
  Plant(PlantConfig config, std::vector<SetState> sets, Topology topology);

  const PlantConfig &config() const { return config_; }
  const std::vector<SetState> &sets() const { return sets_; }
  const Topology &topology() const { return topology_; }
  const NetworkState &network() const { return network_; }
  const EnergyLedger &energy() const { return energy_; }
  double time() const { return time_; }

  /// Unwrapped phase of the load-bus voltage and of each machine terminal,
  /// accumulated across steps (rad, synchronous frame).
  double load_bus_phase() const { return load_phase_; }
  double terminal_phase(std::size_t set) const { return terminal_phase_[set]; }

  void set_topology(Topology topology);
  void set_load_impedance(std::size_t element, Complex impedance);

  /// One explicit Heun step of every shaft, armature and exciter state.
  void step(const Actuation &u, double dt);

  /// Largest KCL residual seen at any bus after any solve.
  double max_kcl_residual() const { return max_kcl_; }

  std::vector<GeneratorState> generator_states() const;

private:
  struct Rates;
  struct Inputs;
  Inputs inputs(const Actuation &u) const;
  std::vector<Rates> rates(const std::vector<SetState> &x, const Inputs &in,
                           const NetworkState &net) const;
  NetworkState solve(const std::vector<SetState> &x) const;
  void settle(const Inputs &in);
  double kinetic() const;
  void track_phases(double dt);

  PlantConfig config_;
  std::vector<SetState> sets_;
  Topology topology_;
  NetworkState network_;
  EnergyLedger energy_;
  double time_ = 0.0;
  double max_kcl_ = 0.0;
  double load_phase_ = 0.0;
  std::vector<double> terminal_phase_;
};

/// Operating-point request for initializing a plant at rest on its setpoints.
struct EquilibriumRequest {
  Topology topology;
  std::vector<double> terminal_voltage; // V per set
  std::vector<double> speed_rpm;        // per set; connected sets run synchronous
  std::vector<double> phase_offset_deg; // disconnected sets, against the load bus
};

struct Equilibrium {
  std::vector<SetState> sets;
  Actuation actuation;
};

/// Finds the steady state where connected sets hold their terminal-voltage
/// setpoints and share real power in proportion to their ratings.
Equilibrium solve_equilibrium(const PlantConfig &cfg, const EquilibriumRequest &request);

} // namespace gridloop::plant

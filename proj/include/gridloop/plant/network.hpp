/* Quasi-static phasor nodal solution of the generator/load-bus network.
 *
 * Bus numbering: bus i (0 <= i < N) is the terminal bus of machine set i,
 * bus N is the common load bus. Line i joins bus i to bus N.
 *
 * SPDX-License-Identifier: Apache-2.0
 */

#pragma once

#include <gridloop/plant/config.hpp>
#include <gridloop/plant/machines.hpp>

#include <span>
#include <vector>

namespace gridloop::plant {

struct Topology {
  std::vector<bool> breaker_closed; // per machine set
  std::vector<bool> relay_closed;   // per load element, LoadBank order

  static Topology all_closed(const PlantConfig &cfg);
  static Topology all_open(const PlantConfig &cfg);
};

struct NetworkState {
  std::vector<Complex> bus_voltages;    // N generator buses, then the load bus
  std::vector<Complex> branch_currents; // line i, generator bus -> load bus
  std::vector<Complex> stator_currents; // machine -> its bus
  std::vector<Complex> load_currents;   // into each load element
  double frequency = 0.0;               // Hz at the load bus

  std::size_t load_bus() const { return bus_voltages.size() - 1; }
  Complex load_bus_voltage() const { return bus_voltages.back(); }
  Complex load_bus_current() const;
};

/// Solves bus voltages and branch currents for the internal EMFs of
/// `generators`. De-energized buses report zero voltage.
NetworkState solve_network(const PlantConfig &cfg, std::span<const GeneratorState> generators,
                           const LoadBank &loads, const Topology &topology);

/// Current mismatch magnitude at every bus.
std::vector<double> kcl_residuals(const PlantConfig &cfg, std::span<const GeneratorState> generators,
                                  const LoadBank &loads, const Topology &topology,
                                  const NetworkState &state);

} // namespace gridloop::plant

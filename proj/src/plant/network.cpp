/* SPDX-License-Identifier: Apache-2.0 */

#include <gridloop/plant/network.hpp>

#include <numeric>

#include <Eigen/Dense>

namespace gridloop::plant {

Topology Topology::all_closed(const PlantConfig &cfg) {
  return {std::vector<bool>(cfg.sets.size(), true),
          std::vector<bool>(cfg.loads.elements.size(), true)};
}

Topology Topology::all_open(const PlantConfig &cfg) {
  return {std::vector<bool>(cfg.sets.size(), false),
          std::vector<bool>(cfg.loads.elements.size(), false)};
}

Complex NetworkState::load_bus_current() const {
  return std::accumulate(load_currents.begin(), load_currents.end(), Complex{});
}

namespace {

struct DisjointSet {
  std::vector<std::size_t> parent;
  explicit DisjointSet(std::size_t n) : parent(n) { std::iota(parent.begin(), parent.end(), 0); }
  std::size_t find(std::size_t i) {
    while (parent[i] != i)
      i = parent[i] = parent[parent[i]];
    return i;
  }
  void join(std::size_t a, std::size_t b) { parent[find(a)] = find(b); }
};

void check_sizes(const PlantConfig &cfg, std::span<const GeneratorState> generators,
                 const LoadBank &loads, const Topology &topology) {
  if (generators.size() != cfg.sets.size() || topology.breaker_closed.size() != cfg.sets.size() ||
      topology.relay_closed.size() != loads.elements.size())
    throw DomainError("network topology does not match the plant configuration");
}

} // namespace

NetworkState solve_network(const PlantConfig &cfg, std::span<const GeneratorState> generators,
                           const LoadBank &loads, const Topology &topology) {
  check_sizes(cfg, generators, loads, topology);
  const std::size_t n_sets = cfg.sets.size();
  const std::size_t n_bus = n_sets + 1;
  const std::size_t load_bus = n_sets;

  NetworkState out;
  out.bus_voltages.assign(n_bus, Complex{});
  out.branch_currents.assign(n_sets, Complex{});
  out.stator_currents.assign(n_sets, Complex{});
  out.load_currents.assign(loads.elements.size(), Complex{});

  DisjointSet islands(n_bus);
  for (std::size_t i = 0; i < n_sets; ++i)
    islands.join(i, load_bus);

  std::vector<bool> energized_root(n_bus, false);
  for (std::size_t i = 0; i < n_sets; ++i)
    if (topology.breaker_closed[i])
      energized_root[islands.find(i)] = true;

  for (std::size_t root = 0; root < n_bus; ++root) {
    if (islands.find(root) != root || !energized_root[root])
      continue;
    std::vector<std::size_t> buses;
    std::vector<int> local(n_bus, -1);
    for (std::size_t b = 0; b < n_bus; ++b)
      if (islands.find(b) == root) {
        local[b] = static_cast<int>(buses.size());
        buses.push_back(b);
      }

    const auto m = static_cast<Eigen::Index>(buses.size());
    Eigen::MatrixXcd y = Eigen::MatrixXcd::Zero(m, m);
    Eigen::VectorXcd inj = Eigen::VectorXcd::Zero(m);
    for (std::size_t i = 0; i < n_sets; ++i) {
      if (local[i] < 0)
        continue;
      const Eigen::Index a = local[i], b = local[load_bus];
      const Complex yl = 1.0 / cfg.sets[i].line_impedance;
      y(a, a) += yl;
      y(b, b) += yl;
      y(a, b) -= yl;
      y(b, a) -= yl;
      if (topology.breaker_closed[i]) {
        const Complex ys = 1.0 / cfg.sets[i].generator.synchronous_impedance();
        y(a, a) += ys;
        inj(a) += generators[i].emf_phasor() * ys;
      }
    }
    if (local[load_bus] >= 0)
      for (std::size_t j = 0; j < loads.elements.size(); ++j)
        if (topology.relay_closed[j])
          y(local[load_bus], local[load_bus]) += 1.0 / loads.elements[j].impedance;

    Eigen::FullPivLU<Eigen::MatrixXcd> lu(y);
    if (!lu.isInvertible())
      throw NetworkSingularity(buses);
    const Eigen::VectorXcd v = lu.solve(inj);
    for (std::size_t k = 0; k < buses.size(); ++k)
      out.bus_voltages[buses[k]] = v(static_cast<Eigen::Index>(k));
  }

  const Complex v_load = out.bus_voltages[load_bus];
  for (std::size_t i = 0; i < n_sets; ++i) {
    out.branch_currents[i] = (out.bus_voltages[i] - v_load) / cfg.sets[i].line_impedance;
    if (topology.breaker_closed[i])
      out.stator_currents[i] = (generators[i].emf_phasor() - out.bus_voltages[i]) /
                               cfg.sets[i].generator.synchronous_impedance();
  }
  for (std::size_t j = 0; j < loads.elements.size(); ++j)
    if (topology.relay_closed[j])
      out.load_currents[j] = v_load / loads.elements[j].impedance;
  return out;
}

std::vector<double> kcl_residuals(const PlantConfig &cfg, std::span<const GeneratorState> generators,
                                  const LoadBank &loads, const Topology &topology,
                                  const NetworkState &state) {
  check_sizes(cfg, generators, loads, topology);
  const std::size_t n_sets = cfg.sets.size();
  std::vector<Complex> mismatch(n_sets + 1);
  for (std::size_t i = 0; i < n_sets; ++i) {
    const Complex line = (state.bus_voltages[i] - state.bus_voltages[n_sets]) /
                         cfg.sets[i].line_impedance;
    Complex stator{};
    if (topology.breaker_closed[i])
      stator = (generators[i].emf_phasor() - state.bus_voltages[i]) /
               cfg.sets[i].generator.synchronous_impedance();
    mismatch[i] += stator - line;
    mismatch[n_sets] += line;
  }
  for (std::size_t j = 0; j < loads.elements.size(); ++j)
    if (topology.relay_closed[j])
      mismatch[n_sets] -= state.bus_voltages[n_sets] / loads.elements[j].impedance;

  std::vector<double> out(mismatch.size());
  for (std::size_t k = 0; k < mismatch.size(); ++k)
    out[k] = std::abs(mismatch[k]);
  return out;
}

} // namespace gridloop::plant

/* SPDX-License-Identifier: Apache-2.0 */

#include <gridloop/plant/plant.hpp>

#include <algorithm>
#include <cmath>

#include <Eigen/Dense>
#include <fmt/format.h>

namespace gridloop::plant {

double EnergyLedger::relative_imbalance() const {
  if (mechanical_in == 0.0)
    return 0.0;
  return (mechanical_in - load - losses - (kinetic - kinetic_initial)) / mechanical_in;
}

struct Plant::Inputs {
  std::vector<double> armature_voltage;
  std::vector<double> field_voltage; // generator field
  std::vector<double> flux;          // prime-mover k*phi
};

struct Plant::Rates {
  double ia, w, delta, emf;
};

Plant::Plant(PlantConfig config, std::vector<SetState> sets, Topology topology)
    : config_(std::move(config)), sets_(std::move(sets)), topology_(std::move(topology)) {
  if (sets_.size() != config_.sets.size())
    throw DomainError("plant state does not match the configured machine sets");
  terminal_phase_.assign(sets_.size(), 0.0);
  Actuation u;
  for (std::size_t i = 0; i < sets_.size(); ++i) {
    u.armature_duty.push_back(sets_[i].prime_mover.armature_voltage /
                              config_.rails.armature_voltage);
    u.excitation_duty.push_back(sets_[i].generator.field_voltage /
                                config_.rails.excitation_voltage);
  }
  const auto in = inputs(u);
  network_ = solve(sets_);
  settle(in);
  load_phase_ = std::arg(network_.load_bus_voltage());
  for (std::size_t i = 0; i < sets_.size(); ++i)
    terminal_phase_[i] = std::arg(sets_[i].generator.terminal_voltage);
  if (std::abs(network_.load_bus_voltage()) > 1e-6 * config_.nominal_voltage)
    network_.frequency = config_.nominal_frequency();
  energy_.kinetic_initial = energy_.kinetic = kinetic();
}

Plant::Inputs Plant::inputs(const Actuation &u) const {
  Inputs in;
  for (std::size_t i = 0; i < sets_.size(); ++i) {
    const auto &set = config_.sets[i];
    in.armature_voltage.push_back(
        buck_output({u.armature_duty.at(i), config_.rails.armature_voltage, 0.0}));
    in.field_voltage.push_back(
        buck_output({u.excitation_duty.at(i), config_.rails.excitation_voltage, 0.0}));
    in.flux.push_back(flux_constant(set.prime_mover, set.generator.rated_speed(),
                                    config_.rails.excitation_voltage));
  }
  return in;
}

std::vector<GeneratorState> Plant::generator_states() const {
  std::vector<GeneratorState> out;
  out.reserve(sets_.size());
  for (const auto &s : sets_)
    out.push_back(s.generator);
  return out;
}

NetworkState Plant::solve(const std::vector<SetState> &x) const {
  std::vector<GeneratorState> gens;
  gens.reserve(x.size());
  for (const auto &s : x)
    gens.push_back(s.generator);
  return solve_network(config_, gens, config_.loads, topology_);
}

std::vector<Plant::Rates> Plant::rates(const std::vector<SetState> &x, const Inputs &in,
                                       const NetworkState &net) const {
  std::vector<Rates> out(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    const auto &set = config_.sets[i];
    const auto &gen = set.generator;
    const auto &g = x[i].generator;
    const double ia = x[i].prime_mover.armature_current;
    const double w = g.rotor_speed;
    double airgap = 0.0;
    if (topology_.breaker_closed[i])
      airgap = (g.emf_phasor() * std::conj(net.stator_currents[i])).real();
    const double te = electrical_torque(airgap, w);
    out[i].ia = armature_current_rate(set.prime_mover, in.flux[i], in.armature_voltage[i], ia, w);
    out[i].w = (in.flux[i] * ia - te - set.damping * w) / set.inertia;
    out[i].delta = gen.pole_pairs * (w - gen.rated_speed());
    out[i].emf = emf_rate(gen, in.field_voltage[i], w, g.internal_emf);
  }
  return out;
}

namespace {

struct Powers {
  double mech = 0.0, load = 0.0, losses = 0.0;
};

} // namespace

void Plant::step(const Actuation &u, double dt) {
  if (!(dt > 0.0))
    throw DomainError("integration step must be positive");
  const Inputs in = inputs(u);

  auto powers = [&](const std::vector<SetState> &x, const NetworkState &net) {
    Powers p;
    for (std::size_t i = 0; i < x.size(); ++i) {
      const auto &set = config_.sets[i];
      const double w = x[i].generator.rotor_speed;
      p.mech += in.flux[i] * x[i].prime_mover.armature_current * w;
      p.losses += set.damping * w * w;
      p.losses += std::norm(net.branch_currents[i]) * set.line_impedance.real();
      p.losses += std::norm(net.stator_currents[i]) * set.generator.stator_resistance;
    }
    for (std::size_t j = 0; j < net.load_currents.size(); ++j)
      p.load += std::norm(net.load_currents[j]) * config_.loads.elements[j].impedance.real();
    return p;
  };

  const auto x0 = sets_;
  const auto p0 = powers(x0, network_);
  const auto k0 = rates(x0, in, network_);

  auto advance = [&](const std::vector<Rates> &a, const std::vector<Rates> *b) {
    auto x = x0;
    for (std::size_t i = 0; i < x.size(); ++i) {
      const Rates r = b ? Rates{0.5 * (a[i].ia + (*b)[i].ia), 0.5 * (a[i].w + (*b)[i].w),
                                0.5 * (a[i].delta + (*b)[i].delta),
                                0.5 * (a[i].emf + (*b)[i].emf)}
                        : a[i];
      auto &s = x[i];
      s.prime_mover.armature_current += dt * r.ia;
      s.generator.rotor_speed = std::max(0.0, s.generator.rotor_speed + dt * r.w);
      s.generator.rotor_angle += dt * r.delta;
      s.generator.internal_emf = std::max(0.0, s.generator.internal_emf + dt * r.emf);
      require_finite("armature_current", s.prime_mover.armature_current);
      require_finite("rotor_speed", s.generator.rotor_speed);
      require_finite("rotor_angle", s.generator.rotor_angle);
      require_finite("internal_emf", s.generator.internal_emf);
    }
    return x;
  };

  const auto x1 = advance(k0, nullptr);
  const auto k1 = rates(x1, in, solve(x1));
  sets_ = advance(k0, &k1);
  network_ = solve(sets_);
  settle(in);
  track_phases(dt);
  time_ += dt;

  const auto p1 = powers(sets_, network_);
  energy_.mechanical_in += 0.5 * dt * (p0.mech + p1.mech);
  energy_.load += 0.5 * dt * (p0.load + p1.load);
  energy_.losses += 0.5 * dt * (p0.losses + p1.losses);
  energy_.kinetic = kinetic();
}

void Plant::settle(const Inputs &in) {
  for (std::size_t i = 0; i < sets_.size(); ++i) {
    auto &g = sets_[i].generator;
    auto &pm = sets_[i].prime_mover;
    const auto &set = config_.sets[i];
    g.field_voltage = in.field_voltage[i];
    if (topology_.breaker_closed[i]) {
      g.terminal_voltage = network_.bus_voltages[i];
      g.stator_current = network_.stator_currents[i];
    } else {
      g.terminal_voltage = g.emf_phasor();
      g.stator_current = {};
    }
    pm.armature_voltage = in.armature_voltage[i];
    pm.field_current = config_.rails.excitation_voltage / set.prime_mover.field_resistance();
    pm.shaft_speed = g.rotor_speed;
    pm.shaft_torque = in.flux[i] * pm.armature_current;
    pm.shaft_power = pm.shaft_torque * pm.shaft_speed;
  }
  const auto res = kcl_residuals(config_, generator_states(), config_.loads, topology_, network_);
  for (double r : res)
    max_kcl_ = std::max(max_kcl_, r);
}

void Plant::track_phases(double dt) {
  const double floor = 1e-6 * config_.nominal_voltage;
  const Complex vl = network_.load_bus_voltage();
  network_.frequency = 0.0;
  if (std::abs(vl) > floor) {
    const double advance = wrap_radians(std::arg(vl) - load_phase_);
    load_phase_ += advance;
    network_.frequency = config_.nominal_frequency() + advance / (kTwoPi * dt);
  }
  for (std::size_t i = 0; i < sets_.size(); ++i) {
    const Complex vt = sets_[i].generator.terminal_voltage;
    if (std::abs(vt) > floor)
      terminal_phase_[i] += wrap_radians(std::arg(vt) - terminal_phase_[i]);
  }
}

double Plant::kinetic() const {
  double ke = 0.0;
  for (std::size_t i = 0; i < sets_.size(); ++i) {
    const double w = sets_[i].generator.rotor_speed;
    ke += 0.5 * config_.sets[i].inertia * w * w;
  }
  return ke;
}

void Plant::set_topology(Topology topology) {
  topology_ = std::move(topology);
  Actuation u;
  for (std::size_t i = 0; i < sets_.size(); ++i) {
    u.armature_duty.push_back(sets_[i].prime_mover.armature_voltage /
                              config_.rails.armature_voltage);
    u.excitation_duty.push_back(sets_[i].generator.field_voltage /
                                config_.rails.excitation_voltage);
  }
  const double frequency = network_.frequency;
  network_ = solve(sets_);
  settle(inputs(u));
  if (std::abs(network_.load_bus_voltage()) > 1e-6 * config_.nominal_voltage)
    network_.frequency = frequency > 0.0 ? frequency : config_.nominal_frequency();
}

void Plant::set_load_impedance(std::size_t element, Complex impedance) {
  config_.loads.elements.at(element).impedance = impedance;
  set_topology(topology_);
}

// ---------------------------------------------------------------------------

Equilibrium solve_equilibrium(const PlantConfig &cfg, const EquilibriumRequest &request) {
  const std::size_t n = cfg.sets.size();
  if (request.terminal_voltage.size() != n || request.speed_rpm.size() != n ||
      request.phase_offset_deg.size() != n)
    throw DomainError("equilibrium request does not match the machine sets");

  std::vector<std::size_t> online;
  for (std::size_t i = 0; i < n; ++i)
    if (request.topology.breaker_closed[i])
      online.push_back(i);

  std::vector<GeneratorState> gens(n);
  for (std::size_t i = 0; i < n; ++i)
    gens[i].internal_emf = request.terminal_voltage[i];

  // Unknowns: EMF of every connected set, angle of every connected set but the first.
  const std::size_t m = online.empty() ? 0 : 2 * online.size() - 1;
  auto unpack = [&](const Eigen::VectorXd &x) {
    for (std::size_t k = 0; k < online.size(); ++k) {
      gens[online[k]].internal_emf = x(static_cast<Eigen::Index>(k));
      gens[online[k]].rotor_angle =
          k == 0 ? 0.0 : x(static_cast<Eigen::Index>(online.size() + k - 1));
    }
  };
  auto residual = [&](const Eigen::VectorXd &x) {
    unpack(x);
    const auto net = solve_network(cfg, gens, cfg.loads, request.topology);
    Eigen::VectorXd r(static_cast<Eigen::Index>(m));
    std::vector<double> p(online.size());
    for (std::size_t k = 0; k < online.size(); ++k) {
      const std::size_t i = online[k];
      r(static_cast<Eigen::Index>(k)) =
          std::abs(net.bus_voltages[i]) - request.terminal_voltage[i];
      p[k] = (gens[i].emf_phasor() * std::conj(net.stator_currents[i])).real();
    }
    const double r0 = cfg.sets[online[0]].generator.rated_power;
    for (std::size_t k = 1; k < online.size(); ++k) {
      const double rk = cfg.sets[online[k]].generator.rated_power;
      r(static_cast<Eigen::Index>(online.size() + k - 1)) = (p[k] * r0 - p[0] * rk) / r0;
    }
    return r;
  };

  if (m > 0) {
    Eigen::VectorXd x = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(m));
    for (std::size_t k = 0; k < online.size(); ++k)
      x(static_cast<Eigen::Index>(k)) = request.terminal_voltage[online[k]];
    bool converged = false;
    for (int iter = 0; iter < 60 && !converged; ++iter) {
      const Eigen::VectorXd r = residual(x);
      if (r.cwiseAbs().maxCoeff() < 1e-9 * cfg.nominal_voltage) {
        converged = true;
        break;
      }
      Eigen::MatrixXd jac(r.size(), r.size());
      for (Eigen::Index c = 0; c < x.size(); ++c) {
        const double h = 1e-7 * std::max(1.0, std::abs(x(c)));
        Eigen::VectorXd xp = x;
        xp(c) += h;
        jac.col(c) = (residual(xp) - r) / h;
      }
      x -= jac.fullPivLu().solve(r);
    }
    if (!converged)
      throw DomainError("no steady operating point for the requested setpoints");
    unpack(x);
  }

  const auto net = solve_network(cfg, gens, cfg.loads, request.topology);
  const double load_angle = std::arg(net.load_bus_voltage());

  Equilibrium eq;
  eq.sets.resize(n);
  eq.actuation.armature_duty.resize(n);
  eq.actuation.excitation_duty.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    const auto &set = cfg.sets[i];
    const bool closed = request.topology.breaker_closed[i];
    auto &g = eq.sets[i].generator;
    auto &pm = eq.sets[i].prime_mover;
    g = gens[i];
    g.rotor_speed = closed ? set.generator.rated_speed() : rpm_to_rad_per_s(request.speed_rpm[i]);
    if (!closed)
      g.rotor_angle = load_angle + deg_to_rad(request.phase_offset_deg[i]);
    const auto el = machine_electrical(set.generator, g.emf_phasor(),
                                       closed ? std::optional{net.bus_voltages[i]} : std::nullopt);
    g.terminal_voltage = el.terminal_voltage;
    g.stator_current = el.stator_current;

    const double w = g.rotor_speed;
    const double te = electrical_torque(el.airgap_power, w);
    const double flux =
        flux_constant(set.prime_mover, set.generator.rated_speed(), cfg.rails.excitation_voltage);
    pm.armature_current = (te + set.damping * w) / flux;
    pm.armature_voltage = flux * w + set.prime_mover.armature_resistance * pm.armature_current;
    pm.field_current = cfg.rails.excitation_voltage / set.prime_mover.field_resistance();
    pm.shaft_speed = w;
    pm.shaft_torque = flux * pm.armature_current;
    pm.shaft_power = pm.shaft_torque * w;

    g.field_voltage = w > 0.0 ? g.internal_emf * set.generator.rated_speed() /
                                    (set.generator.emf_per_field_volt * w)
                              : 0.0;
    const double arm = pm.armature_voltage / cfg.rails.armature_voltage;
    const double exc = g.field_voltage / cfg.rails.excitation_voltage;
    if (arm < 0.0 || arm > 1.0 || exc < 0.0 || exc > 1.0)
      throw DomainError(fmt::format("{} operating point needs duties outside [0, 1] "
                                    "(armature {:.3f}, excitation {:.3f})",
                                    set.id, arm, exc));
    eq.actuation.armature_duty[i] = arm;
    eq.actuation.excitation_duty[i] = exc;
  }
  return eq;
}

} // namespace gridloop::plant

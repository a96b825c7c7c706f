/* SPDX-License-Identifier: Apache-2.0 */

#include <gridloop/controller/config.hpp>

#include <fmt/format.h>

#include <algorithm>

namespace gridloop::controller {

ControllerConfig ControllerConfig::for_plant(const plant::PlantConfig &plant) {
  ControllerConfig cfg;
  cfg.nominal_voltage = plant.nominal_voltage;
  cfg.branch_current_limit = plant.load_switch_current_limit;
  cfg.nominal_frequency = plant.nominal_frequency();
  if (!plant.sets.empty())
    cfg.speed_setpoint_rpm = plant.sets.front().generator.rated_speed_rpm;
  for (const auto &s : plant.sets)
    cfg.generators.push_back({s.id, s.breaker_id, s.generator.rated_power,
                              s.generator.rated_speed_rpm, s.generator.pole_pairs});
  for (const auto &e : plant.loads.elements)
    cfg.shedding_order.push_back({e.id, e.relay_id, e.priority});
  std::ranges::sort(cfg.shedding_order, {}, &ShedTarget::priority);
  return cfg;
}

int ControllerConfig::generator_index(const std::string &id) const {
  for (std::size_t i = 0; i < generators.size(); ++i)
    if (generators[i].id == id)
      return static_cast<int>(i);
  return -1;
}

std::vector<std::string> ControllerConfig::problems(const plant::PlantConfig &plant) const {
  std::vector<std::string> out;
  auto positive = [&](const char *name, double v) {
    if (!(v > 0.0))
      out.push_back(fmt::format("controller.{} must be positive (got {})", name, v));
  };
  positive("nominal_voltage", nominal_voltage);
  positive("voltage_tolerance", voltage_tolerance);
  positive("branch_current_limit", branch_current_limit);
  positive("speed_setpoint_rpm", speed_setpoint_rpm);
  positive("frequency_band", frequency_band);
  positive("control_period", control_period);
  positive("sync.voltage_tolerance", sync.voltage_tolerance);
  positive("sync.frequency_tolerance", sync.frequency_tolerance);
  positive("sync.phase_tolerance", sync.phase_tolerance);
  if (voltage_permissible < voltage_tolerance)
    out.push_back("controller.voltage_permissible must not be below voltage_tolerance");
  if (frequency_permissible < frequency_band)
    out.push_back("controller.frequency_permissible must not be below frequency_band");
  if (permissible_band < 1.0)
    out.push_back("controller.permissible_band must be at least 1");
  if (!(switch_retry_time > 0.0))
    out.push_back("controller.switch_retry_time must be positive");
  if (trip_confirmation_periods < 1)
    out.push_back("controller.trip_confirmation_periods must be at least 1");
  if (sync.confirmation_periods < 1)
    out.push_back("controller.sync.confirmation_periods must be at least 1");
  if (speed_droop < 0.0)
    out.push_back("controller.speed_droop must not be negative");
  if (sharing_time_constant < 0.0)
    out.push_back("controller.sharing_time_constant must not be negative");
  for (const auto *g : {&excitation, &speed})
    if (g->kp < 0.0 || g->ki < 0.0 || g->bias < 0.0 || g->bias > 1.0)
      out.push_back("controller gains must be non-negative with bias in [0, 1]");
  if (generators.size() != plant.sets.size())
    out.push_back(fmt::format("controller has {} generators, plant has {}", generators.size(),
                              plant.sets.size()));
  for (const auto &t : shedding_order)
    if (!plant.loads.find(t.load_id))
      out.push_back(fmt::format("shedding order names unknown load {}", t.load_id));
  return out;
}

} // namespace gridloop::controller

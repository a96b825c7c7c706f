/* SPDX-License-Identifier: Apache-2.0 */

#include <gridloop/common.hpp>

#include <cmath>

#include <fmt/format.h>

namespace gridloop {

double wrap_degrees(double deg) {
  double w = std::fmod(deg, 360.0);
  if (w <= -180.0)
    w += 360.0;
  else if (w > 180.0)
    w -= 360.0;
  return w;
}

double wrap_radians(double rad) {
  double w = std::fmod(rad, kTwoPi);
  if (w <= -std::numbers::pi)
    w += kTwoPi;
  else if (w > std::numbers::pi)
    w -= kTwoPi;
  return w;
}

IntegrationDivergence::IntegrationDivergence(std::string quantity, double value)
    : Error(fmt::format("integration diverged: {} = {}", quantity, value)),
      quantity_(std::move(quantity)) {}

static std::string island_message(const std::vector<std::size_t> &buses) {
  return fmt::format("singular admittance matrix on energized island {{{}}}",
                     fmt::join(buses, ", "));
}

NetworkSingularity::NetworkSingularity(std::vector<std::size_t> island_buses)
    : Error(island_message(island_buses)), island_(std::move(island_buses)) {}

EncodingRangeError::EncodingRangeError(std::string register_name, double value)
    : Error(fmt::format("value {} out of range for register {}", value,
                        register_name)),
      register_(std::move(register_name)) {}

static std::string join_problems(const std::vector<std::string> &problems) {
  return fmt::format("validation failed: {}", fmt::join(problems, "; "));
}

ValidationError::ValidationError(std::vector<std::string> problems)
    : Error(join_problems(problems)), problems_(std::move(problems)) {}

} // namespace gridloop

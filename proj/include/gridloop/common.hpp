/* Common numeric types and error classes.
 *
 * SPDX-License-Identifier: Apache-2.0
 */

#pragma once

#include <complex>
#include <numbers>
#include <stdexcept>
#include <string>
#include <vector>

namespace gridloop {

using Complex = std::complex<double>;

inline constexpr double kTwoPi = 2.0 * std::numbers::pi;

inline double rpm_to_rad_per_s(double rpm) { return rpm * kTwoPi / 60.0; }
inline double rad_per_s_to_rpm(double w) { return w * 60.0 / kTwoPi; }
inline double deg_to_rad(double deg) { return deg * std::numbers::pi / 180.0; }
inline double rad_to_deg(double rad) { return rad * 180.0 / std::numbers::pi; }

/// Wraps an angle in degrees into (-180, 180].
double wrap_degrees(double deg);
/// Wraps an angle in radians into (-pi, pi].
double wrap_radians(double rad);

class Error : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// A model state became non-finite during integration.
class IntegrationDivergence : public Error {
public:
  IntegrationDivergence(std::string quantity, double value);
  const std::string &quantity() const noexcept { return quantity_; }

private:
  std::string quantity_;
};

/// The nodal admittance matrix of an energized island could not be factored.
class NetworkSingularity : public Error {
public:
  explicit NetworkSingularity(std::vector<std::size_t> island_buses);
  const std::vector<std::size_t> &island() const noexcept { return island_; }

private:
  std::vector<std::size_t> island_;
};

/// An argument is outside the domain of an operation.
class DomainError : public Error {
public:
  using Error::Error;
};

/// Electrical power requested at a shaft speed of zero.
class DegenerateSpeed : public Error {
public:
  using Error::Error;
};

/// A meter reading does not fit in its register.
class EncodingRangeError : public Error {
public:
  EncodingRangeError(std::string register_name, double value);
  const std::string &register_name() const noexcept { return register_; }

private:
  std::string register_;
};

/// A scenario or configuration failed validation. Carries every problem found.
class ValidationError : public Error {
public:
  explicit ValidationError(std::vector<std::string> problems);
  const std::vector<std::string> &problems() const noexcept { return problems_; }

private:
  std::vector<std::string> problems_;
};

} // namespace gridloop

/* Independent reference calculations used only by the tests. Nothing here
 * calls into the library's network or machine code.
 *
 * SPDX-License-Identifier: Apache-2.0
 */

#pragma once

#include <cmath>
#include <complex>
#include <cstdint>
#include <stdexcept>
#include <utility>
#include <vector>

namespace oracle {

using cplx = std::complex<double>;

/// Gaussian elimination with partial pivoting; a is n x n row-major.
template <typename T> std::vector<T> solve_dense(std::vector<T> a, std::vector<T> b) {
  const std::size_t n = b.size();
  for (std::size_t k = 0; k < n; ++k) {
    std::size_t p = k;
    for (std::size_t r = k + 1; r < n; ++r)
      if (std::abs(a[r * n + k]) > std::abs(a[p * n + k]))
        p = r;
    if (std::abs(a[p * n + k]) < 1e-14)
      throw std::runtime_error("singular system");
    if (p != k) {
      for (std::size_t c = 0; c < n; ++c)
        std::swap(a[k * n + c], a[p * n + c]);
      std::swap(b[k], b[p]);
    }
    for (std::size_t r = k + 1; r < n; ++r) {
      T f = a[r * n + k] / a[k * n + k];
      for (std::size_t c = k; c < n; ++c)
        a[r * n + c] -= f * a[k * n + c];
      b[r] -= f * b[k];
    }
  }
  std::vector<T> x(n);
  for (std::size_t k = n; k-- > 0;) {
    T s = b[k];
    for (std::size_t c = k + 1; c < n; ++c)
      s -= a[k * n + c] * x[c];
    x[k] = s / a[k * n + k];
  }
  return x;
}

/// Radial microgrid: sources (EMF behind series impedance, already including
/// the line) feeding one load bus with shunt impedance loads.
struct Radial {
  std::vector<cplx> emf;         // per connected source
  std::vector<cplx> series;      // source + line impedance
  std::vector<cplx> loads;       // impedances of connected loads
};

/// Load-bus voltage by Millman's theorem.
inline cplx millman(const Radial &g) {
  cplx num = 0.0, den = 0.0;
  for (std::size_t i = 0; i < g.emf.size(); ++i) {
    num += g.emf[i] / g.series[i];
    den += 1.0 / g.series[i];
  }
  for (auto z : g.loads)
    den += 1.0 / z;
  if (std::abs(den) == 0.0)
    return 0.0;
  return num / den;
}

inline double load_current(const Radial &g) {
  cplx v = millman(g);
  cplx i = 0.0;
  for (auto z : g.loads)
    i += v / z;
  return std::abs(i);
}

/// Steady-state power flow for two generator buses and one load bus joined
/// by lines. Bus 0 is the slack (|V|, angle 0); bus 1 is PV (P, |V|); the
/// load bus carries constant-impedance loads. Newton iteration on
/// (theta1, |V_L|, theta_L) with a finite-difference Jacobian.
struct PowerFlowCase {
  cplx line0, line1;      // gen bus -> load bus
  cplx load;              // total load impedance at the load bus
  double v0 = 220.0, v1 = 220.0;
  double p1 = 0.0;        // W injected at bus 1
};

struct PowerFlowResult {
  cplx v0, v1, vl;
  cplx s0, s1;            // complex power injected by each generator bus
  cplx i0, i1;            // line currents gen -> load
  int iterations = 0;
};

inline PowerFlowResult power_flow(const PowerFlowCase &c) {
  auto evaluate = [&](const std::vector<double> &x, PowerFlowResult *out) {
    cplx v0 = std::polar(c.v0, 0.0);
    cplx v1 = std::polar(c.v1, x[0]);
    cplx vl = std::polar(x[1], x[2]);
    cplx i0 = (v0 - vl) / c.line0;
    cplx i1 = (v1 - vl) / c.line1;
    cplx s1 = v1 * std::conj(i1);
    cplx il = vl / c.load;
    cplx mismatch = i0 + i1 - il; // KCL at the load bus
    if (out) {
      *out = {v0, v1, vl, v0 * std::conj(i0), s1, i0, i1, 0};
    }
    return std::vector<double>{s1.real() - c.p1, mismatch.real(), mismatch.imag()};
  };
  std::vector<double> x{0.0, c.v0, 0.0};
  int it = 0;
  for (; it < 50; ++it) {
    auto f = evaluate(x, nullptr);
    double norm = std::abs(f[0]) / 1000.0 + std::abs(f[1]) + std::abs(f[2]);
    if (norm < 1e-10)
      break;
    std::vector<double> jac(9);
    for (int k = 0; k < 3; ++k) {
      auto xp = x;
      double h = 1e-7 * std::max(1.0, std::abs(x[k]));
      xp[k] += h;
      auto fp = evaluate(xp, nullptr);
      for (int r = 0; r < 3; ++r)
        jac[r * 3 + k] = (fp[r] - f[r]) / h;
    }
    for (auto &v : f)
      v = -v;
    auto dx = solve_dense(jac, f);
    for (int k = 0; k < 3; ++k)
      x[k] += dx[k];
  }
  PowerFlowResult r;
  evaluate(x, &r);
  r.iterations = it;
  return r;
}

/// CRC-16/CCITT-FALSE, bitwise.
inline std::uint16_t crc16_bitwise(const std::uint8_t *p, std::size_t n) {
  std::uint16_t crc = 0xFFFF;
  for (std::size_t k = 0; k < n; ++k) {
    crc ^= static_cast<std::uint16_t>(p[k]) << 8;
    for (int b = 0; b < 8; ++b)
      crc = (crc & 0x8000) ? static_cast<std::uint16_t>((crc << 1) ^ 0x1021)
                           : static_cast<std::uint16_t>(crc << 1);
  }
  return crc;
}

} // namespace oracle

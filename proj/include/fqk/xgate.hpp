#pragma once

// Floquet-qubit X gate: constant Rabi tone plus a flat-top Z tone near the
// Floquet-qubit resonance. Populations are measured in the single-tone
// Floquet basis.

#include <vector>

#include "json.hpp"

#include "fqk/floquet.hpp"

namespace fqk {

struct XGateParams {
  double omega0 = angular(5.02);
  double eps_d1 = angular(0.21);
  double omega_d1 = angular(5.0);
  double eps_d2 = angular(0.004);
  double omega_d2 = 0.0;
  double ramp_time = 20.0;  // ns, each edge of the Z-tone envelope
  // Plateau duration; negative means pi / g0 - ramp_time, which gives a pulse
  // area of pi for a resonant two-level splitting g0 (each tanh edge
  // contributes half its duration).
  double hold_time = -1.0;
  double g0 = 0.0;  // resonant splitting used for the automatic hold, rad/ns
  RampShape shape = RampShape::tanh;
  int output_every_periods = 5;  // output stride in drive periods 2 pi / omega_d1
};

struct XGateResult {
  std::vector<double> times;
  std::vector<double> p0, p1;
  std::vector<double> envelope_d2;
  double hold_time = 0.0;
  double gate_time = 0.0;
  double transfer = 0.0;  // p1 at the end
};

XGateResult simulate_xgate(const XGateParams& params, const IntegratorConfig& cfg = {});

nlohmann::json xgate_json(const XGateParams& params, const XGateResult& r);

}  // namespace fqk

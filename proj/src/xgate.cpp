#include "fqk/xgate.hpp"

#include <cmath>

namespace fqk {

XGateResult simulate_xgate(const XGateParams& p, const IntegratorConfig& cfg) {
  if (!(p.omega_d2 > 0.0)) throw std::invalid_argument("simulate_xgate: omega_d2 must be positive");
  if (p.output_every_periods < 1) throw std::invalid_argument("simulate_xgate: output stride < 1");
  XGateResult out;
  out.hold_time = p.hold_time;
  if (out.hold_time < 0.0) {
    if (!(p.g0 > 0.0)) throw std::invalid_argument("simulate_xgate: automatic hold needs g0 > 0");
    out.hold_time = kPi / p.g0 - p.ramp_time;
    if (out.hold_time < 0.0) throw std::invalid_argument("simulate_xgate: ramp too long for g0");
  }
  const Envelope env2 = Envelope::flat_top(p.eps_d2, p.ramp_time, out.hold_time, p.shape);
  out.gate_time = env2.end_time();

  const auto single = build_tls_driven(p.omega0, p.eps_d1, p.omega_d1, Envelope::constant(1.0));
  const auto modes = floquet_decompose(single, p.omega_d1);
  const DrivenHamiltonian h = single.with_tone({sigma_z(), env2, p.omega_d2, 0.0});

  // Outputs on whole drive periods, where the stored mode sample 0 is exact.
  const double period = modes.period;
  const long n_periods = static_cast<long>(std::ceil(out.gate_time / period - 1e-9));
  std::vector<double> times;
  for (long k = 0; k <= n_periods; k += p.output_every_periods) times.push_back(period * static_cast<double>(k));
  if (times.back() < period * static_cast<double>(n_periods)) times.push_back(period * static_cast<double>(n_periods));

  const auto states = evolve_state(h, modes.mode(0, 0), times, cfg);
  for (std::size_t k = 0; k < times.size(); ++k) {
    const auto pop = floquet_population(states[k], modes, times[k]);
    out.times.push_back(times[k]);
    out.p0.push_back(pop.p[0]);
    out.p1.push_back(pop.p[1]);
    out.envelope_d2.push_back(env2(times[k]));
  }
  out.transfer = out.p1.back();
  return out;
}

nlohmann::json xgate_json(const XGateParams& p, const XGateResult& r) {
  return {{"omega0_ghz", ordinary(p.omega0)},
          {"eps_d1_ghz", ordinary(p.eps_d1)},
          {"omega_d1_ghz", ordinary(p.omega_d1)},
          {"eps_d2_ghz", ordinary(p.eps_d2)},
          {"omega_d2_ghz", ordinary(p.omega_d2)},
          {"ramp_time_ns", p.ramp_time},
          {"ramp_shape", std::string(to_string(p.shape))},
          {"hold_time_ns", r.hold_time},
          {"gate_time_ns", r.gate_time},
          {"final_transfer", r.transfer}};
}

}  // namespace fqk

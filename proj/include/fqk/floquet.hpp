#pragma once

// Single-tone Floquet decomposition and the rotating-wave two-level oracle.

#include <iosfwd>
#include <optional>
#include <string_view>
#include <vector>

#include "json.hpp"

#include "fqk/propagator.hpp"

namespace fqk {

struct FloquetOptions {
  double t0 = 0.0;              // start of the diagonalization window, ns
  int samples_per_period = 64;  // modes stored at t0 + k T / samples, k < samples
  // Labels: mode n is the one with largest overlap with reference[n] at t0.
  // Empty means eigenvectors of the static part, each tagged by its dominant
  // basis index.
  std::vector<StateVector> reference;
  // > 0: ramp the drive amplitudes in this many stages, relabeling each
  // stage against the previous one (adiabatic continuation from zero drive).
  int continuation_steps = 0;
  IntegratorConfig integrator;
};

struct FloquetSolution {
  double omega = 0.0;   // drive angular frequency
  double period = 0.0;  // 2 pi / omega
  double t0 = 0.0;
  std::vector<double> quasienergies;  // labeled order, folded to [-omega/2, omega/2)
  std::vector<double> sample_times;
  std::vector<std::vector<StateVector>> modes;  // modes[k][n] at sample_times[k]
  bool degenerate = false;
  double periodicity_defect = 0.0;  // max_n 1 - |<phi_n(t0)|phi_n(t0 + T)>|
  double orthonormality_defect = 0.0;

  std::size_t size() const { return quasienergies.size(); }
  std::size_t nearest_sample(double t) const;
  const StateVector& mode(std::size_t n, std::size_t sample = 0) const { return modes[sample][n]; }
  const StateVector& mode_near(std::size_t n, double t) const { return modes[nearest_sample(t)][n]; }
};

/// Maps x into [-omega/2, omega/2).
double fold_quasienergy(double x, double omega);

/// |e_i - e_j| reduced modulo omega to [0, omega/2].
double quasienergy_gap(const FloquetSolution& s, std::size_t i, std::size_t j);

FloquetSolution floquet_decompose(const DrivenHamiltonian& h, double omega,
                                  const FloquetOptions& opts = {});

enum class RwaConvention {
  full_amplitude,  // e = +-sqrt((D/2)^2 + e_d^2)
  standard,        // e = +-sqrt((D/2)^2 + (e_d/2)^2), exact RWA of e_d cos(wt) sx
};
std::string_view to_string(RwaConvention c);

struct RwaTlsSolution {
  double detuning = 0.0;  // w0 - wd
  double omega_d = 0.0;
  double eps_d = 0.0;
  RwaConvention convention = RwaConvention::standard;
  double quasienergy[2] = {0.0, 0.0};  // + branch (phi_0), - branch (phi_1)

  double gap() const { return quasienergy[0] - quasienergy[1]; }
  /// e^{+i wd t/2} (c e^{-i wd t}, e_n - D/2) / norm, c = |e_d| or |e_d|/2.
  StateVector mode(int n, double t) const;
};

RwaTlsSolution rwa_tls(double omega0, double omega_d, double eps_d,
                       RwaConvention convention = RwaConvention::standard);

struct FloquetPopulation {
  std::vector<double> p;
  double total = 0.0;
  bool incomplete = false;  // total < 0.999
};

FloquetPopulation floquet_population(const StateVector& psi, const FloquetSolution& s, double t);

void write_floquet_csv(std::ostream& os, const FloquetSolution& s);
nlohmann::json floquet_json(const FloquetSolution& s);

}  // namespace fqk

#pragma once

#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "fqk/hamiltonian.hpp"

namespace fqk {

struct IntegratorConfig {
  enum class Method {
    magnus4,  // commutator-free 4th-order Magnus, uniform substeps
    rk45,     // adaptive Dormand-Prince on the Schroedinger equation
  };

  Method method = Method::magnus4;
  int substeps_per_fastest_period = 64;
  double tolerance = 1e-10;
  // Richardson step-doubling estimate; costs two extra half-resolution passes.
  bool estimate_error = true;
  int max_refinements = 4;

  void validate() const;
};

std::string_view to_string(IntegratorConfig::Method m);
IntegratorConfig::Method integrator_method_from_string(std::string_view name);

struct PropagatorResult {
  Operator U;
  double t0 = 0.0;
  double t1 = 0.0;
  long step_count = 0;
  double est_error = 0.0;
};

class ConvergenceError : public std::runtime_error {
 public:
  ConvergenceError(const std::string& what, double est_error, long steps)
      : std::runtime_error(what), est_error_(est_error), steps_(steps) {}
  double est_error() const { return est_error_; }
  long steps() const { return steps_; }

 private:
  double est_error_;
  long steps_;
};

/// min over tones of 2 pi / w and 2 pi / (static spectral range).
double fastest_period(const DrivenHamiltonian& h);

/// Time-ordered U(t1, t0) with i dU/dt = H(t) U.
PropagatorResult propagate(const DrivenHamiltonian& h, double t0, double t1,
                           const IntegratorConfig& cfg = {});

/// States at each requested time (times[0] may equal the start time 0).
std::vector<StateVector> evolve_state(const DrivenHamiltonian& h, const StateVector& psi0,
                                      std::span<const double> times,
                                      const IntegratorConfig& cfg = {}, double t_start = 0.0);

/// One commutator-free Magnus step applied in place: target <- U(t+dt, t) target.
void magnus4_step(const DrivenHamiltonian& h, double t, double dt, Matrix& target);

}  // namespace fqk

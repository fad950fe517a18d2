#pragma once

// Floquet-state preparation by drive ramp-up: adiabatic (start in a lab
// state) and instantaneous (start in the Floquet mode, switch on quickly).

#include <functional>
#include <iosfwd>
#include <stdexcept>
#include <string_view>
#include <vector>

#include "json.hpp"

#include "fqk/floquet.hpp"

namespace fqk {

enum class RampKind { adiabatic, instantaneous };
std::string_view to_string(RampKind k);
RampKind ramp_kind_from_string(std::string_view name);

struct InitSystem {
  double omega0 = angular(5.0);
  double eps_d1 = angular(0.21);
  RampShape shape = RampShape::tanh;
  double tanh_steepness = 4.0;
  IntegratorConfig integrator;

  double omega_d1(double tilt) const { return omega0 - tilt * eps_d1; }
  nlohmann::json to_json() const;
};

struct RampProtocol {
  RampKind kind = RampKind::adiabatic;
  double ramp_time = 100.0;  // ns
  double tilt = 0.1;         // Delta / eps_d1
  cplx alpha = 1.0, beta = 0.0;

  void validate() const;
};

/// |<alpha phi_0(T) + beta phi_1(T) | psi(T)>|^2 with T the ramp time and
/// phi_n(T) the plateau Floquet modes carried from t = 0 by the plateau propagator.
double prepare_and_score(const RampProtocol& p, const InitSystem& sys);

class BoundaryNotFound : public std::runtime_error {
 public:
  BoundaryNotFound(const std::string& what, double f_low, double f_high)
      : std::runtime_error(what), f_low_(f_low), f_high_(f_high) {}
  double f_low() const { return f_low_; }
  double f_high() const { return f_high_; }

 private:
  double f_low_, f_high_;
};

struct SearchRange {
  double low = 0.01;    // ns
  double high = 3000.0;
  double abs_resolution = 1.0;   // ns
  double rel_resolution = 0.01;  // stop when width <= min(abs, rel * T)
};

struct Boundary {
  double ramp_time = 0.0;  // the side that meets the target
  double other = 0.0;      // the side that misses it
  double f_low = 0.0, f_high = 0.0;  // fidelities at the range ends
  int evaluations = 0;
};

/// Bisection (geometric in T) for the point where f crosses `target`.
/// rising = true: smallest T with f >= target; else largest T with f >= target.
Boundary find_boundary(const std::function<double(double)>& f, double target, bool rising,
                       const SearchRange& range = {});

/// Adiabatic: smallest ramp time reaching `target`; instantaneous: largest.
Boundary min_ramp_time(RampKind kind, double tilt, double target, const InitSystem& sys,
                       const SearchRange& range = {});

struct ScalingPoint {
  double tilt = 0.0;
  double ramp_time = 0.0;
};

struct ScalingFit {
  double C = 0.0;            // slope fixed to -1: T = C / |tilt|
  double rms = 0.0;          // in log T
  double slope = 0.0;        // free log-log fit
  double intercept = 0.0;
  bool poor_fit = false;
};

ScalingFit fit_scaling_law(const std::vector<ScalingPoint>& points, double rms_threshold = 0.15);

struct FidelityMap {
  RampKind kind = RampKind::adiabatic;
  std::vector<double> tilts, ramp_times;
  std::vector<double> F;  // F[i * ramp_times.size() + j]

  double at(std::size_t i, std::size_t j) const { return F[i * ramp_times.size() + j]; }
};

FidelityMap fidelity_map(RampKind kind, const std::vector<double>& tilts,
                         const std::vector<double>& ramp_times, const InitSystem& sys,
                         std::size_t workers);

void write_fidelity_csv(std::ostream& os, const FidelityMap& m);
nlohmann::json scaling_json(const ScalingFit& fit, const std::vector<ScalingPoint>& points);

}  // namespace fqk

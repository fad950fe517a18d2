#pragma once

// Time-dependent Hamiltonians as a static operator plus cosine drive tones
// with envelopes. Units: time in ns, angular frequencies in rad/ns.

#include <string>
#include <string_view>
#include <vector>

#include "fqk/core.hpp"

namespace fqk {

enum class RampShape { linear, tanh };

std::string_view to_string(RampShape shape);
RampShape ramp_shape_from_string(std::string_view name);

/// Amplitude profile of a drive tone. Zero before `delay`.
struct Envelope {
  enum class Kind { constant, ramp, flat_top };

  Kind kind = Kind::constant;
  double amplitude = 0.0;   // plateau value, rad/ns
  double ramp_time = 0.0;   // ns
  double hold_time = 0.0;   // ns, flat_top only
  double delay = 0.0;       // ns
  RampShape shape = RampShape::tanh;
  // tanh edge: value(s) = (tanh(k(2s-1)) + tanh k) / (2 tanh k) on s in [0,1].
  double tanh_steepness = 4.0;

  static Envelope constant(double amplitude);
  static Envelope ramp(double amplitude, double ramp_time, RampShape shape = RampShape::tanh);
  static Envelope flat_top(double amplitude, double ramp_time, double hold_time,
                           RampShape shape = RampShape::tanh, double delay = 0.0);

  double operator()(double t) const;
  /// Time at which the envelope returns to zero (flat_top), else the ramp end.
  double end_time() const;
  bool is_constant() const { return kind == Kind::constant; }
};

/// Normalized edge profile on s in [0, 1], rising from 0 to 1.
double ramp_profile(double s, RampShape shape, double tanh_steepness);

struct DriveTone {
  Operator op;
  Envelope envelope;
  double frequency = 0.0;  // rad/ns
  double phase = 0.0;

  double coefficient(double t) const;
};

class DrivenHamiltonian {
 public:
  explicit DrivenHamiltonian(Operator static_part, std::vector<DriveTone> tones = {});

  const Operator& static_part() const { return static_; }
  const std::vector<DriveTone>& tones() const { return tones_; }
  const HilbertSpace& space() const { return static_.space(); }
  std::size_t dim() const { return static_.dim(); }

  DrivenHamiltonian with_tone(DriveTone tone) const;
  /// Copy with every tone envelope replaced by a constant at its plateau amplitude.
  DrivenHamiltonian plateau() const;
  /// Copy with all tone amplitudes multiplied by `factor`.
  DrivenHamiltonian scaled_drives(double factor) const;

  bool has_constant_envelopes() const;
  double max_tone_frequency() const;
  /// Largest minus smallest eigenvalue of the static part.
  double static_spectral_range() const;

  Operator evaluate(double t) const;
  /// Allocation-free variant; `out` must already have the right size.
  void evaluate_into(double t, Matrix& out) const;

 private:
  Operator static_;
  std::vector<DriveTone> tones_;
};

/// H = (w0/2) sz + e1 cos(w1 t) sx + e2 cos(w2 t) sz
DrivenHamiltonian build_tls_two_tone(double omega0, double eps_d1, double omega_d1,
                                     double eps_d2, double omega_d2);
/// Single tone variant of the above (e2 = 0, no second tone stored).
DrivenHamiltonian build_tls_driven(double omega0, double eps_d1, double omega_d1,
                                   const Envelope& envelope);

enum class Sidebands { both, difference, sum };
std::string_view to_string(Sidebands sb);
Sidebands sidebands_from_string(std::string_view name);

/// Qubit (x) cavity with transversal coupling g(t) (a + a^dagger) sx, where
/// g(t) = g_sb cos((wr - w0) t) + g_sb cos((wr + w0) t) for Sidebands::both.
DrivenHamiltonian build_qubit_cavity(double omega0, double eps_d1, double omega_d1,
                                     double omega_r, double g_sideband,
                                     std::size_t cavity_dim,
                                     Sidebands sidebands = Sidebands::both);

}  // namespace fqk

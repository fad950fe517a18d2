#include "fqk/hamiltonian.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include <Eigen/Eigenvalues>

namespace fqk {

std::string_view to_string(RampShape shape) {
  return shape == RampShape::linear ? "linear" : "tanh";
}

RampShape ramp_shape_from_string(std::string_view name) {
  if (name == "linear") return RampShape::linear;
  if (name == "tanh") return RampShape::tanh;
  throw std::invalid_argument("unknown ramp shape '" + std::string(name) + "'");
}

double ramp_profile(double s, RampShape shape, double k) {
  if (s <= 0.0) return 0.0;
  if (s >= 1.0) return 1.0;
  if (shape == RampShape::linear) return s;
  const double tk = std::tanh(k);
  return (std::tanh(k * (2.0 * s - 1.0)) + tk) / (2.0 * tk);
}

Envelope Envelope::constant(double amplitude) {
  Envelope e;
  e.kind = Kind::constant;
  e.amplitude = amplitude;
  return e;
}

Envelope Envelope::ramp(double amplitude, double ramp_time, RampShape shape) {
  if (ramp_time < 0.0) throw std::invalid_argument("Envelope::ramp: negative ramp time");
  Envelope e;
  e.kind = Kind::ramp;
  e.amplitude = amplitude;
  e.ramp_time = ramp_time;
  e.shape = shape;
  return e;
}

Envelope Envelope::flat_top(double amplitude, double ramp_time, double hold_time,
                            RampShape shape, double delay) {
  if (ramp_time < 0.0 || hold_time < 0.0) {
    throw std::invalid_argument("Envelope::flat_top: negative duration");
  }
  Envelope e;
  e.kind = Kind::flat_top;
  e.amplitude = amplitude;
  e.ramp_time = ramp_time;
  e.hold_time = hold_time;
  e.shape = shape;
  e.delay = delay;
  return e;
}

double Envelope::operator()(double t) const {
  const double s = t - delay;
  if (s < 0.0) return 0.0;
  switch (kind) {
    case Kind::constant:
      return amplitude;
    case Kind::ramp:
      if (ramp_time == 0.0) return amplitude;
      return amplitude * ramp_profile(s / ramp_time, shape, tanh_steepness);
    case Kind::flat_top: {
      if (s <= ramp_time) {
        return ramp_time == 0.0 ? amplitude
                                : amplitude * ramp_profile(s / ramp_time, shape, tanh_steepness);
      }
      const double down = s - ramp_time - hold_time;
      if (down <= 0.0) return amplitude;
      if (down >= ramp_time) return 0.0;
      return amplitude * ramp_profile(1.0 - down / ramp_time, shape, tanh_steepness);
    }
  }
  return 0.0;
}

double Envelope::end_time() const {
  switch (kind) {
    case Kind::constant:
      return delay;
    case Kind::ramp:
      return delay + ramp_time;
    case Kind::flat_top:
      return delay + 2.0 * ramp_time + hold_time;
  }
  return delay;
}

double DriveTone::coefficient(double t) const {
  return envelope(t) * std::cos(frequency * t + phase);
}

DrivenHamiltonian::DrivenHamiltonian(Operator static_part, std::vector<DriveTone> tones)
    : static_(std::move(static_part)), tones_(std::move(tones)) {
  if (!static_.is_hermitian()) {
    throw std::invalid_argument("DrivenHamiltonian: static part is not Hermitian");
  }
  for (const auto& tone : tones_) {
    if (!(tone.op.space() == static_.space())) {
      throw SpaceMismatch("DrivenHamiltonian: tone operator acts on a different space");
    }
    if (!tone.op.is_hermitian()) {
      throw std::invalid_argument("DrivenHamiltonian: tone operator is not Hermitian");
    }
    if (tone.frequency < 0.0) {
      throw std::invalid_argument("DrivenHamiltonian: negative tone frequency");
    }
  }
}

DrivenHamiltonian DrivenHamiltonian::with_tone(DriveTone tone) const {
  auto tones = tones_;
  tones.push_back(std::move(tone));
  return DrivenHamiltonian(static_, std::move(tones));
}

DrivenHamiltonian DrivenHamiltonian::plateau() const {
  auto tones = tones_;
  for (auto& tone : tones) tone.envelope = Envelope::constant(tone.envelope.amplitude);
  return DrivenHamiltonian(static_, std::move(tones));
}

DrivenHamiltonian DrivenHamiltonian::scaled_drives(double factor) const {
  auto tones = tones_;
  for (auto& tone : tones) tone.envelope.amplitude *= factor;
  return DrivenHamiltonian(static_, std::move(tones));
}

bool DrivenHamiltonian::has_constant_envelopes() const {
  return std::all_of(tones_.begin(), tones_.end(),
                     [](const DriveTone& t) { return t.envelope.is_constant() && t.envelope.delay == 0.0; });
}

double DrivenHamiltonian::max_tone_frequency() const {
  double w = 0.0;
  for (const auto& tone : tones_) w = std::max(w, tone.frequency);
  return w;
}

double DrivenHamiltonian::static_spectral_range() const {
  Eigen::SelfAdjointEigenSolver<Matrix> solver(static_.matrix(), Eigen::EigenvaluesOnly);
  const auto& ev = solver.eigenvalues();
  return ev.maxCoeff() - ev.minCoeff();
}

Operator DrivenHamiltonian::evaluate(double t) const {
  Matrix m(static_.matrix().rows(), static_.matrix().cols());
  evaluate_into(t, m);
  return Operator(static_.space(), std::move(m));
}

void DrivenHamiltonian::evaluate_into(double t, Matrix& out) const {
  out = static_.matrix();
  for (const auto& tone : tones_) {
    const double c = tone.coefficient(t);
    if (c != 0.0) out += c * tone.op.matrix();
  }
}

DrivenHamiltonian build_tls_two_tone(double omega0, double eps_d1, double omega_d1,
                                     double eps_d2, double omega_d2) {
  if (omega0 <= 0.0 || omega_d1 <= 0.0 || omega_d2 <= 0.0) {
    throw std::invalid_argument("build_tls_two_tone: frequencies must be positive");
  }
  std::vector<DriveTone> tones;
  tones.push_back({sigma_x(), Envelope::constant(eps_d1), omega_d1, 0.0});
  tones.push_back({sigma_z(), Envelope::constant(eps_d2), omega_d2, 0.0});
  return DrivenHamiltonian(0.5 * omega0 * sigma_z(), std::move(tones));
}

DrivenHamiltonian build_tls_driven(double omega0, double eps_d1, double omega_d1,
                                   const Envelope& envelope) {
  if (omega0 <= 0.0 || omega_d1 <= 0.0) {
    throw std::invalid_argument("build_tls_driven: frequencies must be positive");
  }
  Envelope env = envelope;
  env.amplitude = eps_d1;
  std::vector<DriveTone> tones;
  tones.push_back({sigma_x(), env, omega_d1, 0.0});
  return DrivenHamiltonian(0.5 * omega0 * sigma_z(), std::move(tones));
}

std::string_view to_string(Sidebands sb) {
  switch (sb) {
    case Sidebands::both:
      return "both";
    case Sidebands::difference:
      return "difference";
    case Sidebands::sum:
      return "sum";
  }
  return "both";
}

Sidebands sidebands_from_string(std::string_view name) {
  if (name == "both") return Sidebands::both;
  if (name == "difference") return Sidebands::difference;
  if (name == "sum") return Sidebands::sum;
  throw std::invalid_argument("unknown sideband selection '" + std::string(name) + "'");
}

DrivenHamiltonian build_qubit_cavity(double omega0, double eps_d1, double omega_d1,
                                     double omega_r, double g_sideband,
                                     std::size_t cavity_dim, Sidebands sidebands) {
  const HilbertSpace space({2, cavity_dim});
  const Operator sz = embed(sigma_z(), 0, space);
  const Operator sx = embed(sigma_x(), 0, space);
  const Operator a = embed(annihilation(cavity_dim), 1, space);
  const Operator n = embed(number(cavity_dim), 1, space);
  const Operator coupling = (a + a.adjoint()) * sx;

  std::vector<DriveTone> tones;
  tones.push_back({sx, Envelope::constant(eps_d1), omega_d1, 0.0});
  if (sidebands != Sidebands::sum) {
    tones.push_back({coupling, Envelope::constant(g_sideband), std::abs(omega_r - omega0), 0.0});
  }
  if (sidebands != Sidebands::difference) {
    tones.push_back({coupling, Envelope::constant(g_sideband), omega_r + omega0, 0.0});
  }
  return DrivenHamiltonian(0.5 * omega0 * sz + omega_r * n, std::move(tones));
}

}  // namespace fqk

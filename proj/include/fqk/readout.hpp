#pragma once

// Open-system readout: Lindblad evolution with cavity decay, pointer-state
// separation D(t), SNR, analytic longitudinal and dispersive references, and
// the three-mode Kerr circuit with its normal-mode reduction.

#include <functional>
#include <iosfwd>
#include <span>
#include <stdexcept>
#include <vector>

#include "json.hpp"

#include "fqk/floquet.hpp"

namespace fqk {

struct CollapseOp {
  Operator op;
  double rate = 0.0;  // rad/ns; contributes rate * (L rho L^dag - {L^dag L, rho}/2)
};

struct LindbladModel {
  DrivenHamiltonian h;
  std::vector<CollapseOp> collapse;

  void validate() const;
};

struct LindbladConfig {
  // RK4 steps per fastest interaction-picture oscillation.
  int substeps_per_fastest_period = 64;
  double trace_tol = 1e-8;
  double hermiticity_tol = 1e-9;
  double positivity_tol = 1e-6;
  bool check_positivity = true;
};

class LindbladError : public std::runtime_error {
 public:
  LindbladError(const std::string& what, double t, double step)
      : std::runtime_error(what), t_(t), step_(step) {}
  double time() const { return t_; }
  double step() const { return step_; }

 private:
  double t_;
  double step_;
};

/// Trace, Hermiticity and positivity checks applied at every output sample.
void validate_sample(const Matrix& rho, const LindbladConfig& cfg, double t, double step,
                     double trace0);

using DensityObserver = std::function<void(std::size_t index, const DensityMatrix& rho)>;

/// Integrates the master equation and hands the state at each requested time
/// to `observe`. Returns the step size used.
double lindblad_run(const LindbladModel& model, const DensityMatrix& rho0,
                    std::span<const double> times, const DensityObserver& observe,
                    const LindbladConfig& cfg = {}, double t_start = 0.0);

std::vector<DensityMatrix> lindblad_evolve(const LindbladModel& model, const DensityMatrix& rho0,
                                           std::span<const double> times,
                                           const LindbladConfig& cfg = {}, double t_start = 0.0);

struct PointerTrajectory {
  std::vector<double> times;
  std::vector<cplx> a0, a1;
  std::vector<double> D;
  nlohmann::json params;
};

PointerTrajectory pointer_separation(const LindbladModel& model, const StateVector& psi0,
                                     const StateVector& psi1, const Operator& field,
                                     std::span<const double> times, const LindbladConfig& cfg = {});

/// (g_eff / kappa)(1 - exp(-kappa t / 2)).
double longitudinal_D_analytic(double g_eff, double kappa, double t);

/// sqrt(2 kappa int_0^T D^2 dt), trapezoidal; D linearly interpolated at T.
double snr(std::span<const double> times, std::span<const double> D, double kappa, double T);

struct DispersiveParams {
  double chi = 0.0;
  double kappa = 0.0;
  double eps_probe = 0.0;
  double t_map = 0.0;  // dead time before the probe starts
};
/// Two pointers from da/dt = -(kappa/2 +- i chi) a - i eps, a(0) = 0.
double dispersive_D_analytic(const DispersiveParams& p, double t);
/// chi = kappa/2 and eps_probe = kappa D_inf / 2, so both readouts share D(inf).
DispersiveParams dispersive_matching(double kappa, double d_inf, double t_map = 0.0);

struct ExponentialFit {
  double d_inf = 0.0;
  double kappa = 0.0;
  double rms = 0.0;
};
/// Least squares D(t) = d_inf (1 - exp(-kappa t / 2)) over samples with t <= t_max.
ExponentialFit fit_longitudinal(std::span<const double> times, std::span<const double> D,
                                double t_max, double kappa_guess);

// Qubit plus cavity with modulated transversal coupling.
struct TwoBodyReadout {
  double omega0 = angular(5.0);
  double eps_d1 = angular(0.21);
  double tilt = 0.005;  // Delta / eps_d1, Delta = omega0 - omega_d1
  double omega_r = angular(7.0);
  double g_sideband = angular(0.005);
  double kappa = angular(0.05);
  std::size_t cavity_dim = 20;
  Sidebands sidebands = Sidebands::both;

  double omega_d1() const { return omega0 - tilt * eps_d1; }
  /// Longitudinal strength entering D(inf) = g_eff / kappa: each active
  /// sideband contributes g_sideband.
  double g_eff() const;
  nlohmann::json to_json() const;
};

PointerTrajectory simulate_two_body_readout(const TwoBodyReadout& params,
                                            std::span<const double> times,
                                            const LindbladConfig& cfg = {});

// Three coupled Kerr oscillators: readout a, qubit b, coupler c.
struct KerrCircuit {
  double omega_a = angular(8.2);
  double omega_b = angular(5.2);
  double omega_c = angular(7.78);
  double alpha_b = angular(-0.34);
  double alpha_c = angular(0.8);
  double g_ab = 0.0;
  double g_bc = angular(0.2);
  double g_ca = angular(0.2);
  double eps_d1 = angular(0.7);
  double tilt = 0.005;                // omega_d1 = omega_b^N - tilt * eps_d1
  double modulation = angular(0.25);  // delta omega_c amplitude
  Sidebands sidebands = Sidebands::difference;
  double kappa = angular(0.05);
  std::size_t dim_a = 6, dim_b = 6, dim_c = 3;

  nlohmann::json to_json() const;
};

class LabelingAmbiguity : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct NormalModeData {
  Eigen::Vector3d frequencies;  // normal a, b, c
  // u(bare, normal): bare mode beta = sum over normal alpha of u(beta, alpha) alpha.
  Eigen::Matrix3d u;
  Eigen::Vector3d alpha1;  // effective self-Kerr of normal modes
  Eigen::Matrix3d chi1;    // cross-Kerr, symmetric
  double g_per_modulation = 0.0;  // u(c, a) u(c, b)

  nlohmann::json to_json() const;
};

NormalModeData normal_mode_reduce(const KerrCircuit& c);

/// alpha^(1) and chi^(1) from diagonal matrix elements of the rotated quartic
/// terms in a normal-mode Fock basis, independent of the closed-form sums.
NormalModeData normal_mode_kerr_by_expansion(const KerrCircuit& c, const NormalModeData& nm);

struct CircuitModel {
  LindbladModel model;
  Operator field;  // normal-mode cavity annihilator
  NormalModeData modes;
  double omega_d1 = 0.0;
  double modulation_frequency = 0.0;
};

CircuitModel build_circuit_model(const KerrCircuit& c, bool with_modulation = true);

struct CircuitFloquetQubit {
  StateVector phi0, phi1;  // at t = 0, embedded in the full truncation
  // First harmonic (e^{-i w_d1 t}) of <phi_n(t)| b_N |phi_n(t)>, b_N the normal qubit mode.
  cplx b1[2];
  /// |b1[0] - b1[1]|; equals 1 for an equatorial two-level Floquet qubit.
  double contrast() const { return std::abs(b1[0] - b1[1]); }
};

/// Floquet qubit states of the driven circuit (no modulation), continued from
/// the undriven dressed |0_b> and |1_b>.
CircuitFloquetQubit circuit_floquet_qubit(const KerrCircuit& c, const CircuitModel& m);

/// Two-body prediction for the circuit: D(inf) = |u_ca u_cb dw_c| * contrast / kappa.
double circuit_d_inf_prediction(const KerrCircuit& c, const CircuitModel& m,
                                const CircuitFloquetQubit& q);

PointerTrajectory simulate_circuit_readout(const KerrCircuit& c, std::span<const double> times,
                                           const LindbladConfig& cfg = {},
                                           bool with_modulation = true);

void write_trajectory_csv(std::ostream& os, const PointerTrajectory& tr, double d_inf);

}  // namespace fqk

#include "fqk/propagator.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace fqk {

namespace {

// Blanes & Moan commutator-free 4th-order scheme, Gauss-Legendre nodes.
const double kSqrt3 = std::sqrt(3.0);
const double kNode1 = 0.5 - kSqrt3 / 6.0;
const double kNode2 = 0.5 + kSqrt3 / 6.0;
const double kWeightA = (3.0 - 2.0 * kSqrt3) / 12.0;
const double kWeightB = (3.0 + 2.0 * kSqrt3) / 12.0;

long step_count_for(const DrivenHamiltonian& h, double duration, int substeps) {
  const double period = fastest_period(h);
  const double n = std::ceil(duration / period * substeps - 1e-9);
  return std::max(1L, static_cast<long>(n));
}

Matrix magnus4_uniform(const DrivenHamiltonian& h, double t0, double t1, long steps) {
  const auto n = static_cast<Eigen::Index>(h.dim());
  Matrix u = Matrix::Identity(n, n);
  const double dt = (t1 - t0) / static_cast<double>(steps);
  for (long k = 0; k < steps; ++k) magnus4_step(h, t0 + dt * static_cast<double>(k), dt, u);
  return u;
}

// Dormand-Prince 5(4) on dU/dt = -i H(t) U.
Matrix rk45_adaptive(const DrivenHamiltonian& h, double t0, double t1, double tol,
                     long& steps, double& err_out) {
  static constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
  static constexpr double a21 = 1.0 / 5;
  static constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
  static constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
  static constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561,
                          a54 = -212.0 / 729;
  static constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247,
                          a64 = 49.0 / 176, a65 = -5103.0 / 18656;
  static constexpr double b1 = 35.0 / 384, b3 = 500.0 / 1113, b4 = 125.0 / 192,
                          b5 = -2187.0 / 6784, b6 = 11.0 / 84;
  static constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920,
                          e5 = -17253.0 / 339200, e6 = 22.0 / 525, e7 = -1.0 / 40;

  const auto n = static_cast<Eigen::Index>(h.dim());
  Matrix u = Matrix::Identity(n, n);
  Matrix hm(n, n);
  auto rhs = [&](double t, const Matrix& y) {
    h.evaluate_into(t, hm);
    return Matrix(cplx(0, -1) * (hm * y));
  };

  double t = t0;
  double dt = fastest_period(h) / 64.0;
  steps = 0;
  err_out = 0.0;
  Matrix k1 = rhs(t, u);
  const long max_steps = 50'000'000;
  while (t < t1) {
    if (steps > max_steps) {
      throw ConvergenceError("rk45: step budget exhausted", err_out, steps);
    }
    dt = std::min(dt, t1 - t);
    const Matrix k2 = rhs(t + c2 * dt, u + dt * (a21 * k1));
    const Matrix k3 = rhs(t + c3 * dt, u + dt * (a31 * k1 + a32 * k2));
    const Matrix k4 = rhs(t + c4 * dt, u + dt * (a41 * k1 + a42 * k2 + a43 * k3));
    const Matrix k5 = rhs(t + c5 * dt, u + dt * (a51 * k1 + a52 * k2 + a53 * k3 + a54 * k4));
    const Matrix k6 =
        rhs(t + dt, u + dt * (a61 * k1 + a62 * k2 + a63 * k3 + a64 * k4 + a65 * k5));
    Matrix y = u + dt * (b1 * k1 + b3 * k3 + b4 * k4 + b5 * k5 + b6 * k6);
    const Matrix k7 = rhs(t + dt, y);
    const Matrix err = dt * (e1 * k1 + e3 * k3 + e4 * k4 + e5 * k5 + e6 * k6 + e7 * k7);
    const double scale = tol * (1.0 + std::max(max_abs(u), max_abs(y)));
    const double ratio = max_abs(err) / scale;
    if (ratio <= 1.0 || dt < 1e-14) {
      t += dt;
      u = std::move(y);
      k1 = k7;
      ++steps;
      err_out += max_abs(err);
    }
    const double factor = ratio > 0 ? 0.9 * std::pow(ratio, -0.2) : 5.0;
    dt *= std::clamp(factor, 0.2, 5.0);
  }
  return u;
}

}  // namespace

void IntegratorConfig::validate() const {
  if (substeps_per_fastest_period < 16) {
    throw std::invalid_argument("IntegratorConfig: substeps_per_fastest_period must be >= 16");
  }
  if (!(tolerance > 0.0)) throw std::invalid_argument("IntegratorConfig: tolerance must be > 0");
  if (max_refinements < 0) throw std::invalid_argument("IntegratorConfig: max_refinements < 0");
}

std::string_view to_string(IntegratorConfig::Method m) {
  return m == IntegratorConfig::Method::magnus4 ? "magnus4" : "rk45";
}

IntegratorConfig::Method integrator_method_from_string(std::string_view name) {
  if (name == "magnus4") return IntegratorConfig::Method::magnus4;
  if (name == "rk45") return IntegratorConfig::Method::rk45;
  throw std::invalid_argument("unknown integrator method '" + std::string(name) + "'");
}

double fastest_period(const DrivenHamiltonian& h) {
  double period = std::numeric_limits<double>::infinity();
  for (const auto& tone : h.tones()) {
    if (tone.frequency > 0.0) period = std::min(period, kTwoPi / tone.frequency);
  }
  const double range = h.static_spectral_range();
  if (range > 0.0) period = std::min(period, kTwoPi / range);
  if (!std::isfinite(period)) {
    // Static part proportional to identity and no oscillating tones: any step works.
    period = 1.0;
  }
  return period;
}

void magnus4_step(const DrivenHamiltonian& h, double t, double dt, Matrix& target) {
  const auto n = static_cast<Eigen::Index>(h.dim());
  thread_local Matrix h1, h2, gen;
  h1.resize(n, n);
  h2.resize(n, n);
  h.evaluate_into(t + kNode1 * dt, h1);
  h.evaluate_into(t + kNode2 * dt, h2);
  gen = kWeightB * h1 + kWeightA * h2;
  target = hermitian_propagator(gen, dt) * target;
  gen = kWeightA * h1 + kWeightB * h2;
  target = hermitian_propagator(gen, dt) * target;
}

PropagatorResult propagate(const DrivenHamiltonian& h, double t0, double t1,
                           const IntegratorConfig& cfg) {
  cfg.validate();
  if (!(t1 > t0)) throw std::invalid_argument("propagate: t1 must exceed t0");

  PropagatorResult result{Operator::identity(h.space()), t0, t1, 0, 0.0};

  if (cfg.method == IntegratorConfig::Method::rk45) {
    long steps = 0;
    double err = 0.0;
    Matrix u = rk45_adaptive(h, t0, t1, cfg.tolerance, steps, err);
    result.U = Operator(h.space(), std::move(u));
    result.step_count = steps;
    result.est_error = err;
  } else {
    long steps = step_count_for(h, t1 - t0, cfg.substeps_per_fastest_period);
    Matrix coarse = magnus4_uniform(h, t0, t1, steps);
    if (!cfg.estimate_error) {
      result.U = Operator(h.space(), std::move(coarse));
      result.step_count = steps;
    } else {
      for (int refine = 0;; ++refine) {
        Matrix fine = magnus4_uniform(h, t0, t1, 2 * steps);
        // Richardson: the fine result's error is about |fine - coarse| / (2^4 - 1).
        const double est = max_abs(fine - coarse) / 15.0;
        result.step_count = 2 * steps;
        result.est_error = est;
        if (est <= cfg.tolerance) {
          result.U = Operator(h.space(), std::move(fine));
          break;
        }
        if (refine >= cfg.max_refinements) {
          std::ostringstream os;
          os << "propagate: step-doubling error estimate " << est << " exceeds tolerance "
             << cfg.tolerance << " after " << refine << " refinements (" << 2 * steps
             << " steps over [" << t0 << ", " << t1 << "] ns)";
          throw ConvergenceError(os.str(), est, 2 * steps);
        }
        coarse = std::move(fine);
        steps *= 2;
      }
    }
  }

  const double defect = result.U.unitarity_defect();
  if (defect > 1e-8) {
    std::ostringstream os;
    os << "propagate: unitarity defect " << defect << " exceeds 1e-8";
    throw ConvergenceError(os.str(), defect, result.step_count);
  }
  return result;
}

std::vector<StateVector> evolve_state(const DrivenHamiltonian& h, const StateVector& psi0,
                                      std::span<const double> times,
                                      const IntegratorConfig& cfg, double t_start) {
  cfg.validate();
  if (!(psi0.space() == h.space())) throw SpaceMismatch("evolve_state: space mismatch");
  for (std::size_t k = 1; k < times.size(); ++k) {
    if (!(times[k] > times[k - 1])) {
      throw std::invalid_argument("evolve_state: times must be strictly increasing");
    }
  }
  if (!times.empty() && times.front() < t_start) {
    throw std::invalid_argument("evolve_state: first time precedes start time");
  }

  const double period = fastest_period(h);
  const double initial_norm = psi0.norm();
  Matrix psi = psi0.amplitudes();
  double t = t_start;
  std::vector<StateVector> out;
  out.reserve(times.size());
  for (double target : times) {
    const double span = target - t;
    if (span > 0.0) {
      if (cfg.method == IntegratorConfig::Method::rk45) {
        long steps = 0;
        double err = 0.0;
        const Matrix u = rk45_adaptive(h, t, target, cfg.tolerance, steps, err);
        psi = u * psi;
      } else {
        const long steps = std::max(
            1L, static_cast<long>(std::ceil(span / period * cfg.substeps_per_fastest_period - 1e-9)));
        const double dt = span / static_cast<double>(steps);
        for (long k = 0; k < steps; ++k) magnus4_step(h, t + dt * static_cast<double>(k), dt, psi);
      }
      t = target;
    }
    const double drift = std::abs(psi.norm() - initial_norm);
    if (drift > 1e-9) {
      throw ConvergenceError("evolve_state: norm drift " + std::to_string(drift), drift, 0);
    }
    out.emplace_back(h.space(), Vector(psi.col(0)));
  }
  return out;
}

}  // namespace fqk

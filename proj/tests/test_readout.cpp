#include "doctest.h"

#include <cmath>
#include <random>
#include <sstream>

#include "fqk/readout.hpp"

using namespace fqk;

namespace {

std::vector<double> grid(double t1, int n) {
  std::vector<double> t;
  for (int k = 0; k <= n; ++k) t.push_back(t1 * k / n);
  return t;
}

// Antiderivative of (1 - e^{-k t/2})^2.
double sq_integral(double k, double T) {
  return T - 4.0 / k * (1.0 - std::exp(-k * T / 2)) + 1.0 / k * (1.0 - std::exp(-k * T));
}

}  // namespace

TEST_CASE("closed system limit reproduces state evolution") {
  const auto h = build_qubit_cavity(angular(5.0), angular(0.2), angular(5.01), angular(7.0),
                                    angular(0.01), 4);
  const LindbladModel model{h, {}};
  const StateVector psi = tensor({StateVector(HilbertSpace::single(2), Vector::Constant(2, M_SQRT1_2)),
                                  fock_state(1, 4)});
  const auto times = grid(2.0, 8);
  const auto rhos = lindblad_evolve(model, DensityMatrix::pure(psi), times);
  const auto states = evolve_state(h, psi, times);
  REQUIRE(rhos.size() == states.size());
  for (std::size_t k = 0; k < rhos.size(); ++k) {
    const Vector& v = states[k].amplitudes();
    CHECK(max_abs(rhos[k].matrix() - v * v.adjoint()) < 1e-7);
  }
}

TEST_CASE("damped coherent cavity") {
  const std::size_t dim = 20;
  const HilbertSpace space = HilbertSpace::single(dim);
  const double kappa = 0.5;
  const cplx alpha0(1.0, 0.3);
  const LindbladModel model{DrivenHamiltonian(Operator::zero(space)), {{annihilation(dim), kappa}}};
  const auto times = grid(10.0, 20);
  const auto rhos = lindblad_evolve(model, DensityMatrix::pure(coherent_state(alpha0, dim)), times);
  for (std::size_t k = 0; k < times.size(); ++k) {
    const cplx a = expectation(rhos[k], annihilation(dim));
    CHECK(std::abs(a - alpha0 * std::exp(-kappa * times[k] / 2)) < 1e-6);
    CHECK(std::abs(rhos[k].trace() - 1.0) < 1e-8);
    CHECK(rhos[k].hermiticity_defect() < 1e-9);
  }
}

TEST_CASE("driven damped cavity approaches the input-output steady state") {
  const std::size_t dim = 20;
  const double eta = 0.2, kappa = 1.0;
  const Operator a = annihilation(dim);
  const LindbladModel model{DrivenHamiltonian(cplx(eta) * (a + a.adjoint())), {{a, kappa}}};
  const auto times = grid(30.0, 30);
  const auto rhos =
      lindblad_evolve(model, DensityMatrix::pure(fock_state(0, dim)), times);
  const cplx steady(0.0, -2.0 * eta / kappa);
  for (std::size_t k = 0; k < times.size(); ++k) {
    // da/dt = -i eta - kappa a / 2
    const cplx exact = steady * (1.0 - std::exp(-kappa * times[k] / 2));
    CHECK(std::abs(expectation(rhos[k], a) - exact) <= 1e-4 * std::abs(steady));
  }
  CHECK(std::abs(expectation(rhos.back(), a) - steady) < 1e-4);
}

TEST_CASE("linear cavity with a drive tone stays on the analytic response") {
  // Lab frame drive on a rotating cavity, checked against the exact linear ODE.
  const std::size_t dim = 12;
  const double wr = angular(2.0), eta = 0.05, kappa = 0.4;
  const Operator a = annihilation(dim);
  DrivenHamiltonian h(cplx(wr) * number(dim), {{a + a.adjoint(), Envelope::constant(eta), wr, 0.0}});
  const LindbladModel model{h, {{a, kappa}}};
  const auto times = grid(10.0, 10);
  const auto rhos = lindblad_evolve(model, DensityMatrix::pure(fock_state(0, dim)), times);
  // da/dt = -(i wr + kappa/2) a - i eta cos(wr t): integrate the scalar ODE finely.
  cplx y = 0.0;
  double t = 0.0;
  const int n = 200000;
  const double h_ode = 10.0 / n;
  auto f = [&](double s, cplx v) {
    return -(cplx(0, wr) + kappa / 2) * v - cplx(0, eta * std::cos(wr * s));
  };
  std::size_t next = 1;
  for (int k = 0; k < n; ++k) {
    const cplx k1 = f(t, y), k2 = f(t + h_ode / 2, y + h_ode / 2 * k1),
               k3 = f(t + h_ode / 2, y + h_ode / 2 * k2), k4 = f(t + h_ode, y + h_ode * k3);
    y += h_ode / 6 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    t += h_ode;
    if (next < times.size() && std::abs(t - times[next]) < 1e-9) {
      CHECK(std::abs(expectation(rhos[next], a) - y) <= 1e-4 * std::abs(y));
      ++next;
    }
  }
  CHECK(next == times.size());
}

TEST_CASE("lindblad rejects bad input and reports instability") {
  const std::size_t dim = 4;
  const HilbertSpace space = HilbertSpace::single(dim);
  const Operator a = annihilation(dim);
  const auto rho0 = DensityMatrix::pure(fock_state(3, dim));
  const double backwards[] = {1.0, 0.5};
  CHECK_THROWS_AS(lindblad_evolve({DrivenHamiltonian(Operator::zero(space)), {{a, 1.0}}}, rho0,
                                  backwards),
                  std::invalid_argument);
  CHECK_THROWS_AS(lindblad_evolve({DrivenHamiltonian(Operator::zero(space)), {{a, -1.0}}}, rho0,
                                  backwards),
                  std::invalid_argument);
  // A stiff decay is resolved rather than blowing up.
  const double t[] = {0.01};
  const auto r = lindblad_evolve({DrivenHamiltonian(Operator::zero(space)), {{a, 1e4}}}, rho0, t);
  CHECK(expectation(r[0], number(dim)).real() < 1e-10);

  Matrix bad = Matrix::Zero(2, 2);
  bad(0, 0) = 1.1;
  bad(1, 1) = -0.1;
  try {
    validate_sample(bad, {}, 2.5, 0.01, 1.0);
    FAIL("expected LindbladError");
  } catch (const LindbladError& e) {
    CHECK(e.time() == 2.5);
    CHECK(e.step() == 0.01);
  }
  bad(1, 1) = std::nan("");
  CHECK_THROWS_AS(validate_sample(bad, {}, 0.0, 0.01, 1.0), LindbladError);
  bad(1, 1) = 0.0;
  CHECK_THROWS_AS(validate_sample(bad, {}, 0.0, 0.01, 1.0), LindbladError);  // trace 1.1
}

TEST_CASE("longitudinal analytic form") {
  const double g = 0.3, k = 0.2;
  CHECK(longitudinal_D_analytic(g, k, 0.0) == 0.0);
  CHECK(longitudinal_D_analytic(g, k, 1e4) == doctest::Approx(g / k).epsilon(1e-12));
  CHECK(longitudinal_D_analytic(g, k, 2 * std::log(2.0) / k) ==
        doctest::Approx(g / (2 * k)).epsilon(1e-12));
  CHECK_THROWS_AS(longitudinal_D_analytic(g, 0.0, 1.0), std::invalid_argument);
}

TEST_CASE("snr quadrature") {
  const auto t = grid(20.0, 4000);
  const double kappa = angular(0.05), g = angular(0.01);
  std::vector<double> flat(t.size(), 0.7), d;
  for (double x : t) d.push_back(longitudinal_D_analytic(g, kappa, x));
  CHECK(snr(t, flat, kappa, 20.0) == doctest::Approx(std::sqrt(2 * kappa * 20.0) * 0.7).epsilon(1e-12));
  CHECK(snr(t, d, kappa, 0.0) == 0.0);
  for (double T : {3.0, 10.0, 17.3, 20.0}) {
    const double exact = std::sqrt(2 * kappa * std::pow(g / kappa, 2) * sq_integral(kappa, T));
    CHECK(std::abs(snr(t, d, kappa, T) - exact) < 1e-6);
  }
  double prev = 0.0;
  for (double T = 0.0; T <= 20.0; T += 0.37) {
    const double s = snr(t, d, kappa, T);
    CHECK(s >= prev);
    prev = s;
  }
  CHECK_THROWS_AS(snr(t, d, kappa, 21.0), std::out_of_range);
}

TEST_CASE("dispersive analytic pointers") {
  const double kappa = angular(0.05);
  CHECK(dispersive_D_analytic({0.0, kappa, 0.1, 0.0}, 50.0) == 0.0);
  // Steady state of da/dt = -(k/2 +- i chi) a - i eps.
  for (double chi : {0.3 * kappa, kappa / 2, 2.0 * kappa}) {
    const double eps = 0.07;
    const double expect = 2 * eps * chi / (kappa * kappa / 4 + chi * chi);
    CHECK(dispersive_D_analytic({chi, kappa, eps, 0.0}, 1e4) == doctest::Approx(expect).epsilon(1e-10));
  }
  const auto match = dispersive_matching(kappa, 0.4, 30.0);
  CHECK(match.chi == doctest::Approx(kappa / 2));
  CHECK(dispersive_D_analytic(match, 1e5) == doctest::Approx(0.4).epsilon(1e-10));
  CHECK(dispersive_D_analytic(match, 29.0) == 0.0);
  auto undelayed = match;
  undelayed.t_map = 0.0;
  CHECK(dispersive_D_analytic(match, 42.0) == doctest::Approx(dispersive_D_analytic(undelayed, 12.0)));
}

TEST_CASE("exponential fit recovers synthetic parameters") {
  const auto t = grid(30.0, 300);
  std::mt19937 rng(7);
  std::normal_distribution<double> noise(0.0, 1e-4);
  std::vector<double> d;
  for (double x : t) d.push_back(0.21 * -std::expm1(-0.5 * 0.33 * x) + noise(rng));
  const auto fit = fit_longitudinal(t, d, 30.0, 0.5);
  CHECK(fit.d_inf == doctest::Approx(0.21).epsilon(1e-3));
  CHECK(fit.kappa == doctest::Approx(0.33).epsilon(1e-2));
  CHECK(fit.rms < 2e-4);
}

TEST_CASE("uncoupled qubit gives no pointer separation") {
  TwoBodyReadout p;
  p.g_sideband = 0.0;
  p.cavity_dim = 4;
  const auto tr = simulate_two_body_readout(p, grid(3.0, 6));
  for (double d : tr.D) CHECK(d < 1e-12);
}

TEST_CASE("two-body readout follows the longitudinal law at small tilt") {
  for (double tilt : {0.005, 0.01}) {
    TwoBodyReadout p;
    p.tilt = tilt;
    p.cavity_dim = 8;
    const double window = 5.0 / p.kappa;
    const auto tr = simulate_two_body_readout(p, grid(window, 40));
    const double dinf = p.g_eff() / p.kappa;
    CHECK(tr.D.front() < 1e-12);
    double worst = 0.0;
    for (std::size_t k = 0; k < tr.times.size(); ++k) {
      worst = std::max(worst, std::abs(tr.D[k] - longitudinal_D_analytic(p.g_eff(), p.kappa, tr.times[k])));
    }
    CHECK(worst / dinf <= 0.05);
  }
}

TEST_CASE("large tilt departs from the longitudinal law") {
  TwoBodyReadout p;
  p.tilt = 0.3;
  p.cavity_dim = 8;
  const auto tr = simulate_two_body_readout(p, grid(5.0 / p.kappa, 40));
  double worst = 0.0;
  for (std::size_t k = 0; k < tr.times.size(); ++k) {
    worst = std::max(worst, std::abs(tr.D[k] - longitudinal_D_analytic(p.g_eff(), p.kappa, tr.times[k])));
  }
  CHECK(worst * p.kappa / p.g_eff() > 0.15);
}

TEST_CASE("normal modes: decoupled limit") {
  KerrCircuit c;
  c.g_ab = c.g_bc = c.g_ca = 0.0;
  const auto nm = normal_mode_reduce(c);
  CHECK(max_abs(nm.u.cast<cplx>() - Matrix::Identity(3, 3)) < 1e-14);
  CHECK(nm.frequencies(0) == doctest::Approx(c.omega_a));
  CHECK(nm.frequencies(1) == doctest::Approx(c.omega_b));
  CHECK(nm.frequencies(2) == doctest::Approx(c.omega_c));
  CHECK(nm.alpha1(1) == doctest::Approx(c.alpha_b));
  CHECK(nm.alpha1(2) == doctest::Approx(c.alpha_c));
  CHECK(nm.alpha1(0) == 0.0);
  CHECK(nm.chi1.cwiseAbs().maxCoeff() == 0.0);
  CHECK(nm.g_per_modulation == 0.0);
}

TEST_CASE("normal modes: circuit parameters") {
  const KerrCircuit c;
  const auto nm = normal_mode_reduce(c);
  CHECK((nm.u.transpose() * nm.u - Eigen::Matrix3d::Identity()).cwiseAbs().maxCoeff() < 1e-10);
  Eigen::Matrix3d m;
  m << c.omega_a, c.g_ab, c.g_ca, c.g_ab, c.omega_b, c.g_bc, c.g_ca, c.g_bc, c.omega_c;
  for (int k = 0; k < 3; ++k) {
    CHECK((m * nm.u.col(k) - nm.frequencies(k) * nm.u.col(k)).norm() < 1e-10);
    Eigen::Index dom = 0;
    nm.u.col(k).cwiseAbs().maxCoeff(&dom);
    CHECK(dom == k);
    CHECK(nm.u(dom, k) > 0.0);
  }
  CHECK((nm.chi1 - nm.chi1.transpose()).cwiseAbs().maxCoeff() < 1e-14);
  CHECK(nm.g_per_modulation == doctest::Approx(nm.u(2, 0) * nm.u(2, 1)));
  const auto other = normal_mode_kerr_by_expansion(c, nm);
  CHECK((other.alpha1 - nm.alpha1).cwiseAbs().maxCoeff() < 1e-10);
  CHECK((other.chi1 - nm.chi1).cwiseAbs().maxCoeff() < 1e-10);
}

TEST_CASE("normal modes: two-mode rotation") {
  KerrCircuit c;
  c.g_ca = c.g_bc = 0.0;
  c.g_ab = angular(0.3);
  const auto nm = normal_mode_reduce(c);
  const double theta = 0.5 * std::atan2(2 * c.g_ab, c.omega_a - c.omega_b);
  CHECK(nm.u(0, 0) == doctest::Approx(std::cos(theta)).epsilon(1e-12));
  CHECK(nm.u(1, 0) == doctest::Approx(std::sin(theta)).epsilon(1e-12));
  CHECK(std::abs(nm.u(0, 1)) == doctest::Approx(std::sin(theta)).epsilon(1e-12));
  CHECK(nm.u(1, 1) == doctest::Approx(std::cos(theta)).epsilon(1e-12));
  CHECK(nm.u(2, 2) == doctest::Approx(1.0));
}

TEST_CASE("normal modes: degenerate frequencies are ambiguous") {
  KerrCircuit c;
  c.g_ab = c.g_bc = c.g_ca = 0.0;
  c.omega_c = c.omega_a + angular(0.5e-3);
  CHECK_THROWS_AS(normal_mode_reduce(c), LabelingAmbiguity);
}

TEST_CASE("trajectory csv") {
  PointerTrajectory tr;
  tr.times = {0.0, 1.0};
  tr.a0 = {0.0, cplx(0.1, 0.2)};
  tr.a1 = {0.0, cplx(-0.1, 0.2)};
  tr.D = {0.0, 0.2};
  std::ostringstream os;
  write_trajectory_csv(os, tr, 0.4);
  const std::string s = os.str();
  CHECK(s.rfind("t_ns,ReA0,ImA0,ReA1,ImA1,D,D_over_Dinf\n", 0) == 0);
  CHECK(s.find(",0.2,0.5\n") != std::string::npos);
}

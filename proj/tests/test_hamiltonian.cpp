#include "doctest.h"

#include <cmath>

#include "fqk/hamiltonian.hpp"

using namespace fqk;

TEST_CASE("evaluate on the two-tone qubit") {
  const double w0 = angular(5.02), e1 = angular(0.21), w1 = angular(5.0);
  const double e2 = angular(0.03), w2 = angular(0.2);
  const auto h = build_tls_two_tone(w0, e1, w1, e2, w2);

  const Matrix h0 = h.evaluate(0.0).matrix();
  CHECK(h0(0, 1).real() == doctest::Approx(angular(0.21)));
  CHECK(h0(0, 0).real() == doctest::Approx(w0 / 2 + e2));

  const double t = kPi / w2;
  const Matrix expect = (0.5 * w0 * sigma_z() + e1 * std::cos(w1 * t) * sigma_x() - e2 * sigma_z()).matrix();
  CHECK(max_abs(h.evaluate(t).matrix() - expect) < 1e-12);

  const auto bare = build_tls_two_tone(w0, 0.0, w1, 0.0, w2);
  CHECK(max_abs(bare.evaluate(1.234).matrix() - (0.5 * w0 * sigma_z()).matrix()) == 0.0);

  const auto single = build_tls_driven(w0, e1, w1, Envelope::constant(1.0));
  const auto no_second = build_tls_two_tone(w0, e1, w1, 0.0, w2);
  for (double s : {0.0, 0.3, 7.7, 101.1}) {
    CHECK(max_abs(single.evaluate(s).matrix() - no_second.evaluate(s).matrix()) == 0.0);
  }
}

TEST_CASE("hermitian and periodic for commensurate tones") {
  const double w1 = angular(5.0);
  const int p = 3, q = 40;
  const double w2 = w1 * p / q;
  const auto h = build_tls_two_tone(angular(5.02), angular(0.21), w1, angular(0.004), w2);
  const double period = kTwoPi * q / w1;
  for (double t : {0.0, 0.11, 3.7, 12.9}) {
    const Operator ht = h.evaluate(t);
    CHECK(ht.hermiticity_defect() < 1e-12);
    CHECK(max_abs(ht.matrix() - h.evaluate(t + period).matrix()) < 1e-10);
  }
}

TEST_CASE("envelopes") {
  const auto ramp = Envelope::ramp(2.0, 20.0);
  CHECK(ramp(0.0) == 0.0);
  CHECK(ramp(20.0) == 2.0);
  CHECK(ramp(20.0 * (1 - 1e-12)) >= 0.999 * 2.0);
  CHECK(ramp(10.0) == doctest::Approx(1.0));

  const auto ft = Envelope::flat_top(1.5, 10.0, 30.0);
  double prev = 0.0;
  for (double t = 0.0; t <= ft.end_time() + 1.0; t += 0.01) {
    const double v = ft(t);
    CHECK(v >= 0.0);
    CHECK(v <= 1.5);
    CHECK(std::abs(v - prev) < 0.01);  // continuous on this grid
    prev = v;
  }
  CHECK(ft(25.0) == 1.5);
  CHECK(ft(ft.end_time()) == 0.0);

  const auto lin = Envelope::ramp(1.0, 4.0, RampShape::linear);
  CHECK(lin(1.0) == doctest::Approx(0.25));
  CHECK_THROWS(Envelope::ramp(1.0, -1.0));
}

TEST_CASE("qubit-cavity coupling") {
  const double w0 = angular(5.0), wr = angular(7.0), g = angular(0.004);
  const auto h = build_qubit_cavity(w0, angular(0.2), w0, wr, g, 6);
  CHECK(h.dim() == 12);
  CHECK(h.tones().size() == 3);

  const HilbertSpace space({2, 6});
  const Operator a = embed(annihilation(6), 1, space);
  const Operator sx = embed(sigma_x(), 0, space);
  const Matrix coupling_at_zero = h.evaluate(0.0).matrix() - h.static_part().matrix() -
                                  angular(0.2) * sx.matrix();
  CHECK(max_abs(coupling_at_zero - 2.0 * g * ((a + a.adjoint()) * sx).matrix()) < 1e-12);

  const auto uncoupled = build_qubit_cavity(w0, 0.0, w0, wr, 0.0, 6);
  CHECK(max_abs(uncoupled.evaluate(0.77).matrix() - uncoupled.static_part().matrix()) == 0.0);

  CHECK(build_qubit_cavity(w0, 0.1, w0, wr, g, 6, Sidebands::difference).tones().size() == 2);
}

TEST_CASE("rejects non-hermitian tones") {
  CHECK_THROWS(DrivenHamiltonian(sigma_z(), {{annihilation(2), Envelope::constant(1.0), 1.0, 0.0}}));
  CHECK_THROWS(DrivenHamiltonian(sigma_z(), {{identity(3), Envelope::constant(1.0), 1.0, 0.0}}));
}

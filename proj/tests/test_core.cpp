#include "doctest.h"

#include <cmath>

#include "fqk/core.hpp"

using namespace fqk;

TEST_CASE("tensor follows Kronecker order and the qubit convention") {
  const Operator zi = tensor({sigma_z(), identity(2)});
  CHECK(zi.space().factor_dims() == std::vector<std::size_t>{2, 2});
  CHECK(zi.matrix()(0, 0).real() == 1.0);
  CHECK(zi.matrix()(2, 2).real() == -1.0);

  const Operator i6 = tensor({identity(2), identity(3)});
  CHECK(max_abs(i6.matrix() - Matrix::Identity(6, 6)) == 0.0);

  const Operator xx = tensor({sigma_x(), sigma_x()});
  CHECK(max_abs((xx * xx).matrix() - Matrix::Identity(4, 4)) == 0.0);
}

TEST_CASE("tensor is associative") {
  const Operator a = sigma_y();
  const Operator b = annihilation(3);
  const Operator c = sigma_x() + 0.3 * sigma_z();
  const Operator left = tensor({tensor({a, b}), c});
  const Operator right = tensor({a, tensor({b, c})});
  CHECK(max_abs(left.matrix() - right.matrix()) == 0.0);
}

TEST_CASE("dimension cap") {
  CHECK_THROWS_AS(HilbertSpace({64, 65}), DimensionError);
  CHECK_NOTHROW(HilbertSpace({64, 64}));
  CHECK_THROWS_AS(tensor({identity(64), identity(64), identity(2)}), DimensionError);
  CHECK_THROWS_AS(annihilation(1), DimensionError);
}

TEST_CASE("ladder operators") {
  const Operator a2 = annihilation(2);
  CHECK(a2.matrix()(0, 1).real() == 1.0);
  CHECK(std::abs(a2.matrix()(1, 0)) == 0.0);

  const Operator a3 = annihilation(3);
  CHECK(a3.matrix()(0, 1).real() == 1.0);
  CHECK(a3.matrix()(1, 2).real() == doctest::Approx(std::sqrt(2.0)).epsilon(1e-15));

  const std::size_t dim = 12;
  const Operator a = annihilation(dim);
  const Matrix comm = commutator(a, a.adjoint()).matrix();
  for (Eigen::Index k = 0; k + 1 < static_cast<Eigen::Index>(dim); ++k) {
    CHECK(std::abs(comm(k, k) - 1.0) < 1e-14);
  }

  for (std::size_t n = 0; n + 1 < dim; ++n) {
    CHECK(expectation(fock_state(n, dim), number(dim)).real() ==
          doctest::Approx(static_cast<double>(n)));
  }
}

TEST_CASE("coherent state expectation against an explicit Poisson series") {
  const double alpha = 0.5;
  const std::size_t dim = 30;
  // <a> = sum_n sqrt(n) c_{n-1} c_n with c_n = e^{-|a|^2/2} a^n / sqrt(n!)
  double expected = 0.0;
  double c_prev = std::exp(-alpha * alpha / 2.0);
  double norm = c_prev * c_prev;
  for (std::size_t n = 1; n < dim; ++n) {
    const double c = c_prev * alpha / std::sqrt(static_cast<double>(n));
    expected += std::sqrt(static_cast<double>(n)) * c_prev * c;
    norm += c * c;
    c_prev = c;
  }
  expected /= norm;
  const cplx got = expectation(coherent_state(alpha, dim), annihilation(dim));
  CHECK(std::abs(got - expected) < 1e-12);
  CHECK(std::abs(got - 0.5) < 1e-6);
}

TEST_CASE("expectation values") {
  CHECK(std::abs(expectation(fock_state(0, 5), annihilation(5))) == 0.0);
  const auto one = DensityMatrix::pure(StateVector::basis(HilbertSpace::single(2), 1));
  CHECK(expectation(one, sigma_z()).real() == -1.0);
  CHECK_THROWS_AS(expectation(one, identity(3)), SpaceMismatch);
}

TEST_CASE("hermitian expectation is real on random states") {
  std::srand(7);
  for (int trial = 0; trial < 20; ++trial) {
    Matrix m = Matrix::Random(6, 6);
    const Operator h(HilbertSpace({2, 3}), m + m.adjoint());
    Vector v = Vector::Random(6);
    const StateVector psi(h.space(), v / v.norm());
    CHECK(std::abs(expectation(psi, h).imag()) < 1e-10);
    Matrix r = Matrix::Random(6, 6);
    Matrix rho = r * r.adjoint();
    rho /= rho.trace();
    const DensityMatrix dm(h.space(), rho);
    CHECK_NOTHROW(dm.validate());
    CHECK(std::abs(expectation(dm, h).imag()) < 1e-10);
  }
}

TEST_CASE("flags come from numerical checks") {
  CHECK(sigma_x().is_hermitian());
  CHECK(sigma_x().is_unitary());
  CHECK_FALSE(annihilation(3).is_hermitian());
  CHECK_FALSE((2.0 * sigma_x()).is_unitary());
}

TEST_CASE("closed-form two-level exponential agrees with eigen route") {
  Matrix h(2, 2);
  h << 0.7, cplx(0.2, -0.4), cplx(0.2, 0.4), -1.3;
  Matrix h3 = Matrix::Zero(3, 3);
  h3.topLeftCorner(2, 2) = h;
  h3(2, 2) = 5.0;
  const Matrix u2 = hermitian_propagator(h, 0.37);
  const Matrix u3 = hermitian_propagator(h3, 0.37);
  CHECK(max_abs(u2 - u3.topLeftCorner(2, 2)) < 1e-13);
}

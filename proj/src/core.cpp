#include "fqk/core.hpp"

#include <cmath>
#include <numeric>
#include <sstream>

#include <Eigen/Eigenvalues>

namespace fqk {

HilbertSpace::HilbertSpace(std::vector<std::size_t> factor_dims, std::size_t cap)
    : factor_dims_(std::move(factor_dims)) {
  if (factor_dims_.empty()) throw DimensionError("HilbertSpace: no factors");
  std::size_t total = 1;
  for (std::size_t d : factor_dims_) {
    if (d < 2) throw DimensionError("HilbertSpace: factor dimension below 2");
    if (total > cap / d) {
      throw DimensionError("HilbertSpace: total dimension exceeds cap of " +
                           std::to_string(cap));
    }
    total *= d;
  }
  total_dim_ = total;
}

HilbertSpace HilbertSpace::product(const HilbertSpace& other, std::size_t cap) const {
  std::vector<std::size_t> dims = factor_dims_;
  dims.insert(dims.end(), other.factor_dims_.begin(), other.factor_dims_.end());
  return HilbertSpace(std::move(dims), cap);
}

std::string HilbertSpace::describe() const {
  std::ostringstream os;
  for (std::size_t i = 0; i < factor_dims_.size(); ++i) {
    if (i) os << "x";
    os << factor_dims_[i];
  }
  return os.str();
}

double max_abs(const Matrix& m) {
  return m.size() == 0 ? 0.0 : m.cwiseAbs().maxCoeff();
}

Operator::Operator(HilbertSpace space, Matrix matrix)
    : space_(std::move(space)), matrix_(std::move(matrix)) {
  const auto n = static_cast<Eigen::Index>(space_.dim());
  if (matrix_.rows() != n || matrix_.cols() != n) {
    throw DimensionError("Operator: matrix is not " + std::to_string(n) + "x" +
                         std::to_string(n));
  }
  tag();
}

void Operator::tag() {
  hermitian_ = hermiticity_defect() < kFlagTolerance;
  unitary_ = unitarity_defect() < kFlagTolerance;
}

Operator Operator::identity(const HilbertSpace& space) {
  const auto n = static_cast<Eigen::Index>(space.dim());
  return Operator(space, Matrix::Identity(n, n));
}

Operator Operator::zero(const HilbertSpace& space) {
  const auto n = static_cast<Eigen::Index>(space.dim());
  return Operator(space, Matrix::Zero(n, n));
}

double Operator::hermiticity_defect() const {
  return max_abs(matrix_ - matrix_.adjoint());
}

double Operator::unitarity_defect() const {
  const auto n = matrix_.rows();
  return max_abs(matrix_.adjoint() * matrix_ - Matrix::Identity(n, n));
}

Operator Operator::adjoint() const { return Operator(space_, matrix_.adjoint()); }

Operator& Operator::operator+=(const Operator& rhs) {
  if (!(space_ == rhs.space_)) throw SpaceMismatch("Operator +: space mismatch");
  matrix_ += rhs.matrix_;
  tag();
  return *this;
}

Operator& Operator::operator-=(const Operator& rhs) {
  if (!(space_ == rhs.space_)) throw SpaceMismatch("Operator -: space mismatch");
  matrix_ -= rhs.matrix_;
  tag();
  return *this;
}

Operator& Operator::operator*=(cplx s) {
  matrix_ *= s;
  tag();
  return *this;
}

Operator operator*(const Operator& lhs, const Operator& rhs) {
  if (!(lhs.space_ == rhs.space_)) throw SpaceMismatch("Operator *: space mismatch");
  return Operator(lhs.space_, lhs.matrix_ * rhs.matrix_);
}

Operator commutator(const Operator& a, const Operator& b) { return a * b - b * a; }

StateVector::StateVector(HilbertSpace space, Vector amplitudes)
    : space_(std::move(space)), amplitudes_(std::move(amplitudes)) {
  if (amplitudes_.size() != static_cast<Eigen::Index>(space_.dim())) {
    throw DimensionError("StateVector: amplitude count does not match space");
  }
}

StateVector StateVector::basis(const HilbertSpace& space, std::size_t index) {
  if (index >= space.dim()) throw DimensionError("StateVector::basis: index out of range");
  Vector v = Vector::Zero(static_cast<Eigen::Index>(space.dim()));
  v(static_cast<Eigen::Index>(index)) = 1.0;
  return StateVector(space, std::move(v));
}

StateVector StateVector::normalized() const {
  const double n = norm();
  if (n == 0.0) throw std::domain_error("StateVector::normalized: zero vector");
  return StateVector(space_, amplitudes_ / n);
}

cplx StateVector::inner(const StateVector& other) const {
  if (!(space_ == other.space_)) throw SpaceMismatch("StateVector::inner: space mismatch");
  return amplitudes_.dot(other.amplitudes_);
}

DensityMatrix::DensityMatrix(HilbertSpace space, Matrix matrix)
    : space_(std::move(space)), matrix_(std::move(matrix)) {
  const auto n = static_cast<Eigen::Index>(space_.dim());
  if (matrix_.rows() != n || matrix_.cols() != n) {
    throw DimensionError("DensityMatrix: matrix does not match space");
  }
}

DensityMatrix DensityMatrix::pure(const StateVector& psi) {
  return DensityMatrix(psi.space(), psi.amplitudes() * psi.amplitudes().adjoint());
}

double DensityMatrix::hermiticity_defect() const {
  return max_abs(matrix_ - matrix_.adjoint());
}

double DensityMatrix::min_eigenvalue() const {
  const Matrix herm = 0.5 * (matrix_ + matrix_.adjoint());
  Eigen::SelfAdjointEigenSolver<Matrix> solver(herm, Eigen::EigenvaluesOnly);
  return solver.eigenvalues().minCoeff();
}

void DensityMatrix::validate(double trace_tol, double herm_tol,
                             double positivity_tol) const {
  if (std::abs(trace() - 1.0) > trace_tol) {
    throw std::domain_error("DensityMatrix: trace deviates from 1 by " +
                            std::to_string(std::abs(trace() - 1.0)));
  }
  if (hermiticity_defect() > herm_tol) {
    throw std::domain_error("DensityMatrix: not Hermitian");
  }
  if (min_eigenvalue() < -positivity_tol) {
    throw std::domain_error("DensityMatrix: negative eigenvalue " +
                            std::to_string(min_eigenvalue()));
  }
}

namespace {

Matrix kron(const Matrix& a, const Matrix& b) {
  Matrix out(a.rows() * b.rows(), a.cols() * b.cols());
  for (Eigen::Index i = 0; i < a.rows(); ++i) {
    for (Eigen::Index j = 0; j < a.cols(); ++j) {
      out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
    }
  }
  return out;
}

}  // namespace

Operator tensor(std::span<const Operator> ops, std::size_t cap) {
  if (ops.empty()) throw DimensionError("tensor: empty operand list");
  HilbertSpace space = ops.front().space();
  Matrix m = ops.front().matrix();
  for (std::size_t k = 1; k < ops.size(); ++k) {
    space = space.product(ops[k].space(), cap);
    m = kron(m, ops[k].matrix());
  }
  return Operator(std::move(space), std::move(m));
}

Operator tensor(std::initializer_list<Operator> ops) {
  return tensor(std::span<const Operator>(ops.begin(), ops.size()));
}

StateVector tensor(std::initializer_list<StateVector> states) {
  if (states.size() == 0) throw DimensionError("tensor: empty operand list");
  auto it = states.begin();
  HilbertSpace space = it->space();
  Vector v = it->amplitudes();
  for (++it; it != states.end(); ++it) {
    space = space.product(it->space());
    Vector next(v.size() * it->amplitudes().size());
    for (Eigen::Index i = 0; i < v.size(); ++i) {
      next.segment(i * it->amplitudes().size(), it->amplitudes().size()) =
          v(i) * it->amplitudes();
    }
    v = std::move(next);
  }
  return StateVector(std::move(space), std::move(v));
}

Operator embed(const Operator& op, std::size_t index, const HilbertSpace& space) {
  if (index >= space.factor_count()) throw DimensionError("embed: factor index out of range");
  if (op.dim() != space.factor_dims()[index]) {
    throw SpaceMismatch("embed: operator does not match factor dimension");
  }
  std::vector<Operator> parts;
  parts.reserve(space.factor_count());
  for (std::size_t k = 0; k < space.factor_count(); ++k) {
    parts.push_back(k == index ? op : identity(space.factor_dims()[k]));
  }
  return tensor(std::span<const Operator>(parts));
}

Operator sigma_x() {
  Matrix m(2, 2);
  m << 0, 1, 1, 0;
  return Operator(HilbertSpace::single(2), m);
}

Operator sigma_y() {
  Matrix m(2, 2);
  m << 0, cplx(0, -1), cplx(0, 1), 0;
  return Operator(HilbertSpace::single(2), m);
}

Operator sigma_z() {
  Matrix m(2, 2);
  m << 1, 0, 0, -1;
  return Operator(HilbertSpace::single(2), m);
}

Operator identity(std::size_t dim) { return Operator::identity(HilbertSpace::single(dim)); }

Operator annihilation(std::size_t dim) {
  if (dim < 2) throw DimensionError("annihilation: dimension must be at least 2");
  const auto n = static_cast<Eigen::Index>(dim);
  Matrix m = Matrix::Zero(n, n);
  for (Eigen::Index k = 1; k < n; ++k) m(k - 1, k) = std::sqrt(static_cast<double>(k));
  return Operator(HilbertSpace::single(dim), m);
}

Operator creation(std::size_t dim) { return annihilation(dim).adjoint(); }

Operator number(std::size_t dim) { return creation(dim) * annihilation(dim); }

StateVector fock_state(std::size_t n, std::size_t dim) {
  return StateVector::basis(HilbertSpace::single(dim), n);
}

StateVector coherent_state(cplx alpha, std::size_t dim) {
  const auto n = static_cast<Eigen::Index>(dim);
  Vector v(n);
  cplx term = 1.0;
  v(0) = term;
  for (Eigen::Index k = 1; k < n; ++k) {
    term *= alpha / std::sqrt(static_cast<double>(k));
    v(k) = term;
  }
  return StateVector(HilbertSpace::single(dim), v / v.norm());
}

cplx expectation(const StateVector& psi, const Operator& op) {
  if (!(psi.space() == op.space())) throw SpaceMismatch("expectation: space mismatch");
  return psi.amplitudes().dot(op.matrix() * psi.amplitudes());
}

cplx expectation(const DensityMatrix& rho, const Operator& op) {
  if (!(rho.space() == op.space())) throw SpaceMismatch("expectation: space mismatch");
  // Tr(rho op) without forming the product.
  return (rho.matrix().transpose().cwiseProduct(op.matrix())).sum();
}

Matrix hermitian_propagator(const Matrix& h, double dt) {
  if (h.rows() == 2) {
    // H = c0 I + hx sx + hy sy + hz sz
    const cplx c0 = 0.5 * (h(0, 0) + h(1, 1));
    const double hz = 0.5 * std::real(h(0, 0) - h(1, 1));
    const double hx = std::real(h(0, 1));
    const double hy = -std::imag(h(0, 1));
    const double r = std::sqrt(hx * hx + hy * hy + hz * hz);
    const double c = std::cos(r * dt);
    const double s = r > 0 ? std::sin(r * dt) / r : dt;
    const cplx phase = std::exp(cplx(0, -1) * c0 * dt);
    Matrix u(2, 2);
    u(0, 0) = cplx(c, -s * hz);
    u(1, 1) = cplx(c, s * hz);
    u(0, 1) = cplx(-s * hy, -s * hx);
    u(1, 0) = cplx(s * hy, -s * hx);
    return phase * u;
  }
  Eigen::SelfAdjointEigenSolver<Matrix> solver(h);
  const Vector phases =
      (solver.eigenvalues().cast<cplx>() * cplx(0, -dt)).array().exp().matrix();
  return solver.eigenvectors() * phases.asDiagonal() * solver.eigenvectors().adjoint();
}

}  // namespace fqk

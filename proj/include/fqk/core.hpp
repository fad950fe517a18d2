#pragma once

// Dense finite-dimensional Hilbert spaces, operators and states.
//
// Qubit convention used throughout the library: sigma_z = diag(+1, -1), so
// |0> is the +1 eigenstate of sigma_z and carries the +omega_0/2 energy of
// H = (omega_0/2) sigma_z.

#include <complex>
#include <cstddef>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace fqk {

using cplx = std::complex<double>;
using Matrix = Eigen::MatrixXcd;
using Vector = Eigen::VectorXcd;

inline constexpr double kTwoPi = 6.283185307179586476925286766559;
inline constexpr double kPi = 3.141592653589793238462643383279;

/// GHz (ordinary frequency) to rad/ns.
constexpr double angular(double ghz) { return kTwoPi * ghz; }
/// rad/ns to GHz.
constexpr double ordinary(double rad_per_ns) { return rad_per_ns / kTwoPi; }

class DimensionError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

class SpaceMismatch : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Ordered list of subsystem dimensions. Immutable.
class HilbertSpace {
 public:
  static constexpr std::size_t kDefaultDimensionCap = 4096;

  explicit HilbertSpace(std::vector<std::size_t> factor_dims,
                        std::size_t cap = kDefaultDimensionCap);
  static HilbertSpace single(std::size_t dim) { return HilbertSpace({dim}); }

  const std::vector<std::size_t>& factor_dims() const { return factor_dims_; }
  std::size_t dim() const { return total_dim_; }
  std::size_t factor_count() const { return factor_dims_.size(); }

  /// Concatenates factor lists (Kronecker order: this, then other).
  HilbertSpace product(const HilbertSpace& other,
                       std::size_t cap = kDefaultDimensionCap) const;

  friend bool operator==(const HilbertSpace&, const HilbertSpace&) = default;
  std::string describe() const;

 private:
  std::vector<std::size_t> factor_dims_;
  std::size_t total_dim_ = 0;
};

class Operator {
 public:
  Operator(HilbertSpace space, Matrix matrix);

  static Operator identity(const HilbertSpace& space);
  static Operator zero(const HilbertSpace& space);

  const HilbertSpace& space() const { return space_; }
  const Matrix& matrix() const { return matrix_; }
  std::size_t dim() const { return space_.dim(); }

  // Flags are set only from an explicit numerical check at construction.
  bool is_hermitian() const { return hermitian_; }
  bool is_unitary() const { return unitary_; }

  /// max |M - M^dagger|
  double hermiticity_defect() const;
  /// max |M^dagger M - I|
  double unitarity_defect() const;

  Operator adjoint() const;

  Operator& operator+=(const Operator& rhs);
  Operator& operator-=(const Operator& rhs);
  Operator& operator*=(cplx s);

  friend Operator operator+(Operator lhs, const Operator& rhs) { return lhs += rhs; }
  friend Operator operator-(Operator lhs, const Operator& rhs) { return lhs -= rhs; }
  friend Operator operator*(cplx s, Operator op) { return op *= s; }
  friend Operator operator*(Operator op, cplx s) { return op *= s; }
  friend Operator operator*(const Operator& lhs, const Operator& rhs);

  static constexpr double kFlagTolerance = 1e-10;

 private:
  void tag();

  HilbertSpace space_;
  Matrix matrix_;
  bool hermitian_ = false;
  bool unitary_ = false;
};

Operator commutator(const Operator& a, const Operator& b);

class StateVector {
 public:
  StateVector(HilbertSpace space, Vector amplitudes);

  static StateVector basis(const HilbertSpace& space, std::size_t index);

  const HilbertSpace& space() const { return space_; }
  const Vector& amplitudes() const { return amplitudes_; }
  std::size_t dim() const { return space_.dim(); }
  double norm() const { return amplitudes_.norm(); }

  StateVector normalized() const;
  /// <this|other>
  cplx inner(const StateVector& other) const;

 private:
  HilbertSpace space_;
  Vector amplitudes_;
};

class DensityMatrix {
 public:
  DensityMatrix(HilbertSpace space, Matrix matrix);

  static DensityMatrix pure(const StateVector& psi);

  const HilbertSpace& space() const { return space_; }
  const Matrix& matrix() const { return matrix_; }
  std::size_t dim() const { return space_.dim(); }

  cplx trace() const { return matrix_.trace(); }
  double hermiticity_defect() const;
  double min_eigenvalue() const;

  /// Throws std::domain_error when trace, Hermiticity or positivity are
  /// outside the given tolerances.
  void validate(double trace_tol = 1e-9, double herm_tol = 1e-9,
                double positivity_tol = 1e-7) const;

 private:
  HilbertSpace space_;
  Matrix matrix_;
};

/// Kronecker product in listed order.
Operator tensor(std::span<const Operator> ops,
                std::size_t cap = HilbertSpace::kDefaultDimensionCap);
Operator tensor(std::initializer_list<Operator> ops);
StateVector tensor(std::initializer_list<StateVector> states);

/// Places `op` on factor `index` of `space`, identities elsewhere.
Operator embed(const Operator& op, std::size_t index, const HilbertSpace& space);

Operator sigma_x();
Operator sigma_y();
Operator sigma_z();
Operator identity(std::size_t dim);

/// Truncated bosonic lowering operator with sqrt(n) on the superdiagonal.
Operator annihilation(std::size_t dim);
Operator creation(std::size_t dim);
Operator number(std::size_t dim);

StateVector fock_state(std::size_t n, std::size_t dim);
/// Truncated coherent state, normalized after truncation.
StateVector coherent_state(cplx alpha, std::size_t dim);

cplx expectation(const StateVector& psi, const Operator& op);
cplx expectation(const DensityMatrix& rho, const Operator& op);

double max_abs(const Matrix& m);

/// exp(-i dt H) for Hermitian H. Closed form for 2x2, eigendecomposition otherwise.
Matrix hermitian_propagator(const Matrix& h, double dt);

}  // namespace fqk

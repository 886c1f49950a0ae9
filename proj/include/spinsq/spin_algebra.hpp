#pragma once

#include <complex>
#include <cstdint>
#include <string_view>

#include <Eigen/Dense>

namespace spinsq {

using cplx = std::complex<double>;
using Matrix = Eigen::MatrixXcd;
using Vector = Eigen::VectorXcd;

enum class Axis { X, Y, Z };

std::string_view to_string(Axis axis);
Axis parse_axis(std::string_view name);
Eigen::Vector3d unit_vector(Axis axis);

/// Symmetric (j = N/2) sector of N spin-1/2 particles.
///
/// Basis order is descending magnetization: index k holds |j, m = j - k>, so
/// index 0 is the fully polarized state |j, j>.
class DickeSpace {
 public:
  explicit DickeSpace(int n_spins);

  int n_spins() const noexcept { return n_spins_; }
  int dim() const noexcept { return n_spins_ + 1; }
  double j() const noexcept { return 0.5 * n_spins_; }
  double casimir() const noexcept { return j() * (j() + 1.0); }
  /// Magnetic quantum number of basis index k.
  double m(int k) const noexcept { return j() - k; }

  bool operator==(const DickeSpace&) const = default;

 private:
  int n_spins_;
};

DickeSpace build_space(int n_spins);

enum class OperatorLabel { Sx, Sy, Sz, SPlus, SMinus, S2, Custom };

std::string_view to_string(OperatorLabel label);

struct SpinOperator {
  Matrix matrix;
  OperatorLabel label = OperatorLabel::Custom;

  Eigen::Index dim() const { return matrix.rows(); }
};

SpinOperator collective_operator(const DickeSpace& space, OperatorLabel label);
inline SpinOperator collective_operator(const DickeSpace& space, Axis axis) {
  constexpr OperatorLabel labels[] = {OperatorLabel::Sx, OperatorLabel::Sy,
                                      OperatorLabel::Sz};
  return collective_operator(space, labels[static_cast<int>(axis)]);
}

/// a Sx^2 + b Sy^2 + c Sz^2.
SpinOperator quadratic_form(const DickeSpace& space, double a, double b,
                            double c);

/// Largest entrywise modulus of M - M^dagger.
double hermiticity_defect(const Matrix& m);

// Matrix-free application of the collective operators. Sx and Sy are
// tridiagonal in the Dicke basis, so these run in O(dim).
Vector apply_sx(const DickeSpace& space, const Vector& psi);
Vector apply_sy(const DickeSpace& space, const Vector& psi);
Vector apply_sz(const DickeSpace& space, const Vector& psi);

/// Spectral decomposition H = V diag(values) V^dagger of a Hermitian matrix.
struct HermitianEigensystem {
  Eigen::VectorXd values;
  Matrix vectors;

  static HermitianEigensystem of(const Matrix& hermitian);

  /// exp(-i t H) psi.
  Vector propagate(double t, const Vector& psi) const;
  /// exp(-i t H) as a dense matrix.
  Matrix exponential(double t) const;
};

/// FNV-1a over the raw matrix bytes, including its shape.
std::uint64_t content_hash(const Matrix& m);

}  // namespace spinsq

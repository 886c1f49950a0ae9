#include "spinsq/spin_algebra.hpp"

#include <cmath>
#include <cstring>
#include <limits>
#include <string>

#include "spinsq/errors.hpp"

namespace spinsq {

namespace {

// <j, m+1| S+ |j, m> for the basis state at index k (m = j - k), k >= 1.
double raising_coefficient(const DickeSpace& space, int k) {
  const double j = space.j();
  const double m = space.m(k);
  return std::sqrt(std::max(0.0, j * (j + 1.0) - m * (m + 1.0)));
}

}  // namespace

std::string_view to_string(Axis axis) {
  switch (axis) {
    case Axis::X: return "x";
    case Axis::Y: return "y";
    case Axis::Z: return "z";
  }
  return "?";
}

Axis parse_axis(std::string_view name) {
  if (name == "x" || name == "X") return Axis::X;
  if (name == "y" || name == "Y") return Axis::Y;
  if (name == "z" || name == "Z") return Axis::Z;
  throw Error(ErrorKind::InvalidArgument,
              "unknown axis '" + std::string(name) + "' (expected x, y or z)");
}

Eigen::Vector3d unit_vector(Axis axis) {
  return Eigen::Vector3d::Unit(static_cast<int>(axis));
}

DickeSpace::DickeSpace(int n_spins) : n_spins_(n_spins) {
  if (n_spins < 1) {
    throw Error(ErrorKind::InvalidSize,
                "n_spins must be >= 1, got " + std::to_string(n_spins));
  }
}

DickeSpace build_space(int n_spins) { return DickeSpace(n_spins); }

std::string_view to_string(OperatorLabel label) {
  switch (label) {
    case OperatorLabel::Sx: return "Sx";
    case OperatorLabel::Sy: return "Sy";
    case OperatorLabel::Sz: return "Sz";
    case OperatorLabel::SPlus: return "S+";
    case OperatorLabel::SMinus: return "S-";
    case OperatorLabel::S2: return "S2";
    case OperatorLabel::Custom: return "custom";
  }
  return "?";
}

SpinOperator collective_operator(const DickeSpace& space, OperatorLabel label) {
  const int d = space.dim();
  Matrix plus = Matrix::Zero(d, d);
  for (int k = 1; k < d; ++k) plus(k - 1, k) = raising_coefficient(space, k);

  SpinOperator op{Matrix::Zero(d, d), label};
  switch (label) {
    case OperatorLabel::SPlus:
      op.matrix = plus;
      break;
    case OperatorLabel::SMinus:
      op.matrix = plus.adjoint();
      break;
    case OperatorLabel::Sx:
      op.matrix = 0.5 * (plus + plus.adjoint());
      break;
    case OperatorLabel::Sy:
      op.matrix = cplx(0.0, -0.5) * (plus - plus.adjoint());
      break;
    case OperatorLabel::Sz:
      for (int k = 0; k < d; ++k) op.matrix(k, k) = space.m(k);
      break;
    case OperatorLabel::S2:
      op.matrix = Matrix::Identity(d, d) * space.casimir();
      break;
    case OperatorLabel::Custom:
      throw Error(ErrorKind::InvalidLabel,
                  "collective_operator: 'custom' is not a collective operator");
  }
  return op;
}

SpinOperator quadratic_form(const DickeSpace& space, double a, double b,
                            double c) {
  const Matrix sx = collective_operator(space, OperatorLabel::Sx).matrix;
  const Matrix sy = collective_operator(space, OperatorLabel::Sy).matrix;
  const Matrix sz = collective_operator(space, OperatorLabel::Sz).matrix;
  Matrix h = a * (sx * sx) + b * (sy * sy) + c * (sz * sz);
  // Remove rounding asymmetry so downstream Hermiticity checks are exact.
  h = 0.5 * (h + h.adjoint()).eval();
  return {std::move(h), OperatorLabel::Custom};
}

double hermiticity_defect(const Matrix& m) {
  if (m.rows() != m.cols()) return std::numeric_limits<double>::infinity();
  return (m - m.adjoint()).cwiseAbs().maxCoeff();
}

Vector apply_sx(const DickeSpace& space, const Vector& psi) {
  const int d = space.dim();
  Vector out = Vector::Zero(d);
  for (int k = 1; k < d; ++k) {
    const double c = 0.5 * raising_coefficient(space, k);
    out(k - 1) += c * psi(k);
    out(k) += c * psi(k - 1);
  }
  return out;
}

Vector apply_sy(const DickeSpace& space, const Vector& psi) {
  const int d = space.dim();
  Vector out = Vector::Zero(d);
  const cplx half_i(0.0, 0.5);
  for (int k = 1; k < d; ++k) {
    const double c = raising_coefficient(space, k);
    // Sy = (S+ - S-) / (2i)
    out(k - 1) -= half_i * c * psi(k);
    out(k) += half_i * c * psi(k - 1);
  }
  return out;
}

Vector apply_sz(const DickeSpace& space, const Vector& psi) {
  Vector out(space.dim());
  for (int k = 0; k < space.dim(); ++k) out(k) = space.m(k) * psi(k);
  return out;
}

HermitianEigensystem HermitianEigensystem::of(const Matrix& hermitian) {
  Eigen::SelfAdjointEigenSolver<Matrix> solver(hermitian);
  if (solver.info() != Eigen::Success) {
    throw Error(ErrorKind::InvalidArgument, "eigendecomposition did not converge");
  }
  return {solver.eigenvalues(), solver.eigenvectors()};
}

Vector HermitianEigensystem::propagate(double t, const Vector& psi) const {
  Vector coeffs = vectors.adjoint() * psi;
  for (Eigen::Index k = 0; k < coeffs.size(); ++k) {
    coeffs(k) *= std::polar(1.0, -values(k) * t);
  }
  return vectors * coeffs;
}

Matrix HermitianEigensystem::exponential(double t) const {
  Vector phases(values.size());
  for (Eigen::Index k = 0; k < values.size(); ++k) {
    phases(k) = std::polar(1.0, -values(k) * t);
  }
  return vectors * phases.asDiagonal() * vectors.adjoint();
}

std::uint64_t content_hash(const Matrix& m) {
  std::uint64_t h = 1469598103934665603ULL;
  auto mix = [&h](const void* data, std::size_t n) {
    const auto* bytes = static_cast<const unsigned char*>(data);
    for (std::size_t i = 0; i < n; ++i) {
      h ^= bytes[i];
      h *= 1099511628211ULL;
    }
  };
  const Eigen::Index shape[2] = {m.rows(), m.cols()};
  mix(shape, sizeof(shape));
  mix(m.data(), sizeof(cplx) * static_cast<std::size_t>(m.size()));
  return h;
}

}  // namespace spinsq

#include "spinsq/state.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "spinsq/errors.hpp"

namespace spinsq {

namespace {

Matrix generator(const DickeSpace& space, const Eigen::Vector3d& n) {
  Matrix g = n.x() * collective_operator(space, Axis::X).matrix +
             n.y() * collective_operator(space, Axis::Y).matrix +
             n.z() * collective_operator(space, Axis::Z).matrix;
  return 0.5 * (g + g.adjoint());
}

Vector polarized(const DickeSpace& space) {
  Vector psi = Vector::Zero(space.dim());
  psi(0) = 1.0;
  return psi;
}

}  // namespace

Eigen::Vector3d BlochAngles::direction() const {
  return {std::sin(theta) * std::cos(phi), std::sin(theta) * std::sin(phi),
          std::cos(theta)};
}

BlochAngles BlochAngles::along(const Eigen::Vector3d& direction) {
  const Eigen::Vector3d n = direction.normalized();
  BlochAngles angles;
  angles.theta = std::acos(std::clamp(n.z(), -1.0, 1.0));
  double phi = std::atan2(n.y(), n.x());
  if (phi < 0) phi += 2.0 * std::numbers::pi;
  angles.phi = phi;
  return angles;
}

double overlap_modulus(const SpinState& a, const SpinState& b) {
  if (a.amplitudes.size() != b.amplitudes.size()) {
    throw Error(ErrorKind::DimensionMismatch, "states live in different spaces");
  }
  return std::abs(a.amplitudes.dot(b.amplitudes));
}

SpinState coherent_state(const DickeSpace& space, const BlochAngles& angles) {
  // exp(i theta G) with G = Sx sin(phi) - Sy cos(phi), i.e. a rotation by
  // theta about (-sin(phi), cos(phi), 0) taking +z to the Bloch direction.
  const Eigen::Vector3d n{std::sin(angles.phi), -std::cos(angles.phi), 0.0};
  const auto eig = HermitianEigensystem::of(generator(space, n));
  return {space, eig.propagate(-angles.theta, polarized(space))};
}

SpinOperator rotation(const DickeSpace& space, Axis axis, double angle) {
  return rotation(space, unit_vector(axis), angle);
}

SpinOperator rotation(const DickeSpace& space, const Eigen::Vector3d& axis,
                      double angle) {
  const double len = axis.norm();
  if (!(len > 0.0)) {
    throw Error(ErrorKind::InvalidArgument, "rotation axis must be non-zero");
  }
  const auto eig = HermitianEigensystem::of(generator(space, axis / len));
  return {eig.exponential(angle), OperatorLabel::Custom};
}

Matrix frame_unitary(const DickeSpace& space, const Eigen::Matrix3d& frame) {
  // frame = Rz(a) Ry(b) Rz(c); the map U -> (U^dag S U coefficients) is a
  // homomorphism with exp(-i t Sz) -> Rz(t) and exp(-i t Sy) -> Ry(t).
  const double b = std::acos(std::clamp(frame(2, 2), -1.0, 1.0));
  double a = 0.0;
  double c = 0.0;
  if (std::sin(b) > 1e-12) {
    a = std::atan2(frame(1, 2), frame(0, 2));
    c = std::atan2(frame(2, 1), -frame(2, 0));
  } else if (frame(2, 2) > 0) {
    a = std::atan2(frame(1, 0), frame(0, 0));
  } else {
    a = std::atan2(-frame(0, 1), -frame(0, 0));
  }
  return rotation(space, Axis::Z, a).matrix * rotation(space, Axis::Y, b).matrix *
         rotation(space, Axis::Z, c).matrix;
}

RotationKit::RotationKit(const DickeSpace& space)
    : space_(space),
      sx_(HermitianEigensystem::of(collective_operator(space, Axis::X).matrix)),
      sy_(HermitianEigensystem::of(collective_operator(space, Axis::Y).matrix)) {}

void RotationKit::apply_z(double angle, Vector& psi) const {
  for (int k = 0; k < space_.dim(); ++k) psi(k) *= std::polar(1.0, -angle * space_.m(k));
}

void RotationKit::apply(Axis axis, double angle, Vector& psi) const {
  switch (axis) {
    case Axis::X: psi = sx_.propagate(angle, psi); break;
    case Axis::Y: psi = sy_.propagate(angle, psi); break;
    case Axis::Z: apply_z(angle, psi); break;
  }
}

void RotationKit::apply(const Eigen::Vector3d& axis, double angle,
                        Vector& psi) const {
  const Eigen::Vector3d n = axis.normalized();
  for (int a = 0; a < 3; ++a) {
    if (std::abs(n(a)) == 1.0) {
      apply(static_cast<Axis>(a), n(a) * angle, psi);
      return;
    }
  }
  const double polar = std::acos(std::clamp(n.z(), -1.0, 1.0));
  const double azimuth = std::atan2(n.y(), n.x());
  // R_n(angle) = Rz(az) Ry(pol) Rz(angle) Ry(-pol) Rz(-az)
  apply_z(-azimuth, psi);
  psi = sy_.propagate(-polar, psi);
  apply_z(angle, psi);
  psi = sy_.propagate(polar, psi);
  apply_z(azimuth, psi);
}

}  // namespace spinsq

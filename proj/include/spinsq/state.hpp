#pragma once

#include <Eigen/Dense>

#include "spinsq/spin_algebra.hpp"

namespace spinsq {

/// Polar angle theta from +z in [0, pi], azimuth phi from +x in [0, 2 pi).
struct BlochAngles {
  double theta = 0.0;
  double phi = 0.0;

  Eigen::Vector3d direction() const;
  static BlochAngles along(const Eigen::Vector3d& direction);
};

struct SpinState {
  DickeSpace space;
  Vector amplitudes;

  double norm() const { return amplitudes.norm(); }
};

/// |<a|b>|, insensitive to global phase.
double overlap_modulus(const SpinState& a, const SpinState& b);

/// exp(i theta (Sx sin(phi) - Sy cos(phi))) |j, j>, evaluated through the
/// eigendecomposition of the generator.
SpinState coherent_state(const DickeSpace& space, const BlochAngles& angles);

/// exp(-i angle S_axis).
SpinOperator rotation(const DickeSpace& space, Axis axis, double angle);

/// exp(-i angle n.S) for a unit vector n.
SpinOperator rotation(const DickeSpace& space, const Eigen::Vector3d& axis,
                      double angle);

/// Unitary U with U^dagger S_a U = sum_b frame(a, b) S_b for a proper
/// rotation matrix (det = +1).
Matrix frame_unitary(const DickeSpace& space, const Eigen::Matrix3d& frame);

/// Rotations applied to state vectors without building dense matrices.
///
/// Keeps the eigendecompositions of Sx and Sy; Sz is diagonal. A rotation
/// about an arbitrary axis is composed from z and y rotations, so every
/// application is O(dim^2).
class RotationKit {
 public:
  explicit RotationKit(const DickeSpace& space);

  const DickeSpace& space() const noexcept { return space_; }

  void apply(Axis axis, double angle, Vector& psi) const;
  void apply(const Eigen::Vector3d& axis, double angle, Vector& psi) const;

 private:
  void apply_z(double angle, Vector& psi) const;

  DickeSpace space_;
  HermitianEigensystem sx_;
  HermitianEigensystem sy_;
};

}  // namespace spinsq

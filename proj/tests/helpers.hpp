#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>

#include <Eigen/Dense>

#include "spinsq/spin_algebra.hpp"
#include "spinsq/state.hpp"

namespace spinsq::testing {

inline double max_abs(const Matrix& m) { return m.cwiseAbs().maxCoeff(); }

inline Eigen::Matrix3d random_rotation(std::mt19937_64& rng) {
  std::normal_distribution<double> normal;
  Eigen::Matrix3d g;
  for (int i = 0; i < 9; ++i) g(i) = normal(rng);
  Eigen::HouseholderQR<Eigen::Matrix3d> qr(g);
  Eigen::Matrix3d q = qr.householderQ();
  if (q.determinant() < 0) q.col(0) *= -1.0;
  return q;
}

inline SpinState random_state(const DickeSpace& space, std::mt19937_64& rng) {
  std::normal_distribution<double> normal;
  Vector v(space.dim());
  for (int k = 0; k < space.dim(); ++k) v(k) = cplx(normal(rng), normal(rng));
  return {space, v.normalized()};
}

// Minimum of 4 Var(n.S) / N over directions n perpendicular to the mean
// spin: 3600-angle scan followed by golden-section polishing of the best
// bracket, evaluating variances from dense operator matrices.
inline double brute_force_xi2(const SpinState& s) {
  const DickeSpace& space = s.space;
  const std::array<Matrix, 3> ops = {collective_operator(space, Axis::X).matrix,
                                     collective_operator(space, Axis::Y).matrix,
                                     collective_operator(space, Axis::Z).matrix};
  const Vector& psi = s.amplitudes;
  Eigen::Vector3d mean;
  for (int a = 0; a < 3; ++a) mean(a) = psi.dot(ops[a] * psi).real();
  const Eigen::Vector3d n = mean.normalized();
  Eigen::Vector3d e1 = n.cross(Eigen::Vector3d(0.3, -0.5, 0.8)).normalized();
  const Eigen::Vector3d e2 = n.cross(e1);
  auto variance = [&](double angle) {
    const Eigen::Vector3d dir = std::cos(angle) * e1 + std::sin(angle) * e2;
    const Matrix op = dir(0) * ops[0] + dir(1) * ops[1] + dir(2) * ops[2];
    const Vector v = op * psi;
    const double m1 = psi.dot(v).real();
    return v.squaredNorm() - m1 * m1;
  };
  const int steps = 3600;
  const double h = 2 * std::numbers::pi / steps;
  int best = 0;
  double best_value = variance(0.0);
  for (int k = 1; k < steps; ++k) {
    const double v = variance(k * h);
    if (v < best_value) {
      best_value = v;
      best = k;
    }
  }
  double lo = (best - 1) * h;
  double hi = (best + 1) * h;
  for (int it = 0; it < 80; ++it) {
    const double m1 = lo + (hi - lo) / 3;
    const double m2 = hi - (hi - lo) / 3;
    if (variance(m1) < variance(m2)) hi = m2; else lo = m1;
  }
  return 4.0 * std::min(best_value, variance(0.5 * (lo + hi))) / space.n_spins();
}

}  // namespace spinsq::testing

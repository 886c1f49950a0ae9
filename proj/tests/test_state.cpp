#include "doctest.h"

#include <cmath>
#include <numbers>
#include <random>

#include "helpers.hpp"
#include "spinsq/state.hpp"

using namespace spinsq;
using spinsq::testing::max_abs;
using std::numbers::pi;

namespace {

Eigen::Vector3d mean_spin(const SpinState& s) {
  const auto& psi = s.amplitudes;
  return {psi.dot(apply_sx(s.space, psi)).real(), psi.dot(apply_sy(s.space, psi)).real(),
          psi.dot(apply_sz(s.space, psi)).real()};
}

// Independent closed form: product of cos(theta/2)|up> + e^{i phi} sin(theta/2)|down>
// projected on the Dicke basis.
Vector binomial_amplitudes(int n, double theta, double phi) {
  Vector c(n + 1);
  for (int k = 0; k <= n; ++k) {
    const double binom =
        std::exp(std::lgamma(n + 1.0) - std::lgamma(k + 1.0) - std::lgamma(n - k + 1.0));
    c(k) = std::sqrt(binom) * std::pow(std::cos(theta / 2), n - k) *
           std::pow(std::sin(theta / 2), k) * std::polar(1.0, k * phi);
  }
  return c;
}

Eigen::Matrix3d rz(double t) {
  return Eigen::AngleAxisd(t, Eigen::Vector3d::UnitZ()).toRotationMatrix();
}
Eigen::Matrix3d ry(double t) {
  return Eigen::AngleAxisd(t, Eigen::Vector3d::UnitY()).toRotationMatrix();
}

}  // namespace

TEST_CASE("coherent state at the pole is |j, j>") {
  const DickeSpace space(7);
  for (double phi : {0.0, 1.3, 4.0}) {
    const SpinState s = coherent_state(space, {0.0, phi});
    CHECK(std::abs(s.amplitudes(0)) == doctest::Approx(1.0));
    CHECK(s.amplitudes.tail(7).norm() < 1e-14);
  }
}

TEST_CASE("optimal initial state points along +y") {
  const DickeSpace space(100);
  const Eigen::Vector3d m = mean_spin(coherent_state(space, {pi / 2, pi / 2}));
  CHECK(std::abs(m.y() - 50.0) < 1e-10);
  CHECK(std::abs(m.x()) < 1e-10);
  CHECK(std::abs(m.z()) < 1e-10);
}

TEST_CASE("coherent state matches the binomial closed form") {
  const SpinState s = coherent_state(DickeSpace(4), {pi / 2, 0.0});
  CHECK(std::abs(s.amplitudes.dot(binomial_amplitudes(4, pi / 2, 0.0))) ==
        doctest::Approx(1.0).epsilon(1e-12));
  // With phi != 0 the relative phase is e^{+i k phi} for k spins down.
  for (double phi : {0.4, 2.0, 5.5}) {
    const SpinState t = coherent_state(DickeSpace(9), {1.1, phi});
    CHECK(std::abs(t.amplitudes.dot(binomial_amplitudes(9, 1.1, phi))) ==
          doctest::Approx(1.0).epsilon(1e-12));
  }
}

TEST_CASE("mean spin follows the Bloch angles") {
  for (int n : {3, 40, 200}) {
    const DickeSpace space(n);
    for (int a = 0; a < 5; ++a) {
      for (int b = 0; b < 5; ++b) {
        const BlochAngles angles{pi * a / 4.0, 2.0 * pi * b / 5.0};
        const SpinState s = coherent_state(space, angles);
        CHECK(std::abs(s.norm() - 1.0) < 1e-10);
        const Eigen::Vector3d m = mean_spin(s);
        CHECK(std::abs(m.norm() - 0.5 * n) < 1e-9 * n);
        CHECK((m.normalized() - angles.direction()).norm() < 1e-9);
      }
    }
  }
}

TEST_CASE("rotations") {
  const DickeSpace space(6);
  const int d = space.dim();
  const Matrix full = rotation(space, Axis::Z, 2 * pi).matrix;
  CHECK(max_abs(full * rotation(space, Axis::Z, -2 * pi).matrix - Matrix::Identity(d, d)) <
        1e-10);

  const Matrix ry_half = rotation(space, Axis::Y, pi / 2).matrix;
  CHECK(max_abs(ry_half * ry_half.adjoint() - Matrix::Identity(d, d)) < 1e-10);
  const SpinState rotated{space, ry_half * coherent_state(space, {0.0, 0.0}).amplitudes};
  CHECK(overlap_modulus(rotated, coherent_state(space, {pi / 2, 0.0})) ==
        doctest::Approx(1.0).epsilon(1e-12));

  const Matrix sx = collective_operator(space, Axis::X).matrix;
  const Matrix sy = collective_operator(space, Axis::Y).matrix;
  const Matrix conj = rotation(space, Axis::Z, -pi / 2).matrix * sx * sx *
                      rotation(space, Axis::Z, pi / 2).matrix;
  CHECK(max_abs(conj - sy * sy) < 1e-10);
}

TEST_CASE("rotation kit agrees with dense rotations") {
  std::mt19937_64 rng(3);
  const DickeSpace space(11);
  const RotationKit kit(space);
  const SpinState start = spinsq::testing::random_state(space, rng);
  for (Axis axis : {Axis::X, Axis::Y, Axis::Z}) {
    Vector psi = start.amplitudes;
    kit.apply(axis, 0.83, psi);
    CHECK((psi - rotation(space, axis, 0.83).matrix * start.amplitudes).norm() < 1e-12);
  }
  for (int trial = 0; trial < 10; ++trial) {
    Eigen::Vector3d n = Eigen::Vector3d::Random().normalized();
    Vector psi = start.amplitudes;
    kit.apply(n, 1.7, psi);
    CHECK((psi - rotation(space, n, 1.7).matrix * start.amplitudes).norm() < 1e-11);
    CHECK(std::abs(psi.norm() - 1.0) < 1e-12);
  }
}

TEST_CASE("frame unitary realizes the frame") {
  std::mt19937_64 rng(17);
  const DickeSpace space(5);
  const std::array<Matrix, 3> s = {collective_operator(space, Axis::X).matrix,
                                   collective_operator(space, Axis::Y).matrix,
                                   collective_operator(space, Axis::Z).matrix};
  std::vector<Eigen::Matrix3d> frames = {Eigen::Matrix3d::Identity(), ry(pi), rz(0.7),
                                         ry(pi) * rz(0.4), rz(1.0) * ry(1e-14)};
  Eigen::Matrix3d xz_swap;
  xz_swap << 0, 0, 1, 0, -1, 0, 1, 0, 0;
  frames.push_back(xz_swap);
  for (int i = 0; i < 10; ++i) frames.push_back(spinsq::testing::random_rotation(rng));

  for (const auto& q : frames) {
    const Matrix u = frame_unitary(space, q);
    for (int a = 0; a < 3; ++a) {
      Matrix expected = Matrix::Zero(6, 6);
      for (int b = 0; b < 3; ++b) expected += q(a, b) * s[b];
      CHECK(max_abs(u.adjoint() * s[a] * u - expected) < 1e-10);
    }
  }
}

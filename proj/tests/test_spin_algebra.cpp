#include "doctest.h"

#include <random>

#include "helpers.hpp"
#include "spinsq/errors.hpp"
#include "spinsq/spin_algebra.hpp"

using namespace spinsq;
using spinsq::testing::max_abs;

TEST_CASE("build_space dimensions") {
  CHECK(build_space(100).dim() == 101);
  CHECK(build_space(100).j() == 50.0);
  CHECK(build_space(1).dim() == 2);
  CHECK(build_space(1).j() == 0.5);
  CHECK(build_space(6).dim() == 7);
  CHECK(build_space(6).j() == 3.0);
  CHECK(build_space(6).m(0) == 3.0);
  CHECK(build_space(6).m(6) == -3.0);

  try {
    build_space(0);
    FAIL("expected InvalidSize");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::InvalidSize);
  }
}

TEST_CASE("single spin operators are Pauli / 2") {
  const auto space = build_space(1);
  const Matrix sz = collective_operator(space, OperatorLabel::Sz).matrix;
  CHECK(sz(0, 0).real() == doctest::Approx(0.5));
  CHECK(sz(1, 1).real() == doctest::Approx(-0.5));
  CHECK(std::abs(sz(0, 1)) == 0.0);
  const Matrix sy = collective_operator(space, OperatorLabel::Sy).matrix;
  CHECK(std::abs(sy(0, 1) - cplx(0, -0.5)) < 1e-15);
  CHECK(std::abs(sy(1, 0) - cplx(0, 0.5)) < 1e-15);
}

TEST_CASE("S^2 for two spins is 2 * identity") {
  const auto space = build_space(2);
  const Matrix s2 = collective_operator(space, OperatorLabel::S2).matrix;
  CHECK(max_abs(s2 - 2.0 * Matrix::Identity(3, 3)) == 0.0);
}

TEST_CASE("angular momentum algebra") {
  for (int n : {1, 2, 6, 20, 100}) {
    CAPTURE(n);
    const auto space = build_space(n);
    const Matrix sx = collective_operator(space, Axis::X).matrix;
    const Matrix sy = collective_operator(space, Axis::Y).matrix;
    const Matrix sz = collective_operator(space, Axis::Z).matrix;
    const cplx i(0, 1);
    CHECK(max_abs(sx * sy - sy * sx - i * sz) < 1e-10);
    CHECK(max_abs(sy * sz - sz * sy - i * sx) < 1e-10);
    CHECK(max_abs(sz * sx - sx * sz - i * sy) < 1e-10);

    const Matrix casimir = sx * sx + sy * sy + sz * sz;
    CHECK(max_abs(casimir - space.casimir() * Matrix::Identity(n + 1, n + 1)) < 1e-10);

    for (auto label : {OperatorLabel::Sx, OperatorLabel::Sy, OperatorLabel::Sz,
                       OperatorLabel::S2}) {
      CHECK(hermiticity_defect(collective_operator(space, label).matrix) < 1e-12);
    }

    const Matrix plus = collective_operator(space, OperatorLabel::SPlus).matrix;
    const Matrix minus = collective_operator(space, OperatorLabel::SMinus).matrix;
    CHECK(plus.col(0).norm() == 0.0);      // S+ |j, j> = 0
    CHECK(minus.col(n).norm() == 0.0);     // S- |j, -j> = 0
    CHECK(max_abs(0.5 * (plus + minus) - sx) < 1e-15);
  }
}

TEST_CASE("custom label is rejected") {
  try {
    collective_operator(build_space(3), OperatorLabel::Custom);
    FAIL("expected InvalidLabel");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::InvalidLabel);
  }
}

TEST_CASE("quadratic forms") {
  const auto space4 = build_space(4);
  const double gamma = 0.25;
  const Matrix sx = collective_operator(space4, Axis::X).matrix;
  const Matrix sy = collective_operator(space4, Axis::Y).matrix;
  const Matrix lmg = quadratic_form(space4, 1.0, gamma, 0.0).matrix;
  CHECK(max_abs(lmg - (sx * sx + gamma * sy * sy)) < 1e-13);
  CHECK(hermiticity_defect(lmg) == 0.0);

  const Matrix iso = quadratic_form(space4, 1.0, 1.0, 1.0).matrix;
  CHECK(max_abs(iso - 6.0 * Matrix::Identity(5, 5)) < 1e-12);

  // Sx^2 + Sy^2/2 - S^2/2 = (Sx^2 - Sz^2)/2
  const auto space6 = build_space(6);
  const Matrix s2 = collective_operator(space6, OperatorLabel::S2).matrix;
  const Matrix lhs = quadratic_form(space6, 1.0, 0.5, 0.0).matrix - 0.5 * s2;
  const Matrix rhs = quadratic_form(space6, 0.5, 0.0, -0.5).matrix;
  CHECK(max_abs(lhs - rhs) < 1e-12);
}

TEST_CASE("matrix-free application agrees with dense operators") {
  std::mt19937_64 rng(7);
  for (int n : {1, 5, 30}) {
    const auto space = build_space(n);
    const auto psi = spinsq::testing::random_state(space, rng).amplitudes;
    CHECK((apply_sx(space, psi) - collective_operator(space, Axis::X).matrix * psi).norm() <
          1e-12);
    CHECK((apply_sy(space, psi) - collective_operator(space, Axis::Y).matrix * psi).norm() <
          1e-12);
    CHECK((apply_sz(space, psi) - collective_operator(space, Axis::Z).matrix * psi).norm() <
          1e-12);
  }
}

TEST_CASE("eigensystem exponential") {
  const auto space = build_space(5);
  const Matrix h = quadratic_form(space, 1.0, 0.3, 0.0).matrix;
  const auto eig = HermitianEigensystem::of(h);
  const Matrix u = eig.exponential(0.7);
  CHECK(max_abs(u * u.adjoint() - Matrix::Identity(6, 6)) < 1e-12);
  // exp(-iHt) exp(-iHs) = exp(-iH(t+s))
  CHECK(max_abs(eig.exponential(0.3) * eig.exponential(0.4) - u) < 1e-12);
  CHECK(content_hash(h) == content_hash(Matrix(h)));
  CHECK(content_hash(h) != content_hash(quadratic_form(space, 1.0, 0.31, 0.0).matrix));
}

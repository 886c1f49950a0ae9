#include "doctest.h"

#include <cmath>
#include <numbers>

#include "helpers.hpp"
#include "spinsq/errors.hpp"
#include "spinsq/pulse_designer.hpp"

using namespace spinsq;
using spinsq::testing::max_abs;

namespace {

// |middle - mean(other two)| after sorting; zero exactly for TAT weights.
double tat_defect(const Eigen::Vector3d& w) {
  std::array<double, 3> v = {w(0), w(1), w(2)};
  std::sort(v.begin(), v.end());
  return std::abs(v[1] - 0.5 * (v[0] + v[2]));
}

}  // namespace

TEST_CASE("closed forms at gamma = 0.1") {
  const LMGModel m = make_model(1.0, 0.1, 100);
  const PulseDesign z = design(m, Axis::Z, Branch::A);
  CHECK(std::abs(z.ratio_t2_t1 - 2.375) < 1e-12);
  CHECK(std::abs(z.chi_eff - 1.1 / 3.0) < 1e-12);
  CHECK(z.effective_form() == "Sx^2+2Sy^2");
  const PulseDesign zb = design(m, Axis::Z, Branch::B);
  CHECK(std::abs(zb.ratio_t2_t1 - 1.0 / 2.375) < 1e-12);
  CHECK(zb.effective_form() == "2Sx^2+Sy^2");

  const PulseDesign y = design(m, Axis::Y, Branch::A);
  CHECK(std::abs(y.ratio_t2_t1 - 1.1 / 1.9) < 1e-12);
  CHECK(std::abs(y.chi_eff - 0.8 / 3.0) < 1e-12);
  CHECK(std::abs(design(m, Axis::Y, Branch::B).ratio_t2_t1 - 1.9 / 1.1) < 1e-12);
}

TEST_CASE("one-axis twisting needs t2 = 2 t1") {
  const PulseDesign d = design(make_model(1.0, 0.0, 10), Axis::Z, Branch::A);
  CHECK(d.ratio_t2_t1 == 2.0);
  CHECK(d.chi_eff == doctest::Approx(1.0 / 3.0));
}

TEST_CASE("x-axis pulses cannot reach TAT") {
  for (int i = 0; i < 50; ++i) {
    const double g = 0.5 * i / 50.0;
    CAPTURE(g);
    try {
      design(make_model(1.0, g, 10), Axis::X);
      FAIL("expected XAxisImpossible");
    } catch (const Error& e) {
      CHECK(e.kind() == ErrorKind::XAxisImpossible);
    }
    // The only solution has t1 / t2 = (1 + g) / (2g - 1) <= 0 ...
    // (at g = 0 it degenerates to t1 + t2 = 0)
    if (i > 0) CHECK(tat_defect(average_weights(Axis::X, g, 1.0 + g, 2.0 * g - 1.0)) < 1e-12);
    // ... and no positive timing ratio comes close.
    for (double r = 0.01; r < 100.0; r *= 1.1) {
      CHECK(tat_defect(average_weights(Axis::X, g, 1.0, r)) > 1e-3);
    }
  }
}

TEST_CASE("gamma = 1/2 is already TAT") {
  const LMGModel m = make_model(1.0, 0.5, 10);
  for (Axis axis : {Axis::X, Axis::Y, Axis::Z}) {
    const PulseDesign d = design(m, axis);
    CHECK(d.already_tat);
    CHECK(d.chi_eff == 0.5);
    const DickeSpace space(10);
    CHECK(max_abs(effective_hamiltonian(d, space).matrix - realize_hamiltonian(m, space).matrix) <
          1e-12);
    const PulseSchedule s = schedule(d, m, 0.2, 0.05);
    CHECK(s.segments_per_cycle == 1);
    CHECK(s.total_time() == doctest::Approx(0.2));
  }
}

TEST_CASE("timing ratios and averaged Hamiltonians on a dense gamma grid") {
  for (int i = 0; i < 500; ++i) {
    const double g = 0.5 * i / 500.0;
    CAPTURE(g);
    const LMGModel m = make_model(1.3, g, 10);
    for (Axis axis : {Axis::Y, Axis::Z}) {
      for (Branch branch : {Branch::A, Branch::B}) {
        const PulseDesign d = design(m, axis, branch);
        CHECK(d.ratio_t2_t1 > 0.0);
        const double t1 = 1.0;
        const double t2 = d.ratio_t2_t1;
        const Eigen::Vector3d w = average_weights(axis, g, t1, t2);
        // averaged = (chi_eff / chi) * weights + const
        const Eigen::Vector3d shift = w - (d.chi_eff / m.chi) * d.weights;
        CHECK(std::abs(shift(0) - shift(1)) < 1e-12);
        CHECK(std::abs(shift(1) - shift(2)) < 1e-12);
        CHECK(d.weights(static_cast<int>(d.stationary_axis)) == 1.0);
        if (axis == Axis::Z) {
          const double q = (t1 + g * t2) / (g * t1 + t2);
          CHECK((std::abs(q - 0.5) < 1e-12 || std::abs(q - 2.0) < 1e-12));
          CHECK(std::abs(d.chi_eff - 1.3 * (1 + g) / 3) < 1e-12);
        } else {
          CHECK(std::abs(d.chi_eff - 1.3 * (1 - 2 * g) / 3) < 1e-12);
        }
      }
    }
  }
}

TEST_CASE("effective form is TAT up to S^2") {
  const DickeSpace space(12);
  const Matrix s2 = collective_operator(space, OperatorLabel::S2).matrix;
  CHECK(max_abs(quadratic_form(space, 1, 2, 0).matrix - s2 -
                quadratic_form(space, 0, 1, -1).matrix) < 1e-10);
}

TEST_CASE("schedule construction") {
  const LMGModel m = make_model(1.0, 0.1, 100);
  const PulseDesign d = design(m, Axis::Z);
  const double total = 0.07;
  const PulseSchedule coarse = schedule(d, m, total, 0.05);
  CHECK(coarse.cycle_count == 140);
  const PulseSchedule fine = schedule(d, m, total, 0.025);
  CHECK(fine.cycle_count == 2 * coarse.cycle_count);
  CHECK(std::abs(fine.t1 - 0.5 * coarse.t1) < 1e-15);
  CHECK(std::abs(fine.t2 / fine.t1 - d.ratio_t2_t1) < 1e-12);
  CHECK(std::abs(coarse.t2 / coarse.t1 - d.ratio_t2_t1) < 1e-12);
  CHECK(coarse.total_time() == doctest::Approx(total).epsilon(1e-14));
  CHECK(coarse.segments.size() == 4 * 140u);
  const auto& p = std::get<PulseSegment>(coarse.segments[0]);
  CHECK(p.angle == doctest::Approx(-std::numbers::pi / 2));
  CHECK(std::get<FreeSegment>(coarse.segments[1]).duration == coarse.t2);
  CHECK(std::get<FreeSegment>(coarse.segments[3]).duration == coarse.t1);

  CHECK(schedule(d, m, total, 0.05, 7).cycle_count == 7);
  CHECK_THROWS_AS(schedule(d, m, -1.0, 0.05), Error);
  CHECK_THROWS_AS(schedule(d, m, 1.0, 0.0), Error);
}

TEST_CASE("compare_axes") {
  const AxisComparison c = compare_axes(make_model(1.0, 0.1, 10));
  CHECK(c.chi_eff_z == doctest::Approx(1.1 / 3));
  CHECK(c.chi_eff_y == doctest::Approx(0.8 / 3));
  CHECK(c.z_faster);
  const AxisComparison zero = compare_axes(make_model(1.0, 0.0, 10));
  CHECK(zero.chi_eff_z == doctest::Approx(zero.chi_eff_y));
  CHECK_FALSE(zero.z_faster);
  const AxisComparison half = compare_axes(make_model(1.0, 0.5, 10));
  CHECK(half.chi_eff_y == 0.0);
  CHECK(half.chi_eff_z == doctest::Approx(0.5));
  for (int i = 1; i < 50; ++i) CHECK(compare_axes(make_model(1.0, 0.01 * i, 10)).z_faster);
}

TEST_CASE("recommended initial state is the stationary axis") {
  const LMGModel m = make_model(1.0, 0.2, 10);
  const auto a = design(m, Axis::Z, Branch::A).initial_angles();
  CHECK((a.direction() - Eigen::Vector3d::UnitX()).norm() < 1e-12);
  const auto b = design(m, Axis::Z, Branch::B).initial_angles();
  CHECK((b.direction() - Eigen::Vector3d::UnitY()).norm() < 1e-12);
  const auto c = design(m, Axis::Y, Branch::A).initial_angles();
  CHECK((c.direction() - Eigen::Vector3d::UnitZ()).norm() < 1e-12);
}

#include "spinsq/pulse_designer.hpp"

#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>

#include "spinsq/errors.hpp"

namespace spinsq {

namespace {

constexpr double kTatTolerance = 1e-12;

}  // namespace

std::string_view to_string(Branch branch) { return branch == Branch::A ? "A" : "B"; }

Branch parse_branch(std::string_view name) {
  if (name == "A" || name == "a") return Branch::A;
  if (name == "B" || name == "b") return Branch::B;
  throw Error(ErrorKind::InvalidArgument,
              "unknown branch '" + std::string(name) + "' (expected A or B)");
}

std::string PulseDesign::effective_form() const {
  static constexpr const char* names[] = {"Sx^2", "Sy^2", "Sz^2"};
  std::ostringstream out;
  bool first = true;
  for (int a = 0; a < 3; ++a) {
    if (weights(a) == 0.0) continue;
    if (!first) out << "+";
    if (weights(a) != 1.0) out << weights(a);
    out << names[a];
    first = false;
  }
  return out.str();
}

BlochAngles PulseDesign::initial_angles() const {
  return BlochAngles::along(unit_vector(stationary_axis));
}

PulseDesign design(const LMGModel& model, Axis axis, Branch branch) {
  const double g = model.gamma;
  if (!(g >= 0.0 && g <= 0.5)) {
    throw Error(ErrorKind::InvalidModel, "design requires 0 <= gamma <= 1/2");
  }
  PulseDesign d;
  d.axis = axis;
  d.branch = branch;
  if (g >= 0.5 - kTatTolerance) {
    // chi (Sx^2 + Sy^2 / 2) = (chi / 2)(2 Sx^2 + Sy^2)
    d.already_tat = true;
    d.ratio_t2_t1 = 1.0;
    d.chi_eff = 0.5 * model.chi;
    d.weights = {2.0, 1.0, 0.0};
    d.stationary_axis = Axis::Y;
    return d;
  }
  switch (axis) {
    case Axis::X: {
      std::ostringstream msg;
      msg << "pulses about x cannot produce TAT for gamma = " << g
          << ": the required t1/t2 = (1 + gamma)/(2 gamma - 1) is not positive";
      throw Error(ErrorKind::XAxisImpossible, msg.str());
    }
    case Axis::Z:
      d.chi_eff = model.chi * (1.0 + g) / 3.0;
      if (branch == Branch::A) {
        d.ratio_t2_t1 = (g - 2.0) / (2.0 * g - 1.0);
        d.weights = {1.0, 2.0, 0.0};
        d.stationary_axis = Axis::X;
      } else {
        d.ratio_t2_t1 = (2.0 * g - 1.0) / (g - 2.0);
        d.weights = {2.0, 1.0, 0.0};
        d.stationary_axis = Axis::Y;
      }
      break;
    case Axis::Y:
      d.chi_eff = model.chi * (1.0 - 2.0 * g) / 3.0;
      if (branch == Branch::A) {
        d.ratio_t2_t1 = (g + 1.0) / (2.0 - g);
        d.weights = {2.0, 0.0, 1.0};
        d.stationary_axis = Axis::Z;
      } else {
        d.ratio_t2_t1 = (2.0 - g) / (g + 1.0);
        d.weights = {1.0, 0.0, 2.0};
        d.stationary_axis = Axis::X;
      }
      break;
  }
  return d;
}

Eigen::Vector3d average_weights(Axis axis, double gamma, double t1, double t2) {
  const Eigen::Vector3d bare{1.0, gamma, 0.0};
  // exp(i pi/2 S_axis) conjugation permutes the two axes orthogonal to it.
  Eigen::Vector3d rotated = bare;
  switch (axis) {
    case Axis::X: std::swap(rotated(1), rotated(2)); break;
    case Axis::Y: std::swap(rotated(0), rotated(2)); break;
    case Axis::Z: std::swap(rotated(0), rotated(1)); break;
  }
  return (t1 * bare + t2 * rotated) / (t1 + t2);
}

SpinOperator effective_hamiltonian(const PulseDesign& design, const DickeSpace& space) {
  const Eigen::Vector3d c = design.chi_eff * design.weights;
  return quadratic_form(space, c(0), c(1), c(2));
}

PulseSchedule schedule(const PulseDesign& design, const LMGModel& model,
                       double total_time, double max_step, std::optional<int> cycles) {
  if (!(total_time > 0.0)) {
    throw Error(ErrorKind::InvalidArgument, "total_time must be > 0");
  }
  if (!(max_step > 0.0)) {
    throw Error(ErrorKind::InvalidArgument, "max_step must be > 0");
  }
  PulseSchedule s;
  if (cycles) {
    if (*cycles < 1) throw Error(ErrorKind::InvalidArgument, "cycles must be >= 1");
    s.cycle_count = *cycles;
  } else {
    const double exact = total_time * model.n_spins * model.chi / max_step;
    // Tolerate rounding so that an exact multiple of max_step is not bumped up.
    s.cycle_count = std::max(1, static_cast<int>(std::ceil(exact * (1.0 - 1e-12))));
  }
  const double tc = total_time / s.cycle_count;

  if (design.already_tat) {
    s.t1 = tc;
    s.t2 = 0.0;
    s.segments_per_cycle = 1;
    s.segments.assign(s.cycle_count, FreeSegment{tc, nullptr});
    return s;
  }

  const double r = design.ratio_t2_t1;
  s.t1 = tc / (1.0 + r);
  s.t2 = s.t1 * r;
  s.segments_per_cycle = 4;
  s.segments.reserve(4 * static_cast<std::size_t>(s.cycle_count));
  const Eigen::Vector3d n = unit_vector(design.axis);
  const double quarter = 0.5 * std::numbers::pi;
  for (int c = 0; c < s.cycle_count; ++c) {
    s.segments.emplace_back(PulseSegment{n, -quarter});
    s.segments.emplace_back(FreeSegment{s.t2, nullptr});
    s.segments.emplace_back(PulseSegment{n, quarter});
    s.segments.emplace_back(FreeSegment{s.t1, nullptr});
  }
  return s;
}

AxisComparison compare_axes(const LMGModel& model) {
  const double g = model.gamma;
  if (!(g >= 0.0 && g <= 0.5)) {
    throw Error(ErrorKind::InvalidModel, "compare_axes requires 0 <= gamma <= 1/2");
  }
  AxisComparison out;
  out.chi_eff_z = model.chi * (1.0 + g) / 3.0;
  out.chi_eff_y = model.chi * std::abs(1.0 - 2.0 * g) / 3.0;
  out.ratio_z_over_y = out.chi_eff_y > 0.0 ? out.chi_eff_z / out.chi_eff_y
                                           : std::numeric_limits<double>::infinity();
  out.z_faster = out.chi_eff_z > out.chi_eff_y;
  return out;
}

}  // namespace spinsq

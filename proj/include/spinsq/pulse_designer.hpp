#pragma once

#include <optional>
#include <string>
#include <string_view>

#include <Eigen/Dense>

#include "spinsq/canonicalizer.hpp"
#include "spinsq/propagator.hpp"
#include "spinsq/state.hpp"

namespace spinsq {

/// The two timing solutions that turn the averaged Hamiltonian into TAT.
enum class Branch { A, B };

std::string_view to_string(Branch branch);
Branch parse_branch(std::string_view name);

/// Periodic +-pi/2 pulse scheme and the TAT Hamiltonian it engineers:
///   H_eff = chi_eff (w_x Sx^2 + w_y Sy^2 + w_z Sz^2) + const * S^2
/// with weights w a permutation of (0, 1, 2). The weight-1 axis is the
/// unstable fixed point of H_eff and the natural initial spin direction.
struct PulseDesign {
  Axis axis = Axis::Z;
  Branch branch = Branch::A;
  double ratio_t2_t1 = 1.0;
  double chi_eff = 0.0;
  Eigen::Vector3d weights = Eigen::Vector3d::Zero();
  Axis stationary_axis = Axis::Y;
  /// gamma = 1/2: the bare model is already TAT and no pulses are applied.
  bool already_tat = false;

  std::string effective_form() const;
  BlochAngles initial_angles() const;
};

PulseDesign design(const LMGModel& model, Axis axis, Branch branch = Branch::A);

/// First-order (average Hamiltonian) coefficients of Sx^2, Sy^2, Sz^2 per
/// unit chi for one cycle with free durations t1 (bare frame) and t2
/// (conjugated by the pulses about `axis`).
Eigen::Vector3d average_weights(Axis axis, double gamma, double t1, double t2);

/// chi_eff (w . S^2) on the given space.
SpinOperator effective_hamiltonian(const PulseDesign& design, const DickeSpace& space);

/// Cycle order: pulse(-pi/2), free(t2), pulse(+pi/2), free(t1). The one-cycle
/// unitary is exp(-iH t1) R(pi/2) exp(-iH t2) R(-pi/2), identical to
/// exp(-iH t1) R(-pi/2) exp(-iH t2) R(pi/2) because H only has squares.
///
/// cycle_count = ceil(total_time N chi / max_step) unless `cycles` is given.
PulseSchedule schedule(const PulseDesign& design, const LMGModel& model,
                       double total_time, double max_step,
                       std::optional<int> cycles = std::nullopt);

struct AxisComparison {
  double chi_eff_z = 0.0;
  double chi_eff_y = 0.0;
  double ratio_z_over_y = 0.0;  // infinite at gamma = 1/2
  bool z_faster = false;
};

AxisComparison compare_axes(const LMGModel& model);

}  // namespace spinsq

#pragma once

#include <functional>
#include <vector>

#include <Eigen/Dense>

#include "spinsq/canonicalizer.hpp"
#include "spinsq/propagator.hpp"
#include "spinsq/state.hpp"

namespace spinsq {

/// Mean-spin contrast below which the squeezing direction is undefined.
constexpr double kContrastFloor = 1e-6;

struct SqueezingSample {
  double t = 0.0;
  double xi2 = 1.0;
  Eigen::Vector3d mean_spin = Eigen::Vector3d::Zero();
  double contrast = 0.0;  // |<S>| / (N/2)
  Eigen::Vector3d min_variance_axis = Eigen::Vector3d::Zero();
  // Both eigenvalues of the perpendicular covariance, ascending.
  Eigen::Vector2d perpendicular_variances = Eigen::Vector2d::Zero();
};

struct SqueezingTrace {
  std::vector<SqueezingSample> samples;
  double t_min = 0.0;
  double xi2_min = 1.0;
};

/// Kitagawa-Ueda parameter xi^2 = 4 min Var(S_perp) / N.
SqueezingSample squeezing_parameter(const SpinState& state);

struct MinimizeOptions {
  /// End of the coarse scan in units of 1 / (chi N).
  double horizon = 5.0;
  int grid_points = 2000;
  /// The horizon is doubled up to this many times while the first minimum
  /// sits on the right edge of the scan.
  int max_extensions = 6;
  double relative_time_tolerance = 1e-6;
  /// When false the scan stops right after the first local minimum and only
  /// the minimum is reported.
  bool record_trace = true;
};

/// First local minimum in time of xi^2 for evolution under `hamiltonian`.
/// `time_unit` converts the dimensionless horizon into time, i.e. 1 / (chi N).
SqueezingTrace minimize_over_time(const SpinOperator& hamiltonian,
                                  const SpinState& initial, double time_unit,
                                  const MinimizeOptions& options,
                                  Propagator& propagator);

SqueezingTrace minimize_over_time(const LMGModel& model, const BlochAngles& initial,
                                  const MinimizeOptions& options = {});

/// Index of the first strict local minimum of a sampled xi^2 series, or -1.
/// The final point counts only if `allow_edge`.
int first_local_minimum(const std::vector<double>& xi2, bool allow_edge);

}  // namespace spinsq

#include "spinsq/squeezing.hpp"

#include <cmath>
#include <sstream>

#include "spinsq/errors.hpp"

namespace spinsq {

namespace {

// xi^2 values this close to the initial value are treated as flat.
constexpr double kFlatTolerance = 1e-10;

Eigen::Vector3d least_aligned_axis(const Eigen::Vector3d& n) {
  Eigen::Index i = 0;
  n.cwiseAbs().minCoeff(&i);
  return Eigen::Vector3d::Unit(i);
}

}  // namespace

SqueezingSample squeezing_parameter(const SpinState& state) {
  const DickeSpace& space = state.space;
  const Vector& psi = state.amplitudes;
  const std::array<Vector, 3> s_psi = {apply_sx(space, psi), apply_sy(space, psi),
                                       apply_sz(space, psi)};

  SqueezingSample out;
  for (int a = 0; a < 3; ++a) out.mean_spin(a) = psi.dot(s_psi[a]).real();
  const double half_n = 0.5 * space.n_spins();
  out.contrast = out.mean_spin.norm() / half_n;
  if (!(out.contrast >= kContrastFloor)) {
    std::ostringstream msg;
    msg << "mean spin vanished (contrast " << out.contrast << ")";
    throw Error(ErrorKind::MeanSpinVanished, msg.str());
  }

  // Second moments <S_a S_b> = (S_a psi)^dagger (S_b psi); real part is the
  // symmetrized product.
  Eigen::Matrix3d second;
  for (int a = 0; a < 3; ++a)
    for (int b = a; b < 3; ++b) second(a, b) = second(b, a) = s_psi[a].dot(s_psi[b]).real();
  const Eigen::Matrix3d covariance = second - out.mean_spin * out.mean_spin.transpose();

  const Eigen::Vector3d n = out.mean_spin.normalized();
  const Eigen::Vector3d n1 = n.cross(least_aligned_axis(n)).normalized();
  const Eigen::Vector3d n2 = n.cross(n1);
  Eigen::Matrix<double, 3, 2> basis;
  basis << n1, n2;
  const Eigen::Matrix2d perp = basis.transpose() * covariance * basis;

  Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d> solver(perp);
  out.perpendicular_variances = solver.eigenvalues();
  out.xi2 = 4.0 * out.perpendicular_variances(0) / space.n_spins();
  out.min_variance_axis = (basis * solver.eigenvectors().col(0)).normalized();
  return out;
}

int first_local_minimum(const std::vector<double>& xi2, bool allow_edge) {
  const int n = static_cast<int>(xi2.size());
  if (n < 2) return -1;
  const double start = xi2.front();
  for (int k = 1; k < n; ++k) {
    if (xi2[k] >= start - kFlatTolerance) continue;
    if (xi2[k] > xi2[k - 1]) continue;
    if (k + 1 < n) {
      if (xi2[k] < xi2[k + 1]) return k;
    } else if (allow_edge) {
      return k;
    }
  }
  return -1;
}

SqueezingTrace minimize_over_time(const SpinOperator& hamiltonian,
                                  const SpinState& initial, double time_unit,
                                  const MinimizeOptions& options,
                                  Propagator& propagator) {
  if (options.grid_points < 100) {
    throw Error(ErrorKind::InvalidArgument, "grid_points must be >= 100");
  }
  if (!(options.horizon > 0.0) || !(time_unit > 0.0)) {
    throw Error(ErrorKind::InvalidArgument, "horizon and time unit must be positive");
  }
  const auto eigen = propagator.eigensystem(hamiltonian);
  if (hamiltonian.dim() != initial.amplitudes.size()) {
    throw Error(ErrorKind::DimensionMismatch, "Hamiltonian and state dimensions differ");
  }
  const Vector coeffs = eigen->vectors.adjoint() * initial.amplitudes;
  Vector phased(coeffs.size());
  auto sample_at = [&](double t) {
    for (Eigen::Index k = 0; k < coeffs.size(); ++k) {
      phased(k) = coeffs(k) * std::polar(1.0, -eigen->values(k) * t);
    }
    SqueezingSample s = squeezing_parameter({initial.space, eigen->vectors * phased});
    s.t = t;
    return s;
  };

  double horizon = options.horizon;
  for (int attempt = 0;; ++attempt) {
    const double t_end = horizon * time_unit;
    const int points = options.grid_points;
    const double dt = t_end / (points - 1);

    SqueezingTrace trace;
    std::vector<double> values;
    values.reserve(points);
    int found = -1;
    bool vanished = false;
    for (int k = 0; k < points; ++k) {
      SqueezingSample s;
      try {
        s = sample_at(k * dt);
      } catch (const Error& e) {
        // Past the first dip the scan may reach the over-squeezed regime;
        // that only matters if no minimum has been bracketed yet.
        if (e.kind() != ErrorKind::MeanSpinVanished ||
            first_local_minimum(values, false) < 0) {
          throw;
        }
        vanished = true;
        break;
      }
      values.push_back(s.xi2);
      if (options.record_trace) trace.samples.push_back(s);
      // Early exit once a minimum is confirmed by the next sample.
      if (!options.record_trace && k >= 2) {
        const int c = k - 1;
        if (values[c] < values.front() - kFlatTolerance && values[c] <= values[c - 1] &&
            values[c] < values[k]) {
          found = c;
          break;
        }
      }
    }
    if (options.record_trace || found < 0) found = first_local_minimum(values, false);

    if (found < 0) {
      const bool decreasing_at_edge =
          values.back() < values.front() - kFlatTolerance &&
          values.back() <= values[values.size() - 2];
      if (decreasing_at_edge && !vanished && attempt < options.max_extensions) {
        horizon *= 2.0;
        continue;
      }
      std::ostringstream msg;
      msg << (decreasing_at_edge ? "xi^2 still decreasing at horizon "
                                 : "xi^2 never decreases below its initial value up to horizon ")
          << horizon << " (units of 1/(chi N))";
      throw Error(ErrorKind::NoMinimumFound, msg.str());
    }

    // Golden-section refinement on the bracketing grid interval.
    const double inv_phi = 0.5 * (std::sqrt(5.0) - 1.0);
    double lo = (found - 1) * dt;
    double hi = (found + 1) * dt;
    double x1 = hi - inv_phi * (hi - lo);
    double x2 = lo + inv_phi * (hi - lo);
    double f1 = sample_at(x1).xi2;
    double f2 = sample_at(x2).xi2;
    const double tol = options.relative_time_tolerance * found * dt;
    while (hi - lo > tol) {
      if (f1 < f2) {
        hi = x2;
        x2 = x1;
        f2 = f1;
        x1 = hi - inv_phi * (hi - lo);
        f1 = sample_at(x1).xi2;
      } else {
        lo = x1;
        x1 = x2;
        f1 = f2;
        x2 = lo + inv_phi * (hi - lo);
        f2 = sample_at(x2).xi2;
      }
    }
    const double t_best = 0.5 * (lo + hi);
    const double f_best = sample_at(t_best).xi2;
    // Never report worse than the grid point it started from.
    if (f_best <= values[found]) {
      trace.t_min = t_best;
      trace.xi2_min = f_best;
    } else {
      trace.t_min = found * dt;
      trace.xi2_min = values[found];
    }
    return trace;
  }
}

SqueezingTrace minimize_over_time(const LMGModel& model, const BlochAngles& initial,
                                  const MinimizeOptions& options) {
  const DickeSpace space(model.n_spins);
  Propagator propagator;
  return minimize_over_time(realize_hamiltonian(model, space),
                            coherent_state(space, initial),
                            1.0 / (model.chi * model.n_spins), options, propagator);
}

}  // namespace spinsq

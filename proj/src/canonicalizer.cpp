#include "spinsq/canonicalizer.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>
#include <string>

#include "spinsq/errors.hpp"

namespace spinsq {

namespace {

constexpr double kSymmetryTolerance = 1e-9;
constexpr double kIsotropyTolerance = 1e-9;

// Orient an eigenvector so its first non-negligible component is positive.
Eigen::Vector3d orient(Eigen::Vector3d v) {
  for (int i = 0; i < 3; ++i) {
    if (std::abs(v(i)) > 1e-12) {
      if (v(i) < 0) v = -v;
      break;
    }
  }
  return v;
}

// Rows x' = z, y' = -y, z' = x: exchanges x and z while keeping det = +1.
Eigen::Matrix3d swap_xz(const Eigen::Matrix3d& frame) {
  Eigen::Matrix3d out;
  out.row(0) = frame.row(2);
  out.row(1) = -frame.row(1);
  out.row(2) = frame.row(0);
  return out;
}

void require_positive_spins(int n_spins) {
  if (n_spins < 1) {
    throw Error(ErrorKind::InvalidSize,
                "n_spins must be >= 1, got " + std::to_string(n_spins));
  }
}

}  // namespace

CouplingMatrix CouplingMatrix::from_row_major(const std::array<double, 9>& v) {
  CouplingMatrix c;
  for (int r = 0; r < 3; ++r)
    for (int col = 0; col < 3; ++col) c.chi(r, col) = v[3 * r + col];
  return c;
}

std::array<double, 9> CouplingMatrix::row_major() const {
  std::array<double, 9> v{};
  for (int r = 0; r < 3; ++r)
    for (int col = 0; col < 3; ++col) v[3 * r + col] = chi(r, col);
  return v;
}

LMGModel canonicalize(const CouplingMatrix& coupling, int n_spins) {
  require_positive_spins(n_spins);
  const Eigen::Matrix3d& chi = coupling.chi;
  if (!chi.allFinite()) {
    throw Error(ErrorKind::InvalidArgument, "coupling contains non-finite entries");
  }
  const double scale = chi.cwiseAbs().maxCoeff();
  const double asymmetry = (chi - chi.transpose()).cwiseAbs().maxCoeff();
  if (asymmetry > kSymmetryTolerance * std::max(1.0, scale)) {
    std::ostringstream msg;
    msg << "coupling matrix is not symmetric (max |chi_ab - chi_ba| = "
        << asymmetry << ")";
    throw Error(ErrorKind::AsymmetricInput, msg.str());
  }

  const Eigen::Matrix3d a = chi + chi.transpose();  // 2 chi, symmetrized
  Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> solver(a);
  Eigen::Vector3d values = solver.eigenvalues();
  std::array<Eigen::Vector3d, 3> vectors;
  for (int i = 0; i < 3; ++i) vectors[i] = orient(solver.eigenvectors().col(i));

  // Descending eigenvalue; exact ties resolved lexicographically on the
  // oriented eigenvector.
  const double tie = 1e-12 * std::max(1.0, 2.0 * scale);
  std::array<int, 3> order{0, 1, 2};
  std::sort(order.begin(), order.end(), [&](int p, int q) {
    if (std::abs(values(p) - values(q)) > tie) return values(p) > values(q);
    const auto& u = vectors[p];
    const auto& w = vectors[q];
    return std::lexicographical_compare(w.data(), w.data() + 3, u.data(),
                                        u.data() + 3);
  });

  Eigen::Matrix3d frame;
  Eigen::Vector3d lambda;
  for (int r = 0; r < 3; ++r) {
    frame.row(r) = vectors[order[r]].transpose();
    lambda(r) = values(order[r]);
  }
  if (frame.determinant() < 0) frame.row(2) *= -1.0;

  const double spread = lambda(0) - lambda(2);
  if (!(spread > kIsotropyTolerance * scale) || scale == 0.0) {
    throw Error(ErrorKind::IsotropicCoupling,
                "coupling is isotropic (H proportional to S^2); no squeezing possible");
  }

  const double j = 0.5 * n_spins;
  const double casimir = j * (j + 1.0);
  const double offset = -0.5 * n_spins * chi.trace();

  LMGModel model;
  model.n_spins = n_spins;
  model.chi = spread;
  model.gamma = (lambda(1) - lambda(2)) / spread;
  model.frame = frame;
  model.dropped_constant = lambda(2) * casimir + offset;
  if (model.gamma > 0.5) {
    // chi (Sx^2 + g Sy^2) = -chi (Sz^2 + (1 - g) Sy^2) + chi S^2
    model.gamma = 1.0 - model.gamma;
    model.frame = swap_xz(frame);
    model.sign_flipped = true;
    model.dropped_constant = lambda(0) * casimir + offset;
  }
  model.gamma = std::clamp(model.gamma, 0.0, 0.5);
  return model;
}

LMGModel make_model(double chi, double gamma, int n_spins) {
  require_positive_spins(n_spins);
  if (!(chi > 0.0) || !std::isfinite(chi)) {
    throw Error(ErrorKind::InvalidModel, "chi must be a positive finite number");
  }
  if (!(gamma >= 0.0 && gamma <= 1.0)) {
    throw Error(ErrorKind::InvalidModel, "gamma must lie in [0, 1]");
  }
  LMGModel model;
  model.chi = chi;
  model.gamma = gamma;
  model.n_spins = n_spins;
  if (gamma > 0.5) {
    const double j = 0.5 * n_spins;
    model.gamma = 1.0 - gamma;
    model.frame = swap_xz(Eigen::Matrix3d::Identity());
    model.sign_flipped = true;
    model.dropped_constant = chi * j * (j + 1.0);
  }
  return model;
}

SpinOperator realize_hamiltonian(const LMGModel& model, const DickeSpace& space) {
  if (space.n_spins() != model.n_spins) {
    throw Error(ErrorKind::DimensionMismatch,
                "model has " + std::to_string(model.n_spins) +
                    " spins but the space has " + std::to_string(space.n_spins()));
  }
  if (!(model.chi > 0.0)) {
    throw Error(ErrorKind::InvalidModel, "chi must be > 0");
  }
  return quadratic_form(space, model.chi, model.chi * model.gamma, 0.0);
}

std::pair<SpinOperator, SpinOperator> counter_twist_decomposition(
    const LMGModel& model, const DickeSpace& space) {
  if (space.n_spins() != model.n_spins) {
    throw Error(ErrorKind::DimensionMismatch, "model and space sizes differ");
  }
  return {quadratic_form(space, model.chi * (1.0 - model.gamma), 0.0, 0.0),
          quadratic_form(space, 0.0, 0.0, -model.chi * model.gamma)};
}

SpinOperator pairwise_hamiltonian(const CouplingMatrix& coupling,
                                  const DickeSpace& space) {
  const std::array<Matrix, 3> s = {
      collective_operator(space, Axis::X).matrix,
      collective_operator(space, Axis::Y).matrix,
      collective_operator(space, Axis::Z).matrix};
  Matrix h = Matrix::Zero(space.dim(), space.dim());
  for (int a = 0; a < 3; ++a)
    for (int b = 0; b < 3; ++b)
      if (coupling.chi(a, b) != 0.0) h += 2.0 * coupling.chi(a, b) * (s[a] * s[b]);
  h = 0.5 * (h + h.adjoint()).eval();
  return {std::move(h), OperatorLabel::Custom};
}

}  // namespace spinsq

#pragma once

#include <array>
#include <utility>

#include <Eigen/Dense>

#include "spinsq/spin_algebra.hpp"

namespace spinsq {

/// Pairwise coupling strengths chi_ab of H = sum_{j<k} chi_ab s_a^j s_b^k,
/// with s the Pauli matrices. Must be real symmetric.
struct CouplingMatrix {
  Eigen::Matrix3d chi = Eigen::Matrix3d::Zero();

  static CouplingMatrix from_row_major(const std::array<double, 9>& values);
  std::array<double, 9> row_major() const;
};

/// Canonical LMG form H = chi (Sx^2 + gamma Sy^2), 0 <= gamma <= 1/2, chi > 0.
///
/// The physical Hamiltonian in lab coordinates is
///   H_lab = sign() * chi (Sx'^2 + gamma Sy'^2) + dropped_constant
/// where S'_a = sum_b frame(a, b) S_b and sign() = -1 when the x<->z swap
/// was needed to bring gamma below 1/2.
struct LMGModel {
  double chi = 1.0;
  double gamma = 0.0;
  Eigen::Matrix3d frame = Eigen::Matrix3d::Identity();
  bool sign_flipped = false;
  int n_spins = 1;
  double dropped_constant = 0.0;

  double sign() const noexcept { return sign_flipped ? -1.0 : 1.0; }
};

/// Diagonalizes A = 2 chi_ab and reduces it to canonical LMG form.
LMGModel canonicalize(const CouplingMatrix& coupling, int n_spins);

/// Canonical model straight from (chi, gamma). gamma in (1/2, 1] is folded
/// back with the axis swap; chi must be positive.
LMGModel make_model(double chi, double gamma, int n_spins);

/// chi (Sx^2 + gamma Sy^2) in the canonical frame.
SpinOperator realize_hamiltonian(const LMGModel& model, const DickeSpace& space);

/// (chi (1 - gamma) Sx^2, -chi gamma Sz^2); their sum plus chi gamma S^2
/// equals realize_hamiltonian.
std::pair<SpinOperator, SpinOperator> counter_twist_decomposition(
    const LMGModel& model, const DickeSpace& space);

/// 2 sum_ab chi_ab S_a S_b built directly on the Dicke space, without the
/// -N/2 tr(chi) offset.
SpinOperator pairwise_hamiltonian(const CouplingMatrix& coupling,
                                  const DickeSpace& space);

}  // namespace spinsq

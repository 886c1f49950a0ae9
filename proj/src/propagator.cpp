#include "spinsq/propagator.hpp"

#include <bit>
#include <cmath>
#include <string>

#include "spinsq/errors.hpp"

namespace spinsq {

namespace {

void require_hermitian(const SpinOperator& h) {
  const double scale = std::max(1.0, h.matrix.cwiseAbs().maxCoeff());
  const double defect = hermiticity_defect(h.matrix);
  if (!(defect <= 1e-10 * scale)) {
    throw Error(ErrorKind::NotHermitian,
                "Hamiltonian is not Hermitian (defect " + std::to_string(defect) + ")");
  }
}

void require_dims(const SpinState& state, const SpinOperator& h) {
  if (h.dim() != state.amplitudes.size()) {
    throw Error(ErrorKind::DimensionMismatch,
                "operator dimension " + std::to_string(h.dim()) +
                    " does not match state dimension " +
                    std::to_string(state.amplitudes.size()));
  }
}

}  // namespace

std::shared_ptr<const HermitianEigensystem> Propagator::eigensystem(
    const SpinOperator& h) {
  const std::uint64_t key = content_hash(h.matrix);
  {
    std::lock_guard lock(mutex_);
    if (auto it = cache_.find(key); it != cache_.end()) {
      for (const auto& entry : it->second) {
        if (entry.matrix == h.matrix) return entry.eigen;
      }
    }
  }
  require_hermitian(h);
  auto eigen = std::make_shared<const HermitianEigensystem>(
      HermitianEigensystem::of(h.matrix));
  std::lock_guard lock(mutex_);
  auto& bucket = cache_[key];
  for (const auto& entry : bucket) {
    if (entry.matrix == h.matrix) return entry.eigen;
  }
  bucket.push_back({h.matrix, eigen});
  return eigen;
}

SpinState Propagator::evolve(const SpinState& state, const SpinOperator& h, double t) {
  require_dims(state, h);
  if (t == 0.0) return state;
  return {state.space, eigensystem(h)->propagate(t, state.amplitudes)};
}

void Propagator::run_schedule(SpinState& state, const PulseSchedule& schedule,
                              const SpinOperator& base_hamiltonian,
                              const RotationKit& rotations, int sample_every,
                              const CycleObserver& observer) {
  require_dims(state, base_hamiltonian);
  if (sample_every < 1) {
    throw Error(ErrorKind::InvalidArgument, "sample_every must be >= 1");
  }
  if (!(rotations.space() == state.space)) {
    throw Error(ErrorKind::DimensionMismatch, "rotation kit built for another space");
  }
  const auto base = eigensystem(base_hamiltonian);
  double t = 0.0;
  if (observer) observer(0, t, state);

  const int per_cycle = schedule.segments_per_cycle;
  int cycle = 0;
  for (std::size_t i = 0; i < schedule.segments.size(); ++i) {
    const auto& segment = schedule.segments[i];
    if (const auto* pulse = std::get_if<PulseSegment>(&segment)) {
      rotations.apply(pulse->axis, pulse->angle, state.amplitudes);
    } else {
      const auto& free = std::get<FreeSegment>(segment);
      if (free.duration < 0.0) {
        throw Error(ErrorKind::InvalidArgument, "free segment with negative duration");
      }
      if (free.hamiltonian) {
        require_dims(state, *free.hamiltonian);
        require_hermitian(*free.hamiltonian);
        // Per-segment overrides bypass the cache.
        state.amplitudes = HermitianEigensystem::of(free.hamiltonian->matrix)
                               .propagate(free.duration, state.amplitudes);
      } else if (free.duration != 0.0) {
        state.amplitudes = base->propagate(free.duration, state.amplitudes);
      }
      t += free.duration;
    }
    if (per_cycle > 0 && (i + 1) % per_cycle == 0) {
      ++cycle;
      if (observer && cycle % sample_every == 0) observer(cycle, t, state);
    }
  }
}

std::size_t Propagator::cache_size() const {
  std::lock_guard lock(mutex_);
  std::size_t n = 0;
  for (const auto& [key, bucket] : cache_) n += bucket.size();
  return n;
}

SpinState evolve(const SpinState& state, const SpinOperator& h, double t) {
  require_dims(state, h);
  require_hermitian(h);
  if (t == 0.0) return state;
  return {state.space, HermitianEigensystem::of(h.matrix).propagate(t, state.amplitudes)};
}

ScheduleSnapshots run_schedule(const SpinState& state, const PulseSchedule& schedule,
                               const LMGModel& model, int sample_every) {
  const SpinOperator h = realize_hamiltonian(model, state.space);
  const RotationKit rotations(state.space);
  Propagator propagator;
  ScheduleSnapshots out;
  SpinState current = state;
  propagator.run_schedule(current, schedule, h, rotations, sample_every,
                          [&](int cycle, double t, const SpinState& s) {
                            out.cycles.push_back(cycle);
                            out.times.push_back(t);
                            out.states.push_back(s);
                          });
  return out;
}

SpinState evolve_lab_frame(const CouplingMatrix& coupling, int n_spins,
                           const BlochAngles& initial, double t) {
  const LMGModel model = canonicalize(coupling, n_spins);
  const DickeSpace space(n_spins);
  const Matrix u = frame_unitary(space, model.frame);
  SpinOperator h = realize_hamiltonian(model, space);
  h.matrix *= model.sign();
  const SpinState canonical{space, u * coherent_state(space, initial).amplitudes};
  const SpinState evolved = evolve(canonical, h, t);
  return {space, std::polar(1.0, -model.dropped_constant * t) *
                     (u.adjoint() * evolved.amplitudes)};
}

namespace {

// Pauli matrix `axis` acting on qubit `q`; bit value 0 is spin up.
void apply_pauli(const Vector& in, int q, int axis, Vector& out) {
  const std::size_t mask = std::size_t{1} << q;
  const auto n = static_cast<std::size_t>(in.size());
  for (std::size_t idx = 0; idx < n; ++idx) {
    const bool down = (idx & mask) != 0;
    switch (axis) {
      case 0: out(idx ^ mask) = in(idx); break;
      // s_y |up> = i |down>, s_y |down> = -i |up>
      case 1: out(idx ^ mask) = (down ? cplx(0, -1) : cplx(0, 1)) * in(idx); break;
      default: out(idx) = down ? -in(idx) : in(idx); break;
    }
  }
}

struct PairHamiltonian {
  int n_spins;
  Eigen::Matrix3d chi;

  Vector apply(const Vector& psi) const {
    Vector out = Vector::Zero(psi.size());
    Vector first(psi.size());
    Vector second(psi.size());
    for (int j = 0; j < n_spins; ++j) {
      for (int a = 0; a < 3; ++a) {
        if (chi.row(a).cwiseAbs().maxCoeff() == 0.0) continue;
        apply_pauli(psi, j, a, first);
        for (int k = j + 1; k < n_spins; ++k) {
          for (int b = 0; b < 3; ++b) {
            if (chi(a, b) == 0.0) continue;
            apply_pauli(first, k, b, second);
            out += chi(a, b) * second;
          }
        }
      }
    }
    return out;
  }

  double norm_bound() const {
    return 0.5 * n_spins * (n_spins - 1) * chi.cwiseAbs().sum();
  }
};

double binomial(int n, int k) {
  return std::exp(std::lgamma(n + 1.0) - std::lgamma(k + 1.0) - std::lgamma(n - k + 1.0));
}

}  // namespace

ProductSpaceEvolution evolve_full_product_space(int n_spins,
                                                const CouplingMatrix& coupling,
                                                const BlochAngles& initial, double t) {
  if (n_spins < 1) {
    throw Error(ErrorKind::InvalidSize, "n_spins must be >= 1");
  }
  if (n_spins > kMaxProductSpaceSpins) {
    throw Error(ErrorKind::TooLarge,
                "product-space evolution is limited to " +
                    std::to_string(kMaxProductSpaceSpins) + " spins");
  }
  const std::size_t full_dim = std::size_t{1} << n_spins;

  // Product state of cos(theta/2)|up> + e^{i phi} sin(theta/2)|down>.
  const cplx up = std::cos(0.5 * initial.theta);
  const cplx down = std::polar(std::sin(0.5 * initial.theta), initial.phi);
  Vector psi(full_dim);
  for (std::size_t idx = 0; idx < full_dim; ++idx) {
    const int n_down = std::popcount(idx);
    psi(idx) = std::pow(up, n_spins - n_down) * std::pow(down, n_down);
  }

  const PairHamiltonian h{n_spins, 0.5 * (coupling.chi + coupling.chi.transpose())};
  const double bound = h.norm_bound();
  if (t != 0.0 && bound > 0.0) {
    const int steps = std::max(1, static_cast<int>(std::ceil(std::abs(t) * bound / 0.5)));
    const double dt = t / steps;
    for (int s = 0; s < steps; ++s) {
      Vector term = psi;
      Vector sum = psi;
      for (int order = 1; order < 60; ++order) {
        term = (cplx(0.0, -dt) / static_cast<double>(order)) * h.apply(term);
        sum += term;
        if (term.norm() < 1e-17 * sum.norm()) break;
      }
      psi = sum;
    }
  }

  const DickeSpace space(n_spins);
  Vector projected = Vector::Zero(space.dim());
  for (std::size_t idx = 0; idx < full_dim; ++idx) projected(std::popcount(idx)) += psi(idx);
  for (int k = 0; k <= n_spins; ++k) projected(k) /= std::sqrt(binomial(n_spins, k));

  ProductSpaceEvolution result{{space, projected}, projected.norm()};
  return result;
}

}  // namespace spinsq

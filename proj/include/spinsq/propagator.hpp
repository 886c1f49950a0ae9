#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <mutex>
#include <unordered_map>
#include <variant>
#include <vector>

#include "spinsq/canonicalizer.hpp"
#include "spinsq/spin_algebra.hpp"
#include "spinsq/state.hpp"

namespace spinsq {

/// Instantaneous rotation exp(-i angle n.S).
struct PulseSegment {
  Eigen::Vector3d axis = Eigen::Vector3d::UnitZ();
  double angle = 0.0;
};

/// Free evolution for `duration`. A null `hamiltonian` means the schedule's
/// base Hamiltonian; a non-null one overrides it for this segment only.
struct FreeSegment {
  double duration = 0.0;
  std::shared_ptr<const SpinOperator> hamiltonian;
};

using EvolutionSegment = std::variant<PulseSegment, FreeSegment>;

/// Piecewise schedule made of `cycle_count` cycles of `segments_per_cycle`
/// segments each, stored flat. t1, t2 are the nominal free durations.
struct PulseSchedule {
  std::vector<EvolutionSegment> segments;
  int segments_per_cycle = 0;
  int cycle_count = 0;
  double t1 = 0.0;
  double t2 = 0.0;

  double cycle_time() const { return t1 + t2; }
  double total_time() const { return cycle_count * cycle_time(); }
};

/// Called at t = 0 and after every `sample_every`-th cycle with the number of
/// completed cycles, the elapsed (actual) time and the current state.
using CycleObserver = std::function<void(int cycle, double t, const SpinState&)>;

/// Exact evolution with a per-Hamiltonian eigendecomposition cache.
///
/// The cache key is a content hash of the matrix; collisions are resolved by
/// full comparison. Lookups and inserts are serialized by a mutex, so one
/// instance can be shared between worker threads.
class Propagator {
 public:
  std::shared_ptr<const HermitianEigensystem> eigensystem(const SpinOperator& h);

  SpinState evolve(const SpinState& state, const SpinOperator& h, double t);

  void run_schedule(SpinState& state, const PulseSchedule& schedule,
                    const SpinOperator& base_hamiltonian, const RotationKit& rotations,
                    int sample_every, const CycleObserver& observer);

  std::size_t cache_size() const;

 private:
  struct Entry {
    Matrix matrix;
    std::shared_ptr<const HermitianEigensystem> eigen;
  };
  mutable std::mutex mutex_;
  std::unordered_map<std::uint64_t, std::vector<Entry>> cache_;
};

/// Uncached exp(-i H t) |psi>. Throws NotHermitian.
SpinState evolve(const SpinState& state, const SpinOperator& h, double t);

/// Applies the schedule to `state` using the canonical model Hamiltonian and
/// returns the snapshots taken every `sample_every` cycles (t = 0 included).
struct ScheduleSnapshots {
  std::vector<int> cycles;
  std::vector<double> times;
  std::vector<SpinState> states;
};
ScheduleSnapshots run_schedule(const SpinState& state, const PulseSchedule& schedule,
                               const LMGModel& model, int sample_every = 1);

/// Lab-frame evolution of a coherent state under the pairwise coupling,
/// computed in the Dicke basis: canonicalize, rotate the state into the
/// canonical frame, evolve with the signed canonical Hamiltonian, rotate
/// back and restore the dropped-constant phase.
SpinState evolve_lab_frame(const CouplingMatrix& coupling, int n_spins,
                           const BlochAngles& initial, double t);

/// Reference evolution in the full 2^N product space.
struct ProductSpaceEvolution {
  SpinState projected;          // Dicke-basis amplitudes of the evolved state
  double symmetric_norm = 0.0;  // norm retained by the symmetric projection
};

constexpr int kMaxProductSpaceSpins = 12;

/// Evolves the product coherent state under H = sum_{j<k} chi_ab s_a^j s_b^k
/// with a matrix-free Taylor integrator, then projects onto the Dicke basis.
ProductSpaceEvolution evolve_full_product_space(int n_spins,
                                                const CouplingMatrix& coupling,
                                                const BlochAngles& initial, double t);

}  // namespace spinsq

#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "json.hpp"

#include "spinsq/canonicalizer.hpp"
#include "spinsq/pulse_designer.hpp"
#include "spinsq/squeezing.hpp"

namespace spinsq {

using Cell = std::variant<double, std::int64_t, std::string>;

/// Column-oriented dataset emitted as one CSV file.
struct Table {
  std::string name;
  std::vector<std::string> columns;
  std::vector<std::vector<Cell>> rows;

  void add_row(std::vector<Cell> row);
  std::size_t column_index(std::string_view column) const;
  /// Numeric cell; integer cells are widened.
  double number(std::size_t row, std::string_view column) const;
  /// RFC 4180 text; doubles use 17 significant digits.
  std::string to_csv() const;
};

struct ExperimentResult {
  std::string experiment;
  nlohmann::json metadata = nlohmann::json::object();
  std::vector<Table> tables;
  /// Headline numbers for the summary line; NaN when not applicable.
  double xi2_min = std::numeric_limits<double>::quiet_NaN();
  double t_min = std::numeric_limits<double>::quiet_NaN();

  const Table& table(std::string_view name) const;
};

/// Writes `descriptor` as descriptor.json and every table as <name>.csv.
void write_result(const ExperimentResult& result, const nlohmann::json& descriptor,
                  const std::filesystem::path& dir);

struct HarnessOptions {
  MinimizeOptions minimize;
  int workers = 1;
  /// Upper bound on N chi t_c for pulse schedules.
  double max_step = 0.05;
  std::optional<int> cycles;
  Branch branch = Branch::A;
  /// Pulsed-run horizon in units of 1 / (chi N). Defaults to 1.2 times the
  /// optimal time of the slowest effective dynamics being compared.
  std::optional<double> horizon;
};

std::vector<double> linspace(double lo, double hi, int points);
double to_db(double xi2);

/// Least-squares slope and intercept of log(y) against log(x).
std::pair<double, double> log_log_fit(const std::vector<double>& x,
                                      const std::vector<double>& y);

/// Trajectory of xi^2 sampled at cycle boundaries of a pulsed schedule.
/// The minimum is the first local minimum among the samples.
SqueezingTrace pulsed_trace(const LMGModel& model, const PulseDesign& design,
                            double horizon, const HarnessOptions& options,
                            Propagator& propagator);

/// Trace of xi^2 under the bare canonical Hamiltonian.
ExperimentResult evolve_experiment(const LMGModel& model, const BlochAngles& initial,
                                   const HarnessOptions& options = {});

/// Minimum xi^2 over a theta x phi grid of initial coherent states.
ExperimentResult sweep_initial_state(const LMGModel& model,
                                     const std::vector<double>& theta_grid,
                                     const std::vector<double>& phi_grid,
                                     const HarnessOptions& options = {});

/// Optimal (theta0, phi0) for each gamma.
ExperimentResult sweep_optimal_angles(int n_spins, double chi,
                                      const std::vector<double>& gammas,
                                      const std::vector<double>& theta_grid,
                                      const std::vector<double>& phi_grid,
                                      const HarnessOptions& options = {});

/// (gamma, xi2_min, t_min) from |pi/2, pi/2>.
ExperimentResult sweep_gamma(int n_spins, const std::vector<double>& gamma_grid,
                             double chi = 1.0, const HarnessOptions& options = {});

/// Bare LMG, reference TAT at the reference axis' chi_eff, z-pulsed and
/// y-pulsed traces on one time grid.
ExperimentResult compare_pulsed(const LMGModel& model, Axis reference_axis = Axis::Z,
                                const HarnessOptions& options = {});

enum class Variant { OAT, TAT, LMG, Pulsed };
std::string_view to_string(Variant v);
Variant parse_variant(std::string_view name);

ExperimentResult scaling_study(double gamma, const std::vector<int>& n_grid,
                               const std::vector<Variant>& variants, double chi = 1.0,
                               Axis pulse_axis = Axis::Z,
                               const HarnessOptions& options = {});

enum class NoiseChannel { PulseSeparation, PulseArea, Gamma, Chi, AtomNumber, PulsePhase };
enum class NoiseScope { PerRun, PerPulse, PerSegment };

std::string_view to_string(NoiseChannel c);
std::string_view to_string(NoiseScope s);
NoiseChannel parse_noise_channel(std::string_view name);
NoiseScope parse_noise_scope(std::string_view name);
NoiseScope default_scope(NoiseChannel c);

struct NoiseSpec {
  NoiseChannel channel = NoiseChannel::PulseSeparation;
  double relative_sigma = 0.0;
  NoiseScope scope = NoiseScope::PerSegment;
};

/// Throws InvalidArgument for scopes that make no sense for the channel.
void validate(const NoiseSpec& spec);

/// Independent random stream for (seed, run, channel); a counter-based split
/// so results do not depend on execution order or on other channels.
std::uint64_t stream_seed(std::uint64_t root, std::uint64_t run, std::uint64_t channel);

ExperimentResult noise_monte_carlo(const LMGModel& model, Axis axis,
                                   const std::vector<NoiseSpec>& noise, int n_runs,
                                   std::uint64_t seed, const HarnessOptions& options = {});

}  // namespace spinsq

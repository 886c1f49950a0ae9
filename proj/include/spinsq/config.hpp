#pragma once

#include <array>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

#include "spinsq/experiments.hpp"

namespace spinsq {

inline constexpr std::string_view kToolVersion = "0.1.0";

/// Evenly spaced grid written as {"start", "stop", "points"}.
struct GridSpec {
  double start = 0.0;
  double stop = 0.0;
  int points = 1;

  std::vector<double> values() const { return linspace(start, stop, points); }
};

struct NoiseEntry {
  NoiseChannel channel = NoiseChannel::PulseSeparation;
  double sigma = 0.0;
  NoiseScope scope = NoiseScope::PerSegment;
};

struct RunConfig {
  std::string experiment;
  std::optional<std::array<double, 9>> coupling;
  std::optional<double> chi;
  std::optional<double> gamma;
  int n_spins = 0;
  BlochAngles initial{1.5707963267948966, 1.5707963267948966};

  Axis axis = Axis::Z;
  Branch branch = Branch::A;
  double max_step = 0.05;
  std::optional<int> cycles;
  std::optional<double> horizon;  // pulsed runs, units of 1 / (chi N)
  double tau_max = 5.0;
  int grid_points = 2000;

  GridSpec theta_grid{0.0, 3.141592653589793, 33};
  GridSpec phi_grid{0.0, 3.141592653589793, 33};
  std::vector<double> gammas;  // sweep-initial-state over several gammas
  GridSpec gamma_grid{0.0, 0.5, 11};
  std::vector<int> n_grid{50, 100, 200, 400};
  std::vector<Variant> variants{Variant::OAT, Variant::TAT, Variant::LMG, Variant::Pulsed};

  std::vector<NoiseEntry> noise;
  int n_runs = 100;
  std::uint64_t seed = 0;
  int workers = 1;
  std::string output_dir = "out";
};

const std::vector<std::string>& experiment_names();

/// Parses JSON text. Unknown keys, missing fields and range violations raise
/// Error(Config) with the field path in the message. A top-level
/// "_descriptor" key is ignored.
RunConfig parse_config(std::string_view text);
RunConfig config_from_json(const nlohmann::json& j);

/// Fully resolved config; parse_config(to_json(c).dump()) reproduces c.
nlohmann::json to_json(const RunConfig& config);

HarnessOptions harness_options(const RunConfig& config);

/// Model implied by the config's coupling or (chi, gamma).
LMGModel resolve_model(const RunConfig& config);

struct RunOutput {
  ExperimentResult result;
  nlohmann::json descriptor;
  std::string summary;
};

/// Runs the experiment without touching the filesystem.
RunOutput execute(const RunConfig& config);

/// execute + write_result + summary on `out`. Errors are reported on `err`
/// as "error: <Category>: <message>" and mapped to exit codes.
int run(const RunConfig& config, std::ostream& out, std::ostream& err);

}  // namespace spinsq

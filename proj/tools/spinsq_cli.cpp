#include <fstream>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "json.hpp"

#include "spinsq/config.hpp"
#include "spinsq/errors.hpp"

using nlohmann::json;
using spinsq::Error;
using spinsq::ErrorKind;

namespace {

struct Flags {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::optional<int> workers;
  std::optional<std::string> out;
  std::optional<int> n_spins;
  std::optional<double> chi;
  std::optional<double> gamma;
  std::vector<double> coupling;
  std::optional<double> theta;
  std::optional<double> phi;
  std::optional<std::string> axis;
  std::optional<std::string> branch;
  std::optional<double> max_step;
  std::optional<int> cycles;
  std::optional<double> horizon;
  std::optional<double> tau_max;
  std::optional<int> grid_points;
  std::optional<int> n_runs;
  std::vector<std::string> noise;
};

json read_config(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::Io, "cannot read config file " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  try {
    return json::parse(ss.str());
  } catch (const json::parse_error& e) {
    throw Error(ErrorKind::Config, path + ": malformed JSON: " + e.what());
  }
}

json parse_noise_flag(const std::string& text) {
  std::vector<std::string> parts;
  std::stringstream ss(text);
  for (std::string p; std::getline(ss, p, ':');) parts.push_back(p);
  if (parts.size() < 2 || parts.size() > 3) {
    throw Error(ErrorKind::Config, "--noise: expected channel:sigma[:scope], got '" + text + "'");
  }
  json e = {{"channel", parts[0]}};
  try {
    std::size_t used = 0;
    e["sigma"] = std::stod(parts[1], &used);
    if (used != parts[1].size()) throw std::invalid_argument("trailing characters");
  } catch (const std::logic_error&) {
    throw Error(ErrorKind::Config, "--noise: bad sigma '" + parts[1] + "'");
  }
  if (parts.size() == 3) e["scope"] = parts[2];
  return e;
}

json merged_config(const std::string& experiment, const Flags& f) {
  json j = f.config_path.empty() ? json::object() : read_config(f.config_path);
  if (!j.is_object()) throw Error(ErrorKind::Config, "config: expected an object");
  j["experiment"] = experiment;
  auto set = [&](const char* key, const auto& opt) {
    if (opt) j[key] = *opt;
  };
  set("seed", f.seed);
  set("workers", f.workers);
  set("output_dir", f.out);
  set("n_spins", f.n_spins);
  set("axis", f.axis);
  set("branch", f.branch);
  set("max_step", f.max_step);
  set("cycles", f.cycles);
  set("horizon", f.horizon);
  set("tau_max", f.tau_max);
  set("grid_points", f.grid_points);
  set("n_runs", f.n_runs);
  if (!f.coupling.empty() && (f.chi || f.gamma)) {
    throw Error(ErrorKind::Config, "--coupling and --chi/--gamma are mutually exclusive");
  }
  if (!f.coupling.empty()) {
    j["coupling"] = f.coupling;
    j.erase("chi");
    j.erase("gamma");
  }
  if (f.chi || f.gamma) {
    j.erase("coupling");
    set("chi", f.chi);
    set("gamma", f.gamma);
  }
  if (f.theta || f.phi) {
    if (!j.contains("initial") || !j["initial"].is_object()) j["initial"] = json::object();
    if (f.theta) j["initial"]["theta"] = *f.theta;
    if (f.phi) j["initial"]["phi"] = *f.phi;
  }
  if (!f.noise.empty()) {
    json noise = json::array();
    for (const auto& n : f.noise) noise.push_back(parse_noise_flag(n));
    j["noise"] = noise;
  }
  return j;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Spin-squeezing simulator for collective spin models"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(spinsq::kToolVersion));

  Flags f;
  for (const std::string& name : spinsq::experiment_names()) {
    CLI::App* sub = app.add_subcommand(name);
    sub->add_option("--config", f.config_path, "JSON config file")->check(CLI::ExistingFile);
    sub->add_option("--seed", f.seed, "root RNG seed");
    sub->add_option("--workers", f.workers, "worker threads");
    sub->add_option("--out", f.out, "output directory");
    sub->add_option("--n-spins", f.n_spins);
    sub->add_option("--chi", f.chi);
    sub->add_option("--gamma", f.gamma);
    sub->add_option("--coupling", f.coupling, "9 row-major coupling entries")->expected(9);
    sub->add_option("--theta", f.theta);
    sub->add_option("--phi", f.phi);
    sub->add_option("--axis", f.axis, "pulse axis x|y|z");
    sub->add_option("--branch", f.branch, "timing branch A|B");
    sub->add_option("--max-step", f.max_step, "max chi N t_c per cycle");
    sub->add_option("--cycles", f.cycles);
    sub->add_option("--horizon", f.horizon, "pulsed horizon in units of 1/(chi N)");
    sub->add_option("--tau-max", f.tau_max, "scan horizon in units of 1/(chi N)");
    sub->add_option("--grid-points", f.grid_points);
    sub->add_option("--n-runs", f.n_runs);
    sub->add_option("--noise", f.noise, "channel:sigma[:scope], repeatable");
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : spinsq::exit_code(ErrorKind::Config);
  }

  const std::string experiment = app.get_subcommands().front()->get_name();
  spinsq::RunConfig config;
  try {
    config = spinsq::config_from_json(merged_config(experiment, f));
  } catch (const Error& e) {
    std::cerr << "error: " << spinsq::to_string(e.kind()) << ": " << e.what() << "\n";
    return spinsq::exit_code(e.kind());
  }
  return spinsq::run(config, std::cout, std::cerr);
}

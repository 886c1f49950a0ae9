#include "spinsq/config.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <ostream>
#include <set>

#include "spinsq/errors.hpp"

namespace spinsq {

namespace {

using nlohmann::json;

[[noreturn]] void fail(const std::string& path, const std::string& message) {
  throw Error(ErrorKind::Config, path + ": " + message);
}

std::string child(const std::string& path, std::string_view key) {
  return path + "." + std::string(key);
}

std::string item(const std::string& path, std::size_t i) {
  return path + "[" + std::to_string(i) + "]";
}

double get_number(const json& v, const std::string& path) {
  if (!v.is_number()) fail(path, "expected a number");
  const double d = v.get<double>();
  if (!std::isfinite(d)) fail(path, "must be finite");
  return d;
}

std::int64_t get_integer(const json& v, const std::string& path) {
  if (v.is_number_integer()) return v.get<std::int64_t>();
  if (v.is_number_float()) {
    const double d = v.get<double>();
    if (std::isfinite(d) && d == std::floor(d) && std::abs(d) < 9e15)
      return static_cast<std::int64_t>(d);
  }
  fail(path, "expected an integer");
}

int get_int(const json& v, const std::string& path, int lo) {
  const std::int64_t i = get_integer(v, path);
  if (i < lo || i > 1'000'000'000) fail(path, "must be an integer >= " + std::to_string(lo));
  return static_cast<int>(i);
}

std::string get_string(const json& v, const std::string& path) {
  if (!v.is_string()) fail(path, "expected a string");
  return v.get<std::string>();
}

template <class Parse>
auto parse_enum(const json& v, const std::string& path, Parse parse) {
  const std::string s = get_string(v, path);
  try {
    return parse(s);
  } catch (const Error& e) {
    fail(path, e.what());
  }
}

void check_keys(const json& obj, const std::string& path,
                std::initializer_list<std::string_view> allowed) {
  if (!obj.is_object()) fail(path, "expected an object");
  for (const auto& [key, value] : obj.items()) {
    if (key == "_descriptor" && path == "config") continue;
    if (std::find(allowed.begin(), allowed.end(), key) == allowed.end()) {
      fail(child(path, key), "unknown key");
    }
  }
}

GridSpec parse_grid(const json& v, const std::string& path) {
  check_keys(v, path, {"start", "stop", "points"});
  GridSpec g;
  for (const char* k : {"start", "stop", "points"})
    if (!v.contains(k)) fail(child(path, k), "missing required field");
  g.start = get_number(v["start"], child(path, "start"));
  g.stop = get_number(v["stop"], child(path, "stop"));
  g.points = get_int(v["points"], child(path, "points"), 1);
  return g;
}

json grid_json(const GridSpec& g) {
  return {{"start", g.start}, {"stop", g.stop}, {"points", g.points}};
}

void require_range(bool ok, const std::string& path, const std::string& what) {
  if (!ok) fail(path, what);
}

bool needs_model(const std::string& experiment) {
  return experiment != "sweep-gamma";
}

bool needs_n_spins(const std::string& experiment) {
  return experiment != "scaling";
}

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

json model_descriptor(const LMGModel& m) {
  json frame = json::array();
  for (int r = 0; r < 3; ++r) frame.push_back({m.frame(r, 0), m.frame(r, 1), m.frame(r, 2)});
  return {{"chi", m.chi},
          {"gamma", m.gamma},
          {"n_spins", m.n_spins},
          {"sign_flipped", m.sign_flipped},
          {"frame", frame},
          {"dropped_constant", m.dropped_constant}};
}

ExperimentResult canonicalize_result(const LMGModel& m) {
  ExperimentResult r;
  r.experiment = "canonicalize";
  Table t{"model", {"chi", "gamma", "sign_flipped", "dropped_constant", "frame_00", "frame_01",
                    "frame_02", "frame_10", "frame_11", "frame_12", "frame_20", "frame_21",
                    "frame_22"},
          {}};
  std::vector<Cell> row{m.chi, m.gamma, std::int64_t{m.sign_flipped}, m.dropped_constant};
  for (int a = 0; a < 3; ++a)
    for (int b = 0; b < 3; ++b) row.emplace_back(m.frame(a, b));
  t.add_row(std::move(row));
  r.tables = {std::move(t)};
  return r;
}

ExperimentResult design_result(const LMGModel& m, const RunConfig& c) {
  const PulseDesign d = design(m, c.axis, c.branch);
  const double tc = c.max_step / (m.chi * m.n_spins);
  const double t1 = d.already_tat ? tc : tc / (1.0 + d.ratio_t2_t1);
  const double t2 = d.already_tat ? 0.0 : tc - t1;
  ExperimentResult r;
  r.experiment = "design";
  Table t{"design",
          {"axis", "branch", "ratio_t2_t1", "chi_eff", "effective_form", "stationary_axis",
           "already_tat", "initial_theta", "initial_phi", "cycle_time", "t1", "t2"},
          {}};
  const BlochAngles a = d.initial_angles();
  t.add_row({std::string(to_string(d.axis)), std::string(to_string(d.branch)), d.ratio_t2_t1,
             d.chi_eff, d.effective_form(), std::string(to_string(d.stationary_axis)),
             std::int64_t{d.already_tat}, a.theta, a.phi, tc, t1, t2});
  r.tables = {std::move(t)};
  if (m.gamma < 0.5 - 1e-12) {
    const AxisComparison cmp = compare_axes(m);
    r.metadata["chi_eff_z"] = cmp.chi_eff_z;
    r.metadata["chi_eff_y"] = cmp.chi_eff_y;
    r.metadata["z_faster"] = cmp.z_faster;
  }
  return r;
}

}  // namespace

const std::vector<std::string>& experiment_names() {
  static const std::vector<std::string> names{"canonicalize", "design", "evolve",
                                              "sweep-initial-state", "sweep-gamma",
                                              "compare-pulsed", "scaling", "noise"};
  return names;
}

RunConfig config_from_json(const json& j) {
  const std::string root = "config";
  check_keys(j, root,
             {"experiment", "coupling", "chi", "gamma", "n_spins", "initial", "axis", "branch",
              "max_step", "cycles", "horizon", "tau_max", "grid_points", "theta_grid",
              "phi_grid", "gammas", "gamma_grid", "n_grid", "variants", "noise", "n_runs",
              "seed", "workers", "output_dir"});
  RunConfig c;
  auto has = [&](const char* k) { return j.contains(k) && !j[k].is_null(); };
  auto path = [&](std::string_view k) { return child(root, k); };

  if (!has("experiment")) fail(path("experiment"), "missing required field");
  c.experiment = get_string(j["experiment"], path("experiment"));
  const auto& names = experiment_names();
  if (std::find(names.begin(), names.end(), c.experiment) == names.end()) {
    fail(path("experiment"), "unknown experiment '" + c.experiment + "'");
  }

  if (has("coupling")) {
    const json& v = j["coupling"];
    if (!v.is_array() || v.size() != 9) fail(path("coupling"), "expected 9 numbers (row-major)");
    std::array<double, 9> a{};
    for (std::size_t i = 0; i < 9; ++i) a[i] = get_number(v[i], item(path("coupling"), i));
    c.coupling = a;
  }
  if (has("chi")) c.chi = get_number(j["chi"], path("chi"));
  if (has("gamma")) c.gamma = get_number(j["gamma"], path("gamma"));
  if (c.coupling && (c.chi || c.gamma)) {
    fail(root, std::string("config.coupling and config.") + (c.chi ? "chi" : "gamma") +
                   " are mutually exclusive; give either coupling or (chi, gamma)");
  }
  if (c.chi) require_range(*c.chi > 0.0, path("chi"), "must be > 0");
  if (c.gamma) require_range(*c.gamma >= 0.0 && *c.gamma <= 1.0, path("gamma"), "must lie in [0, 1]");
  if (needs_model(c.experiment) && !c.coupling) {
    if (!c.chi && !c.gamma) fail(root, "missing model: give config.coupling or config.chi and config.gamma");
    if (!c.chi) fail(path("chi"), "missing required field");
    if (!c.gamma) fail(path("gamma"), "missing required field");
  }

  if (has("n_spins")) c.n_spins = get_int(j["n_spins"], path("n_spins"), 1);
  else if (needs_n_spins(c.experiment)) fail(path("n_spins"), "missing required field");

  if (has("initial")) {
    const std::string p = path("initial");
    check_keys(j["initial"], p, {"theta", "phi"});
    if (j["initial"].contains("theta")) c.initial.theta = get_number(j["initial"]["theta"], child(p, "theta"));
    if (j["initial"].contains("phi")) c.initial.phi = get_number(j["initial"]["phi"], child(p, "phi"));
  }
  if (has("axis")) c.axis = parse_enum(j["axis"], path("axis"), parse_axis);
  if (has("branch")) c.branch = parse_enum(j["branch"], path("branch"), parse_branch);
  if (has("max_step")) {
    c.max_step = get_number(j["max_step"], path("max_step"));
    require_range(c.max_step > 0.0, path("max_step"), "must be > 0");
  }
  if (has("cycles")) c.cycles = get_int(j["cycles"], path("cycles"), 1);
  if (has("horizon")) {
    c.horizon = get_number(j["horizon"], path("horizon"));
    require_range(*c.horizon > 0.0, path("horizon"), "must be > 0");
  }
  if (has("tau_max")) {
    c.tau_max = get_number(j["tau_max"], path("tau_max"));
    require_range(c.tau_max > 0.0, path("tau_max"), "must be > 0");
  }
  if (has("grid_points")) c.grid_points = get_int(j["grid_points"], path("grid_points"), 3);
  if (has("theta_grid")) c.theta_grid = parse_grid(j["theta_grid"], path("theta_grid"));
  if (has("phi_grid")) c.phi_grid = parse_grid(j["phi_grid"], path("phi_grid"));
  if (has("gammas")) {
    const json& v = j["gammas"];
    if (!v.is_array()) fail(path("gammas"), "expected an array of numbers");
    c.gammas.clear();
    for (std::size_t i = 0; i < v.size(); ++i) {
      const double g = get_number(v[i], item(path("gammas"), i));
      require_range(g >= 0.0 && g <= 1.0, item(path("gammas"), i), "must lie in [0, 1]");
      c.gammas.push_back(g);
    }
  }
  if (has("gamma_grid")) {
    c.gamma_grid = parse_grid(j["gamma_grid"], path("gamma_grid"));
    const std::string p = path("gamma_grid");
    require_range(c.gamma_grid.start >= 0.0 && c.gamma_grid.start <= 0.5, child(p, "start"),
                  "must lie in [0, 0.5]");
    require_range(c.gamma_grid.stop >= 0.0 && c.gamma_grid.stop <= 0.5, child(p, "stop"),
                  "must lie in [0, 0.5]");
  }
  if (has("n_grid")) {
    const json& v = j["n_grid"];
    if (!v.is_array() || v.size() < 2) fail(path("n_grid"), "expected two or more integers");
    c.n_grid.clear();
    for (std::size_t i = 0; i < v.size(); ++i) {
      c.n_grid.push_back(get_int(v[i], item(path("n_grid"), i), 1));
      if (i > 0 && c.n_grid[i] <= c.n_grid[i - 1]) fail(path("n_grid"), "must be strictly ascending");
    }
  }
  if (has("variants")) {
    const json& v = j["variants"];
    if (!v.is_array() || v.empty()) fail(path("variants"), "expected a non-empty array");
    c.variants.clear();
    for (std::size_t i = 0; i < v.size(); ++i)
      c.variants.push_back(parse_enum(v[i], item(path("variants"), i), parse_variant));
  }
  if (has("noise")) {
    const json& v = j["noise"];
    if (!v.is_array()) fail(path("noise"), "expected an array");
    std::set<NoiseChannel> seen;
    for (std::size_t i = 0; i < v.size(); ++i) {
      const std::string p = item(path("noise"), i);
      check_keys(v[i], p, {"channel", "sigma", "scope"});
      if (!v[i].contains("channel")) fail(child(p, "channel"), "missing required field");
      if (!v[i].contains("sigma")) fail(child(p, "sigma"), "missing required field");
      NoiseEntry e;
      e.channel = parse_enum(v[i]["channel"], child(p, "channel"), parse_noise_channel);
      e.sigma = get_number(v[i]["sigma"], child(p, "sigma"));
      require_range(e.sigma >= 0.0, child(p, "sigma"), "must be >= 0");
      e.scope = v[i].contains("scope") ? parse_enum(v[i]["scope"], child(p, "scope"), parse_noise_scope)
                                       : default_scope(e.channel);
      try {
        validate(NoiseSpec{e.channel, e.sigma, e.scope});
      } catch (const Error& err) {
        fail(child(p, "scope"), err.what());
      }
      if (!seen.insert(e.channel).second) fail(child(p, "channel"), "channel listed twice");
      c.noise.push_back(e);
    }
  }
  if (has("n_runs")) c.n_runs = get_int(j["n_runs"], path("n_runs"), 1);
  if (has("seed")) {
    const json& v = j["seed"];
    if (v.is_number_unsigned()) c.seed = v.get<std::uint64_t>();
    else {
      const std::int64_t s = get_integer(v, path("seed"));
      require_range(s >= 0, path("seed"), "must be >= 0");
      c.seed = static_cast<std::uint64_t>(s);
    }
  }
  if (has("workers")) c.workers = get_int(j["workers"], path("workers"), 1);
  if (has("output_dir")) {
    c.output_dir = get_string(j["output_dir"], path("output_dir"));
    require_range(!c.output_dir.empty(), path("output_dir"), "must not be empty");
  }
  return c;
}

RunConfig parse_config(std::string_view text) {
  json j;
  try {
    j = json::parse(text.begin(), text.end());
  } catch (const json::parse_error& e) {
    throw Error(ErrorKind::Config, std::string("config: malformed JSON: ") + e.what());
  }
  return config_from_json(j);
}

json to_json(const RunConfig& c) {
  json j;
  j["experiment"] = c.experiment;
  if (c.coupling) j["coupling"] = *c.coupling;
  if (c.chi) j["chi"] = *c.chi;
  if (c.gamma) j["gamma"] = *c.gamma;
  if (c.n_spins > 0) j["n_spins"] = c.n_spins;
  j["initial"] = {{"theta", c.initial.theta}, {"phi", c.initial.phi}};
  j["axis"] = std::string(to_string(c.axis));
  j["branch"] = std::string(to_string(c.branch));
  j["max_step"] = c.max_step;
  if (c.cycles) j["cycles"] = *c.cycles;
  if (c.horizon) j["horizon"] = *c.horizon;
  j["tau_max"] = c.tau_max;
  j["grid_points"] = c.grid_points;
  j["theta_grid"] = grid_json(c.theta_grid);
  j["phi_grid"] = grid_json(c.phi_grid);
  j["gammas"] = c.gammas;
  j["gamma_grid"] = grid_json(c.gamma_grid);
  j["n_grid"] = c.n_grid;
  json variants = json::array();
  for (Variant v : c.variants) variants.push_back(std::string(to_string(v)));
  j["variants"] = variants;
  json noise = json::array();
  for (const auto& e : c.noise) {
    noise.push_back({{"channel", std::string(to_string(e.channel))},
                     {"sigma", e.sigma},
                     {"scope", std::string(to_string(e.scope))}});
  }
  j["noise"] = noise;
  j["n_runs"] = c.n_runs;
  j["seed"] = c.seed;
  j["workers"] = c.workers;
  j["output_dir"] = c.output_dir;
  return j;
}

HarnessOptions harness_options(const RunConfig& c) {
  HarnessOptions o;
  o.minimize.horizon = c.tau_max;
  o.minimize.grid_points = c.grid_points;
  o.workers = c.workers;
  o.max_step = c.max_step;
  o.cycles = c.cycles;
  o.branch = c.branch;
  o.horizon = c.horizon;
  return o;
}

LMGModel resolve_model(const RunConfig& c) {
  const int n = c.n_spins > 0 ? c.n_spins : 1;
  if (c.coupling) return canonicalize(CouplingMatrix::from_row_major(*c.coupling), n);
  return make_model(*c.chi, *c.gamma, n);
}

RunOutput execute(const RunConfig& c) {
  const HarnessOptions o = harness_options(c);
  RunOutput out;
  std::optional<LMGModel> model;
  if (needs_model(c.experiment)) model = resolve_model(c);

  const std::string& e = c.experiment;
  if (e == "canonicalize") {
    out.result = canonicalize_result(*model);
  } else if (e == "design") {
    out.result = design_result(*model, c);
  } else if (e == "evolve") {
    out.result = evolve_experiment(*model, c.initial, o);
  } else if (e == "sweep-initial-state") {
    out.result = c.gammas.empty()
                     ? sweep_initial_state(*model, c.theta_grid.values(), c.phi_grid.values(), o)
                     : sweep_optimal_angles(c.n_spins, model->chi, c.gammas,
                                            c.theta_grid.values(), c.phi_grid.values(), o);
  } else if (e == "sweep-gamma") {
    out.result = sweep_gamma(c.n_spins, c.gamma_grid.values(), c.chi.value_or(1.0), o);
  } else if (e == "compare-pulsed") {
    out.result = compare_pulsed(*model, c.axis, o);
  } else if (e == "scaling") {
    out.result = scaling_study(model->gamma, c.n_grid, c.variants, model->chi, c.axis, o);
  } else if (e == "noise") {
    std::vector<NoiseSpec> specs;
    for (const auto& n : c.noise) specs.push_back({n.channel, n.sigma, n.scope});
    out.result = noise_monte_carlo(*model, c.axis, specs, c.n_runs, c.seed, o);
  }

  out.descriptor = to_json(c);
  json meta = {{"tool", "spinsq"},
               {"version", std::string(kToolVersion)},
               {"experiment", out.result.experiment},
               {"metadata", out.result.metadata}};
  if (model) meta["model"] = model_descriptor(*model);
  json tables = json::object();
  for (const auto& t : out.result.tables) tables[t.name + ".csv"] = t.columns;
  meta["tables"] = tables;
  out.descriptor["_descriptor"] = meta;

  std::string s = c.experiment;
  if (e == "canonicalize") {
    s += " chi=" + format_double(model->chi) + " gamma=" + format_double(model->gamma) +
         " sign_flipped=" + (model->sign_flipped ? "true" : "false");
  } else if (e == "design") {
    const Table& t = out.result.table("design");
    s += " ratio_t2_t1=" + format_double(t.number(0, "ratio_t2_t1")) +
         " chi_eff=" + format_double(t.number(0, "chi_eff"));
  } else {
    s += " xi2_min=" + format_double(out.result.xi2_min) +
         " t_min=" + format_double(out.result.t_min);
  }
  s += " out=" + c.output_dir;
  out.summary = s;
  return out;
}

int run(const RunConfig& c, std::ostream& out, std::ostream& err) {
  try {
    const RunOutput r = execute(c);
    write_result(r.result, r.descriptor, c.output_dir);
    out << r.summary << "\n";
    return 0;
  } catch (const Error& e) {
    err << "error: " << to_string(e.kind()) << ": " << e.what() << "\n";
    return exit_code(e.kind());
  } catch (const std::exception& e) {
    err << "error: Internal: " << e.what() << "\n";
    return 1;
  }
}

}  // namespace spinsq
